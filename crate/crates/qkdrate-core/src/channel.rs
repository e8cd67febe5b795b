//! Channel models: honest (lossy fiber + dark counts) and adversarial
//! (intercept-resend with Gaussian time/frequency pulses and group-delay
//! dispersion), producing the observed statistics and the single-photon
//! statistics the bounding pipeline consumes.
//!
//! All TBS transmittances passed around here are the bare arm values
//! (eta_up / eta2 / eta_down); detector efficiencies eta_Z, eta_X and the
//! channel transmittance enter through the model where each formula says so.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::Result;
use crate::params::{
    setting_idx, AttackParams, Geometry, Model, Tbs, ETA_I_ORDER, SETTING_ORDER,
};
use crate::quad::quad_mesh;
use crate::special::{erf_real, gerf, gexp};

/// Observed multi-photon statistics per intensity: the inputs of the
/// decoy inversion and of the observed-rate formulas.
#[derive(Debug, Clone)]
pub struct ObservedStats {
    /// Z gains per diagonal TBS setting (`Tbs::idx`) and intensity.
    pub gz: [[f64; 3]; 3],
    /// X-click gains per (eta_i, eta_l) setting (`setting_idx`) and intensity.
    pub gxc: [[f64; 3]; 6],
    /// X-no-click gains per setting and intensity.
    pub gxe: [[f64; 3]; 6],
    /// Z-basis QBER per intensity, at eta_l = eta_down.
    pub qz: [f64; 3],
    /// X-basis QBER per eta_i (`Tbs::idx`) and intensity.
    pub qx: [[f64; 3]; 3],
}

/// Exact one-photon statistics (honest or adversarial channel).
#[derive(Debug, Clone, Default)]
pub struct SinglePhotonStats {
    /// Z yield / X yield / Z error / X error per diagonal setting.
    pub yz: [f64; 3],
    pub yx: [f64; 3],
    pub yze: [f64; 3],
    pub yxe: [f64; 3],
    /// Test-round X yields with and without a Z click, per setting.
    pub yxc: [f64; 6],
    pub yxem: [f64; 6],
    /// Test-round error products, per setting.
    pub pxc: [f64; 6],
    pub pxe: [f64; 6],
}

// ---------------------------------------------------------------------
// honest channel observables
// ---------------------------------------------------------------------

/// Z-basis gain at intensity `mu` with TBS arm `eta_i`. The
/// pd + (1-pd)(1-e^{-x}) form keeps the click part resolved to eps(pd)
/// absolute even when x ~ 1e-9, unlike 1-(1-pd)e^{-x} which loses it.
pub(crate) fn gain_z(m: &Model, mu: f64, eta_i: f64) -> f64 {
    m.pd_z + (1.0 - m.pd_z) * (-f64::exp_m1(-mu * m.eta * m.eta_z * (1.0 - eta_i)))
}

pub(crate) fn bracket_x(m: &Model, mu: f64, eta_i: f64) -> f64 {
    m.pd_x + (1.0 - m.pd_x) * (-f64::exp_m1(-mu * m.eta * m.eta_x * eta_i))
}

pub(crate) fn gain_x_click(m: &Model, mu: f64, eta_i: f64) -> f64 {
    gain_z(m, mu, eta_i) * bracket_x(m, mu, eta_i)
}

pub(crate) fn gain_x_empty(m: &Model, mu: f64, eta_i: f64) -> f64 {
    (1.0 - gain_z(m, mu, eta_i)) * bracket_x(m, mu, eta_i)
}

pub(crate) fn qber_z(m: &Model, mu: f64) -> f64 {
    let x = mu * m.eta * m.eta_z * (1.0 - m.eta_dn);
    let num = m.q_z * (-f64::exp_m1(-x)) + (1.0 - 1.0 / m.d as f64) * m.pd_z * (-x).exp();
    num / gain_z(m, mu, m.eta_dn)
}

pub(crate) fn qber_x(m: &Model, mu: f64, eta_i: f64) -> f64 {
    let x = mu * m.eta * m.eta_x * eta_i;
    let num = m.q_x * (-f64::exp_m1(-x)) + (1.0 - 1.0 / m.d as f64) * m.pd_x * (-x).exp();
    num / bracket_x(m, mu, eta_i)
}

/// Every observed gain/QBER cell of the honest channel.
pub fn honest_stats(m: &Model) -> ObservedStats {
    let mut gz = [[0.0; 3]; 3];
    let mut qx = [[0.0; 3]; 3];
    for k in ETA_I_ORDER {
        for (j, &mu) in m.mu.iter().enumerate() {
            gz[k.idx()][j] = gain_z(m, mu, m.eta_of(k));
            qx[k.idx()][j] = qber_x(m, mu, m.eta_of(k));
        }
    }
    let mut gxc = [[0.0; 3]; 6];
    let mut gxe = [[0.0; 3]; 6];
    for (i, l) in SETTING_ORDER {
        let s = setting_idx(i, l);
        for (j, &mu) in m.mu.iter().enumerate() {
            gxc[s][j] = gain_x_click(m, mu, m.eta_of(i));
            gxe[s][j] = gain_x_empty(m, mu, m.eta_of(i));
        }
    }
    let mut qz = [0.0; 3];
    for (j, &mu) in m.mu.iter().enumerate() {
        qz[j] = qber_z(m, mu);
    }
    ObservedStats { gz, gxc, gxe, qz, qx }
}

/// Exact one-photon yields and error products of the honest channel.
pub fn honest_single_photon(m: &Model) -> SinglePhotonStats {
    let d = m.d as f64;
    let mut sp = SinglePhotonStats::default();
    for k in ETA_I_ORDER {
        let el = m.eta_of(k);
        let tz = m.eta * (1.0 - el) * m.eta_z;
        let tx = m.eta * el * m.eta_x;
        sp.yz[k.idx()] = tz + (1.0 - tz) * m.pd_z;
        sp.yx[k.idx()] = tx + (1.0 - tx) * m.pd_x;
        sp.yze[k.idx()] = m.q_z * tz + (1.0 - 1.0 / d) * (1.0 - tz) * m.pd_z;
        sp.yxe[k.idx()] = m.q_x * tx + (1.0 - 1.0 / d) * (1.0 - tx) * m.pd_x;
    }
    for (i, l) in SETTING_ORDER {
        let s = setting_idx(i, l);
        let ei = m.eta_of(i);
        let yc = m.eta * ei * m.eta_x * m.pd_z
            + m.eta * (1.0 - ei) * m.eta_z * m.pd_x
            + m.pd_z
                * m.pd_x
                * (1.0 - m.eta
                    + m.eta * ei * (1.0 - m.eta_x)
                    + m.eta * (1.0 - ei) * (1.0 - m.eta_z));
        let ye = (1.0 - m.pd_z)
            * (m.eta * ei * m.eta_x
                + m.eta * ei * (1.0 - m.eta_x) * m.pd_x
                + m.eta * (1.0 - ei) * (1.0 - m.eta_z) * m.pd_x
                + (1.0 - m.eta) * m.pd_x);
        sp.yxc[s] = yc;
        sp.yxem[s] = ye;
        sp.pxc[s] = m.q_x * m.eta * ei * m.eta_x * m.pd_z
            + (1.0 - 1.0 / d) * (yc - m.eta * ei * m.eta_x * m.pd_z);
        sp.pxe[s] = m.q_x * m.eta * ei * m.eta_x * (1.0 - m.pd_z)
            + (1.0 - 1.0 / d) * (ye - m.eta * ei * m.eta_x * (1.0 - m.pd_z));
    }
    sp
}

// ---------------------------------------------------------------------
// adversarial channel: conditional click probabilities
// ---------------------------------------------------------------------

/// Width of Eve's time pulse after the receiver's dispersive element.
pub fn sigma_prime(geom: &Geometry, sigma: f64) -> f64 {
    // divisor is sqrt(2)*pi, not sqrt(2*pi)
    let m = Complex64::new(1.0 / (2.0 * sigma * sigma), 2.0 * std::f64::consts::PI.powi(2) * geom.phi2);
    sigma * m.norm() / (std::f64::consts::SQRT_2 * std::f64::consts::PI)
}

/// Pr(Z click in bin j' | Eve measured Z in bin j), modulo Eve-channel
/// transmittance: closed two-Erf form.
pub fn attack_prob_zz(geom: &Geometry, m: &Model, eta_i: f64, s: f64, j: usize, jp: usize) -> f64 {
    let tj = geom.t_z[j];
    let t = geom.t_z[jp];
    ((1.0 - eta_i) * m.eta_z / 2.0)
        * (erf_real((t - tj + geom.delta_j / 2.0) / s)
            + erf_real((-t + tj + geom.delta_j / 2.0) / s))
}

/// Pr(Z click in bin j' | Eve measured X in bin k): closed form with the
/// dispersed effective width sigma'.
pub fn attack_prob_zx(
    geom: &Geometry,
    m: &Model,
    eta_i: f64,
    sigma: f64,
    k: usize,
    jp: usize,
) -> f64 {
    let sp = sigma_prime(geom, sigma);
    let tk = geom.t_x[k];
    let t = geom.t_z[jp];
    let den = std::f64::consts::SQRT_2 * sp;
    ((1.0 - eta_i) * m.eta_z / 2.0)
        * (erf_real((t - tk + geom.delta_j / 2.0) / den)
            + erf_real((-t + tk + geom.delta_j / 2.0) / den))
}

/// Where Re((A t + B)/den) crosses zero, and the t-scale of the erf there.
fn cross_hint(a: Complex64, b: Complex64, den: Complex64) -> Option<(f64, f64)> {
    let ad = (a * den.conj()).re;
    if ad.abs() <= 1e-12 * a.norm() * den.norm() {
        return None;
    }
    Some((-(b * den.conj()).re / ad, den.norm() / a.norm()))
}

/// Pr(X click in bin k' | Eve measured Z in bin j): quadrature over the k'
/// bin of the interference integrand.
pub fn attack_prob_xz(
    geom: &Geometry,
    m: &Model,
    eta_i: f64,
    eta_l: f64,
    s: f64,
    j: usize,
    kp: usize,
) -> Result<f64> {
    let tj = geom.t_z[j];
    let w2 = s * s + (geom.phi2 / s).powi(2);
    let w = w2.sqrt();
    let a = geom.t_x[kp] - geom.delta_k / 2.0;
    let b = geom.t_x[kp] + geom.delta_k / 2.0;
    let (si, sl) = (eta_i.sqrt(), eta_l.sqrt());
    let den = 4.0 * s * geom.phi2.sqrt() * Complex64::new(s * s, -geom.phi2).sqrt();
    let dt = geom.delta_t;
    let phi2 = geom.phi2;
    let ip = Complex64::new(1.0, 1.0);
    let im = Complex64::new(1.0, -1.0);
    let integrand = move |t: f64| {
        let g = (t - tj) * (t - tj) / (2.0 * w2);
        let zp = (ip * s * s * (2.0 * t + dt) + im * (2.0 * tj + dt) * phi2) / den;
        let zm = (ip * s * s * (2.0 * t - dt) + im * (2.0 * tj - dt) * phi2) / den;
        // exp(-g)*amp, assembled from exp(-g)*erf terms (each bounded)
        let gamp = 2.0 * sl * gexp(g) + (si - sl) * (gerf(g, zp) - gerf(g, zm));
        gamp.norm_sqr() / (4.0 * std::f64::consts::PI.sqrt() * w)
    };
    let big_a = 2.0 * ip * s * s;
    let mut hints = vec![(tj, w / std::f64::consts::SQRT_2)];
    for bb in [
        ip * s * s * dt + im * (2.0 * tj + dt) * phi2,
        -ip * s * s * dt + im * (2.0 * tj - dt) * phi2,
    ] {
        if let Some(h) = cross_hint(big_a, bb, den) {
            hints.push(h);
        }
    }
    Ok(m.eta_x * quad_mesh(integrand, a, b, &hints)?)
}

/// Pr(X click in bin k' | Eve measured X in bin k): quadrature form.
pub fn attack_prob_xx(
    geom: &Geometry,
    m: &Model,
    eta_i: f64,
    eta_l: f64,
    sigma: f64,
    k: usize,
    kp: usize,
) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let tk = geom.t_x[k];
    let a = geom.t_x[kp] - geom.delta_k / 2.0;
    let b = geom.t_x[kp] + geom.delta_k / 2.0;
    let (si, sl) = (eta_i.sqrt(), eta_l.sqrt());
    let den = 2.0
        * (2.0 * geom.phi2).sqrt()
        * Complex64::new(4.0 * pi * pi * sigma * sigma * geom.phi2, -1.0).sqrt();
    let dt = geom.delta_t;
    let chirp = 8.0 * pi * pi * sigma * sigma * geom.phi2;
    let integrand = move |t: f64| {
        let g = 2.0 * pi * pi * sigma * sigma * (t - tk) * (t - tk);
        let zp = (Complex64::new(2.0 * t + dt, 0.0) + Complex64::new(0.0, chirp * (t - tk))) / den;
        let zm = (Complex64::new(2.0 * t - dt, 0.0) + Complex64::new(0.0, chirp * (t - tk))) / den;
        let gamp = 2.0 * sl * gexp(g) + (si - sl) * (gerf(g, zp) - gerf(g, zm));
        (pi.sqrt() * sigma / 2.0) * gamp.norm_sqr()
    };
    let big_a = Complex64::new(2.0, chirp);
    let mut hints = vec![(tk, 1.0 / (2.0 * pi * sigma * std::f64::consts::SQRT_2))];
    for bb in [
        Complex64::new(dt, -chirp * tk),
        Complex64::new(-dt, -chirp * tk),
    ] {
        if let Some(h) = cross_hint(big_a, bb, den) {
            hints.push(h);
        }
    }
    Ok(m.eta_x * quad_mesh(integrand, a, b, &hints)?)
}

/// eta_i == eta_l: |amp|^2 = 4 eta_l, so Pr(X click | Eve Z) reduces to a
/// closed Erf difference over the k' bin.
fn pr_xz_diag(geom: &Geometry, m: &Model, eta_l: f64, s: f64, j: usize, kp: usize) -> f64 {
    let tj = geom.t_z[j];
    let w = (s * s + (geom.phi2 / s).powi(2)).sqrt();
    let a = geom.t_x[kp] - geom.delta_k / 2.0;
    let b = geom.t_x[kp] + geom.delta_k / 2.0;
    m.eta_x * eta_l * 0.5 * (erf_real((b - tj) / w) - erf_real((a - tj) / w))
}

fn pr_xx_diag(geom: &Geometry, m: &Model, eta_l: f64, sigma: f64, k: usize, kp: usize) -> f64 {
    let tk = geom.t_x[k];
    let a = geom.t_x[kp] - geom.delta_k / 2.0;
    let b = geom.t_x[kp] + geom.delta_k / 2.0;
    let c = 2.0 * std::f64::consts::PI * sigma;
    m.eta_x * eta_l * 0.5 * (erf_real(c * (b - tk)) - erf_real(c * (a - tk)))
}

// ---------------------------------------------------------------------
// adversarial channel: aggregates and single-photon statistics
// ---------------------------------------------------------------------

/// Bin-averaged click/error probabilities for one (eta_i, eta_l) setting,
/// split by Eve's measured basis (Z or X).
#[derive(Debug, Clone, Copy, Default)]
pub struct Aggregates {
    pub z_click_z: f64,
    pub x_click_z: f64,
    pub z_click_x: f64,
    pub x_click_x: f64,
    pub z_err_z: f64,
    pub x_err_x: f64,
    pub z_err_x: f64,
    pub x_err_z: f64,
}

/// Aggregates per (eta_i, eta_l) TBS setting labels, filled lazily.
pub type AggCache = HashMap<(Tbs, Tbs), Aggregates>;

/// Compute the eight aggregates for one setting. The same-arm case uses
/// the closed diagonal forms; mixed arms integrate the interference term.
pub fn attack_aggregates(
    geom: &Geometry,
    m: &Model,
    eta_i: f64,
    eta_l: f64,
    s: f64,
    sigma: f64,
) -> Result<Aggregates> {
    let d = geom.d;
    let df = d as f64;
    let mut zz = vec![vec![0.0; d]; d];
    let mut zx = vec![vec![0.0; d]; d];
    for src in 0..d {
        for dst in 0..d {
            zz[src][dst] = attack_prob_zz(geom, m, eta_i, s, src, dst);
            zx[src][dst] = attack_prob_zx(geom, m, eta_i, sigma, src, dst);
        }
    }
    let mut xz = vec![vec![0.0; d]; d];
    let mut xx = vec![vec![0.0; d]; d];
    if eta_i == eta_l {
        for src in 0..d {
            for dst in 0..d {
                xz[src][dst] = pr_xz_diag(geom, m, eta_l, s, src, dst);
                xx[src][dst] = pr_xx_diag(geom, m, eta_l, sigma, src, dst);
            }
        }
    } else {
        for src in 0..d {
            for dst in 0..d {
                xz[src][dst] = attack_prob_xz(geom, m, eta_i, eta_l, s, src, dst)?;
                xx[src][dst] = attack_prob_xx(geom, m, eta_i, eta_l, sigma, src, dst)?;
            }
        }
    }
    let sum = |t: &Vec<Vec<f64>>| t.iter().flatten().sum::<f64>();
    let off_sum = |t: &Vec<Vec<f64>>| {
        t.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| v)
                    .sum::<f64>()
            })
            .sum::<f64>()
    };
    Ok(Aggregates {
        z_click_z: sum(&zz) / df,
        x_click_z: sum(&xz) / df,
        z_click_x: sum(&zx) / df,
        x_click_x: sum(&xx) / df,
        z_err_z: off_sum(&zz) / df,
        x_err_x: off_sum(&xx) / df,
        z_err_x: (1.0 - 1.0 / df) * sum(&zx) / df,
        x_err_z: (1.0 - 1.0 / df) * sum(&xz) / df,
    })
}

impl Aggregates {
    /// (z_click, x_click, z_err, x_err) for the given Eve basis.
    fn by_basis(&self, eve_z: bool) -> (f64, f64, f64, f64) {
        if eve_z {
            (self.z_click_z, self.x_click_z, self.z_err_z, self.x_err_z)
        } else {
            (self.z_click_x, self.x_click_x, self.z_err_x, self.x_err_x)
        }
    }
}

/// Single-photon statistics under the intercept-resend attack: honest
/// contribution with weight 1 - w_Z - w_X plus the two interception
/// branches mixed with dark counts. Also returns the aggregate cache so
/// callers can read off the diagonal observables without recomputation.
pub fn adversarial_single_photon(
    m: &Model,
    attack: &AttackParams,
) -> Result<(SinglePhotonStats, AggCache)> {
    let geom = &attack.geometry;
    let hon = honest_single_photon(m);
    let d = m.d as f64;
    let w0 = 1.0 - attack.w_z - attack.w_x;
    let mut cache: AggCache = HashMap::new();

    // Zero-weight branches are skipped entirely (not multiplied by 0) so
    // their aggregates are never evaluated.
    let mut branches: Vec<(f64, f64, bool)> = Vec::new();
    if attack.w_z > 0.0 {
        branches.push((attack.w_z, attack.xi_z, true));
    }
    if attack.w_x > 0.0 {
        branches.push((attack.w_x, attack.xi_x, false));
    }

    let mut sp = SinglePhotonStats::default();
    for k in ETA_I_ORDER {
        let mut yz = w0 * hon.yz[k.idx()];
        let mut yx = w0 * hon.yx[k.idx()];
        let mut yze = w0 * hon.yze[k.idx()];
        let mut yxe = w0 * hon.yxe[k.idx()];
        for &(w, xi, eve_z) in &branches {
            let agg = cached_agg(&mut cache, geom, m, attack, k, k)?;
            let (zc, xc, ze, xe) = agg.by_basis(eve_z);
            yz += w * (m.pd_z + xi * zc * (1.0 - m.pd_z));
            yx += w * (m.pd_x + xi * xc * (1.0 - m.pd_x));
            yze += w * (xi * ze + (1.0 - xi * zc) * m.pd_z * (1.0 - 1.0 / d));
            yxe += w * (xi * xe + (1.0 - xi * xc) * m.pd_x * (1.0 - 1.0 / d));
        }
        sp.yz[k.idx()] = yz;
        sp.yx[k.idx()] = yx;
        sp.yze[k.idx()] = yze;
        sp.yxe[k.idx()] = yxe;
    }

    let (pz, px) = (m.pd_z, m.pd_x);
    let mix_c = |pr_x: f64, pr_z: f64, xi: f64| {
        xi * pr_x * pz + xi * pr_z * px + (1.0 - xi * pr_x - xi * pr_z) * pz * px
    };
    let mix_e = |pr_x: f64, pr_z: f64, xi: f64| {
        xi * pr_x * (1.0 - pz) + (1.0 - xi * pr_x - xi * pr_z) * px * (1.0 - pz)
    };
    let mix_pc = |pr_xe: f64, pr_zc: f64, pr_xc: f64, xi: f64| {
        xi * pr_xe * pz
            + xi * pr_zc * px * (1.0 - 1.0 / d)
            + (1.0 - xi * pr_xc - xi * pr_zc) * px * pz * (1.0 - 1.0 / d)
    };
    let mix_pe = |pr_xe: f64, pr_zc: f64, pr_xc: f64, xi: f64| {
        xi * pr_xe * (1.0 - pz) + (1.0 - xi * pr_xc - xi * pr_zc) * px * (1.0 - pz) * (1.0 - 1.0 / d)
    };

    for (i, l) in SETTING_ORDER {
        let si = setting_idx(i, l);
        let mut yxc = w0 * hon.yxc[si];
        let mut yxem = w0 * hon.yxem[si];
        let mut pxc = w0 * hon.pxc[si];
        let mut pxe = w0 * hon.pxe[si];
        for &(w, xi, eve_z) in &branches {
            let agg = cached_agg(&mut cache, geom, m, attack, i, l)?;
            let (zc, xc, _ze, xe) = agg.by_basis(eve_z);
            yxc += w * mix_c(xc, zc, xi);
            yxem += w * mix_e(xc, zc, xi);
            pxc += w * mix_pc(xe, zc, xc, xi);
            pxe += w * mix_pe(xe, zc, xc, xi);
        }
        sp.yxc[si] = yxc;
        sp.yxem[si] = yxem;
        sp.pxc[si] = pxc;
        sp.pxe[si] = pxe;
    }
    Ok((sp, cache))
}

fn cached_agg(
    cache: &mut AggCache,
    geom: &Geometry,
    m: &Model,
    attack: &AttackParams,
    i: Tbs,
    l: Tbs,
) -> Result<Aggregates> {
    if let Some(a) = cache.get(&(i, l)) {
        return Ok(*a);
    }
    let a = attack_aggregates(geom, m, m.eta_of(i), m.eta_of(l), attack.s, attack.sigma)?;
    cache.insert((i, l), a);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_gain_is_dark_count() {
        let m = Model::default_test();
        assert!((gain_z(&m, 0.0, 0.1) - m.pd_z).abs() < 1e-18);
        assert!((gain_z(&m, 0.5, 1.0) - m.pd_z).abs() < 1e-18);
    }

    #[test]
    fn z_gain_closed_form_at_fig3_point() {
        let m = Model::default_test();
        let g = gain_z(&m, 0.5, m.eta_dn);
        let expected = 1.0 - (1.0 - m.pd_z) * (-0.5 * m.eta * m.eta_z * 0.9f64).exp();
        assert!((g - expected).abs() < 1e-16, "{g} vs {expected}");
    }

    #[test]
    fn single_photon_yields_known_limits() {
        // eta = 1, pd = 0, eta_l = 0 (nothing reflected): Y^Z = eta_Z.
        let mut m = Model::default_test();
        m.eta = 1.0;
        m.pd_z = 0.0;
        m.eta_dn = 0.0;
        let sp = honest_single_photon(&m);
        assert!((sp.yz[Tbs::Dn.idx()] - m.eta_z).abs() < 1e-15);
        // Dark-count-only channel: error rate is the (1 - 1/d) branch.
        let mut m = Model::default_test();
        m.eta = 0.0;
        let sp = honest_single_photon(&m);
        let expect = (1.0 - 0.25) * m.pd_z;
        assert!((sp.yze[0] - expect).abs() < 1e-18);
    }

    #[test]
    fn zz_probability_row_sums_below_reflected_arm() {
        let m = Model::default_test();
        let geom = Geometry::fig4_default();
        let s = 0.05;
        for j in 0..4 {
            let row: f64 = (0..4).map(|jp| attack_prob_zz(&geom, &m, 0.9, s, j, jp)).sum();
            assert!(row <= (1.0 - 0.9) * m.eta_z + 1e-12);
            assert!(row > 0.0);
        }
    }

    #[test]
    fn zz_narrow_pulse_concentrates_on_diagonal() {
        let m = Model::default_test();
        let geom = Geometry::fig4_default();
        let s = 1e-4;
        let diag = attack_prob_zz(&geom, &m, 0.9, s, 1, 1);
        let off = attack_prob_zz(&geom, &m, 0.9, s, 1, 2);
        assert!((diag - (1.0 - 0.9) * m.eta_z).abs() < 1e-12);
        assert!(off.abs() < 1e-15);
    }

    #[test]
    fn xz_diag_fast_path_matches_quadrature() {
        let m = Model::default_test();
        let geom = Geometry::fig4_default();
        let s = 0.05;
        for kp in 0..4 {
            let closed = pr_xz_diag(&geom, &m, 0.1, s, 0, kp);
            let quad = attack_prob_xz(&geom, &m, 0.1, 0.1, s, 0, kp).unwrap();
            assert!(
                (closed - quad).abs() < 1e-9 * closed.abs().max(1e-3),
                "kp={kp}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn xx_diag_fast_path_matches_quadrature() {
        let m = Model::default_test();
        let geom = Geometry::fig4_default();
        let sigma = 0.6;
        for kp in 0..4 {
            let closed = pr_xx_diag(&geom, &m, 0.4, sigma, 2, kp);
            let quad = attack_prob_xx(&geom, &m, 0.4, 0.4, sigma, 2, kp).unwrap();
            assert!(
                (closed - quad).abs() < 1e-9 * closed.abs().max(1e-3),
                "kp={kp}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn adversarial_reduces_to_honest_when_weights_vanish() {
        let m = Model::default_test();
        let attack = AttackParams {
            w_z: 0.0,
            w_x: 0.0,
            s: 0.05,
            sigma: 0.6,
            xi_z: 0.8,
            xi_x: 0.7,
            geometry: Geometry::fig4_default(),
        };
        let (sp, cache) = adversarial_single_photon(&m, &attack).unwrap();
        let hon = honest_single_photon(&m);
        assert!(cache.is_empty(), "no aggregates should be computed");
        for k in 0..3 {
            assert_eq!(sp.yz[k], hon.yz[k]);
            assert_eq!(sp.yxe[k], hon.yxe[k]);
        }
        for s6 in 0..6 {
            assert_eq!(sp.pxc[s6], hon.pxc[s6]);
        }
    }
}
