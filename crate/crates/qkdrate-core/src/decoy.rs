//! Decoy-state inversion: bounds on vacuum/one-photon yields, on
//! yield-error products, and on the bespoke linear combinations of
//! one-photon yields that feed the weight bounds.
//!
//! Every statistic channel is a gain triple g = (g1, g2, g3) observed at
//! the three intensities mu = (mu1, mu2, mu3); the same closed forms apply
//! whether g holds plain gains or QBER-gain products.

use crate::channel::{ObservedStats, SinglePhotonStats};
use crate::error::{Error, Result};
use crate::params::{setting_idx, Model, Tbs, ETA_I_ORDER, SETTING_ORDER};

/// Two intensities closer than this are degenerate: the inversion divides
/// by (mu2 - mu3), so we fail loudly instead of dividing.
const DEGENERATE_MU: f64 = 1e-15;

fn check_mus(mu: &[f64; 3]) -> Result<()> {
    if (mu[1] - mu[2]).abs() < DEGENERATE_MU {
        return Err(Error::config(format!(
            "degenerate decoy intensities mu2 = {}, mu3 = {}",
            mu[1], mu[2]
        )));
    }
    Ok(())
}

/// Lower bound on the vacuum yield from the two weak intensities.
pub fn y0_lower(g: &[f64; 3], mu: &[f64; 3]) -> Result<f64> {
    check_mus(mu)?;
    let v = (mu[1] * mu[2].exp() * g[2] - mu[2] * mu[1].exp() * g[1]) / (mu[1] - mu[2]);
    Ok(v.clamp(0.0, 1.0))
}

/// Lower bound on the one-photon yield; needs `y0_low` from [`y0_lower`].
pub fn y1_lower(g: &[f64; 3], mu: &[f64; 3], y0_low: f64) -> Result<f64> {
    check_mus(mu)?;
    let (mu1, mu2, mu3) = (mu[0], mu[1], mu[2]);
    let den = (mu2 - mu3) * (1.0 - (mu2 + mu3) / mu1);
    if !(den.abs() >= DEGENERATE_MU) {
        return Err(Error::config(format!(
            "decoy intensities too close to mu1 = mu2 + mu3 (mu = {mu:?})"
        )));
    }
    let num = mu2.exp() * g[1]
        - mu3.exp() * g[2]
        - ((mu2 * mu2 - mu3 * mu3) / (mu1 * mu1)) * (mu1.exp() * g[0] - y0_low);
    Ok((num / den).clamp(0.0, 1.0))
}

fn denom3(mu: &[f64; 3]) -> f64 {
    let (mu1, mu2, mu3) = (mu[0], mu[1], mu[2]);
    (mu2 * mu2 - mu3 * mu3) * mu1 - (mu1 * mu1 - mu3 * mu3) * mu2 + (mu1 * mu1 - mu2 * mu2) * mu3
}

/// Upper bound on the one-photon yield: min of 1, the two-intensity bound,
/// and the three-intensity bound.
pub fn y1_upper(g: &[f64; 3], mu: &[f64; 3]) -> Result<f64> {
    check_mus(mu)?;
    let (mu1, mu2, mu3) = (mu[0], mu[1], mu[2]);
    let two = (mu2.exp() * g[1] - mu3.exp() * g[2]) / (mu2 - mu3);
    let num = (mu2 * mu2 - mu3 * mu3) * mu1.exp() * (1.0 - g[0])
        - (mu1 * mu1 - mu3 * mu3) * mu2.exp() * (1.0 - g[1])
        + (mu1 * mu1 - mu2 * mu2) * mu3.exp() * (1.0 - g[2]);
    let three = 1.0 - num / denom3(mu);
    Ok(1.0f64.min(two).min(three))
}

/// (y0_low, y1_low, y1_up) for one gain triple.
pub fn decoy_interval(g: &[f64; 3], mu: &[f64; 3]) -> Result<(f64, f64, f64)> {
    let y0 = y0_lower(g, mu)?;
    Ok((y0, y1_lower(g, mu, y0)?, y1_upper(g, mu)?))
}

/// The four analyzed (c_up, c_dn) coefficient pairs for linear combinations
/// c_up Y1(eta_up) - c_dn Y1(eta_dn), each with its a-priori combination
/// range [y_lo, y_hi].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinCombCase {
    W0Up,
    W0Low,
    W1Up,
    W1Low,
}

impl LinCombCase {
    pub const ALL: [LinCombCase; 4] = [
        LinCombCase::W0Up,
        LinCombCase::W0Low,
        LinCombCase::W1Up,
        LinCombCase::W1Low,
    ];

    /// (c_up, c_dn, y_lo, y_hi) for this case at the model's TBS settings.
    pub fn coefficients(self, m: &Model) -> (f64, f64, f64, f64) {
        let (up, dn, pd) = (m.eta_up, m.eta_dn, m.pd_z);
        match self {
            LinCombCase::W0Up => (
                dn,
                up * (1.0 - up),
                dn - up * (1.0 - up) - (1.0 - pd) * dn * up * up,
                f64::max(pd * (dn - up * (1.0 - up)), dn - up * (1.0 - up)),
            ),
            LinCombCase::W0Low => (
                -dn * (1.0 - dn),
                -up,
                pd * (up - dn * (1.0 - dn)),
                up,
            ),
            LinCombCase::W1Up => (-(1.0 - dn * dn), -1.0, pd * dn * dn, 1.0),
            LinCombCase::W1Low => (1.0, 1.0 - up * up, -(1.0 - up * up), up * up),
        }
    }
}

/// Upper bound on c_up Y1(eta_up) - c_dn Y1(eta_dn) from the gains observed
/// at those two settings.
pub fn lincomb_yield_upper(
    case: LinCombCase,
    g_up: &[f64; 3],
    g_dn: &[f64; 3],
    m: &Model,
) -> Result<f64> {
    check_mus(&m.mu)?;
    let (c_up, c_dn, y_lo, y_hi) = case.coefficients(m);
    let (mu2, mu3) = (m.mu[1], m.mu[2]);
    let num = c_up * (mu2.exp() * g_up[1] - mu3.exp() * g_up[2])
        - c_dn * (mu2.exp() * g_dn[1] - mu3.exp() * g_dn[2])
        - y_lo * (mu2.exp() - mu3.exp() + mu3 - mu2);
    Ok(y_hi.min(num / (mu2 - mu3)))
}

/// Upper bound on the weighted combination that controls the multi-photon
/// weight: min of the hard cap, the two-intensity form, and the
/// three-intensity form, built from the Z gains at the three diagonal
/// TBS settings.
pub fn weight_comb_upper(gz: &[[f64; 3]; 3], m: &Model) -> Result<f64> {
    check_mus(&m.mu)?;
    let (up, dn, e2, pd) = (m.eta_up, m.eta_dn, m.eta2, m.pd_z);
    let [mu1, mu2, mu3] = m.mu;
    let g = |k: Tbs, j: usize| gz[k.idx()][j];
    // Grouped as differences of nearby gains so the dark-count part cancels
    // exactly and only eps(pd)-level rounding survives.
    let gt = |j: usize| {
        (up - dn) * (g(Tbs::Mid, j) - pd) - (1.0 - e2) * (g(Tbs::Dn, j) - g(Tbs::Up, j))
    };
    let cap = (1.0 - pd) * (up - dn);
    let two = (mu2.exp() * gt(1) - mu3.exp() * gt(2)) / (mu2 - mu3);
    let hterm = |j: usize| {
        (up - dn) * (1.0 - g(Tbs::Mid, j)) + (1.0 - e2) * (g(Tbs::Dn, j) - g(Tbs::Up, j))
    };
    let f = (mu2 * mu2 - mu3 * mu3) * mu1.exp() * hterm(0)
        - (mu1 * mu1 - mu3 * mu3) * mu2.exp() * hterm(1)
        + (mu1 * mu1 - mu2 * mu2) * mu3.exp() * hterm(2);
    let three = cap - f / denom3(&m.mu);
    Ok(cap.min(two).min(three))
}

/// Bounds on the four linear combinations feeding the weight formulas.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinBounds {
    pub w0_up: f64,
    pub w0_low: f64,
    pub w1_up: f64,
    pub w1_low: f64,
}

/// One-photon bound table for every statistic channel the phase-error and
/// rate pipelines consume. Pairs are (lower, upper).
#[derive(Debug, Clone)]
pub struct BoundTable {
    /// Z-basis one-photon yields per diagonal TBS setting (`Tbs::idx`).
    pub yz: [(f64, f64); 3],
    /// X-click yields per (eta_i, eta_l) setting (`setting_idx`).
    pub yxc: [(f64, f64); 6],
    /// X-no-click yields per setting.
    pub yxe: [(f64, f64); 6],
    /// QBER-weighted X-click products per eta_i, at eta_l = eta_up.
    pub pxc: [(f64, f64); 3],
    /// QBER-weighted X-no-click products per eta_i, at eta_l = eta_up.
    pub pxe: [(f64, f64); 3],
    /// Linear-combination upper bounds.
    pub lin: LinBounds,
    /// Weighted-combination upper bound for the multi-photon weight.
    pub wgt1: f64,
}

/// Apply the decoy inversion to every channel of the observed statistics.
pub fn bound_all_statistics(stats: &ObservedStats, m: &Model) -> Result<BoundTable> {
    let mu = &m.mu;
    let mut yz = [(0.0, 0.0); 3];
    for k in ETA_I_ORDER {
        let (_, lo, hi) = decoy_interval(&stats.gz[k.idx()], mu)?;
        yz[k.idx()] = (lo, hi);
    }
    let mut yxc = [(0.0, 0.0); 6];
    let mut yxe = [(0.0, 0.0); 6];
    for (i, l) in SETTING_ORDER {
        let s = setting_idx(i, l);
        let (_, lo, hi) = decoy_interval(&stats.gxc[s], mu)?;
        yxc[s] = (lo, hi);
        let (_, lo, hi) = decoy_interval(&stats.gxe[s], mu)?;
        yxe[s] = (lo, hi);
    }
    let mut pxc = [(0.0, 0.0); 3];
    let mut pxe = [(0.0, 0.0); 3];
    for i in ETA_I_ORDER {
        let s_up = setting_idx(i, Tbs::Up);
        let mut qg_c = [0.0; 3];
        let mut qg_e = [0.0; 3];
        for j in 0..3 {
            qg_c[j] = stats.qx[i.idx()][j] * stats.gxc[s_up][j];
            qg_e[j] = stats.qx[i.idx()][j] * stats.gxe[s_up][j];
        }
        let (_, lo, hi) = decoy_interval(&qg_c, mu)?;
        pxc[i.idx()] = (lo, hi);
        let (_, lo, hi) = decoy_interval(&qg_e, mu)?;
        pxe[i.idx()] = (lo, hi);
    }
    let g_up = &stats.gz[Tbs::Up.idx()];
    let g_dn = &stats.gz[Tbs::Dn.idx()];
    let lin = LinBounds {
        w0_up: lincomb_yield_upper(LinCombCase::W0Up, g_up, g_dn, m)?,
        w0_low: lincomb_yield_upper(LinCombCase::W0Low, g_up, g_dn, m)?,
        w1_up: lincomb_yield_upper(LinCombCase::W1Up, g_up, g_dn, m)?,
        w1_low: lincomb_yield_upper(LinCombCase::W1Low, g_up, g_dn, m)?,
    };
    let wgt1 = weight_comb_upper(&stats.gz, m)?;
    Ok(BoundTable { yz, yxc, yxe, pxc, pxe, lin, wgt1 })
}

/// Zero-width bound table from exact single-photon statistics (the
/// no-decoy path, where yields are direct inputs rather than inverted).
pub fn table_from_exact(sp: &SinglePhotonStats, m: &Model) -> BoundTable {
    let mut yz = [(0.0, 0.0); 3];
    for k in ETA_I_ORDER {
        let v = sp.yz[k.idx()];
        yz[k.idx()] = (v, v);
    }
    let mut yxc = [(0.0, 0.0); 6];
    let mut yxe = [(0.0, 0.0); 6];
    for (i, l) in SETTING_ORDER {
        let s = setting_idx(i, l);
        yxc[s] = (sp.yxc[s], sp.yxc[s]);
        yxe[s] = (sp.yxem[s], sp.yxem[s]);
    }
    let mut pxc = [(0.0, 0.0); 3];
    let mut pxe = [(0.0, 0.0); 3];
    for i in ETA_I_ORDER {
        let s_up = setting_idx(i, Tbs::Up);
        pxc[i.idx()] = (sp.pxc[s_up], sp.pxc[s_up]);
        pxe[i.idx()] = (sp.pxe[s_up], sp.pxe[s_up]);
    }
    let y_up = sp.yz[Tbs::Up.idx()];
    let y_dn = sp.yz[Tbs::Dn.idx()];
    let lc = |case: LinCombCase| {
        let (cu, cd, _, _) = case.coefficients(m);
        cu * y_up - cd * y_dn
    };
    let lin = LinBounds {
        w0_up: lc(LinCombCase::W0Up),
        w0_low: lc(LinCombCase::W0Low),
        w1_up: lc(LinCombCase::W1Up),
        w1_low: lc(LinCombCase::W1Low),
    };
    let wgt1 = (m.eta_up - m.eta_dn) * sp.yz[Tbs::Mid.idx()]
        - (1.0 - m.eta2) * (y_dn - y_up)
        - (m.eta_up - m.eta_dn) * m.pd_z;
    BoundTable { yz, yxc, yxe, pxc, pxe, lin, wgt1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MU: [f64; 3] = [0.5, 2e-6, 1e-6];

    #[test]
    fn vacuum_intensity_reveals_y0() {
        // mu3 = 0 makes the weakest setting a direct vacuum measurement.
        let mu = [0.5, 2e-6, 0.0];
        let g = [0.4, 0.2, 0.07];
        let y0 = y0_lower(&g, &mu).unwrap();
        assert_eq!(y0, 0.07);
    }

    #[test]
    fn zero_gains_give_zero_bounds() {
        let g = [0.0; 3];
        let (y0, y1l, y1u) = decoy_interval(&g, &MU).unwrap();
        assert_eq!(y0, 0.0);
        assert_eq!(y1l, 0.0);
        assert_eq!(y1u, 0.0);
    }

    #[test]
    fn unit_gains_clamp_upper_to_one() {
        let g = [1.0; 3];
        assert_eq!(y1_upper(&g, &MU).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_intensities_error() {
        let mu = [0.5, 1e-6, 1e-6];
        let g = [0.1, 0.01, 0.01];
        assert!(matches!(y0_lower(&g, &mu), Err(Error::Config(_))));
        assert!(matches!(y1_upper(&g, &mu), Err(Error::Config(_))));
    }

    #[test]
    fn lincomb_w0_up_low_endpoint_matches_closed_form() {
        let m = Model::default_test();
        let (_, _, y_lo, _) = LinCombCase::W0Up.coefficients(&m);
        let expected = 0.1 - 0.9 * (1.0 - 0.9) - (1.0 - m.pd_z) * 0.1 * 0.81;
        assert!((y_lo - expected).abs() < 1e-15);
    }

    #[test]
    fn weight_comb_dark_floor_is_near_zero() {
        // All gains at the dark-count floor: the true one-photon yields
        // vanish, so the combination bound must sit near zero.
        let m = Model::default_test();
        let g = [[m.pd_z; 3]; 3];
        let w = weight_comb_upper(&g, &m).unwrap();
        assert!(w.abs() < 1e-6, "w = {w}");
    }
}
