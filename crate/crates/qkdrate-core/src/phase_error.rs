//! Phase-error-rate upper bound: weight bounds on Bob's received state,
//! restriction of the test-round bounds to the (<=1)-photon subspace,
//! closed-form solutions of the yield and error linear systems, the
//! X-vacuum weight bounds, and the final three-term assembly.

use crate::decoy::BoundTable;
use crate::error::{Error, Result};
use crate::params::{setting_idx, Model, Tbs};

/// Tolerance for declaring a restricted interval empty (corrupted data).
const EMPTY_INTERVAL_TOL: f64 = 1e-12;

/// Bounds on the photon-number weights of the average arriving state.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightBounds {
    pub w0_up: f64,
    pub w0_low: f64,
    pub w1_up: f64,
    pub w1_low: f64,
    pub w_gt1_up: f64,
}

/// Test-round bounds shrunk to the (<=1)-photon subspace.
#[derive(Debug, Clone)]
pub struct RestrictedBounds {
    pub yxc: [(f64, f64); 6],
    pub yxe: [(f64, f64); 6],
    pub pxc: [(f64, f64); 3],
    pub pxe: [(f64, f64); 3],
}

/// Solved yield-system variables, bounded both ways, per eta_l
/// (index 0 = eta_down, 1 = eta_up).
#[derive(Debug, Clone, Copy, Default)]
pub struct YBounds {
    pub y0: [(f64, f64); 2],
    pub y1t: [(f64, f64); 2],
    pub y1r: [(f64, f64); 2],
}

/// Solved error-system variables (upper bounds only, at eta_l = eta_up).
#[derive(Debug, Clone, Copy, Default)]
pub struct EBounds {
    pub ee0: f64,
    pub ee01: f64,
    pub ee1t: f64,
    pub ee1r: f64,
}

/// Full diagnostic output of the phase-error pipeline.
#[derive(Debug, Clone)]
pub struct PhaseErrorResult {
    /// Raw assembled bound; +inf when the one-photon Z yield lower bound
    /// is non-positive (no extractable one-photon signal).
    pub e_phase_raw: f64,
    /// Raw bound clamped to [0, 1] for use inside u(.).
    pub e_phase_up: f64,
    pub delta2_bar: f64,
    pub weights: WeightBounds,
    pub wx0_z0_up: f64,
    pub wx0_z1_up: f64,
    pub errors: EBounds,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

fn l_idx(l: Tbs) -> usize {
    match l {
        Tbs::Dn => 0,
        Tbs::Up => 1,
        Tbs::Mid => panic!("eta_l is restricted to the up/down settings"),
    }
}

/// Weight bounds from the decoy linear-combination bounds.
pub fn weight_bounds(t: &BoundTable, m: &Model, force_w_gt1_zero: bool) -> Result<WeightBounds> {
    let (up, dn, e2, pdz) = (m.eta_up, m.eta_dn, m.eta2, m.pd_z);
    let w_gt1_up = if force_w_gt1_zero {
        0.0
    } else {
        let den_w = (1.0 - pdz) * (up - dn) * (1.0 - e2) * (1.0 + e2 - up - dn);
        if den_w <= 0.0 {
            return Err(Error::config(format!(
                "multi-photon weight denominator is non-positive ({den_w:.3e}); \
                 the TBS ordering eta2 > eta_up + eta_down - 1 is violated"
            )));
        }
        (t.wgt1 / den_w).clamp(0.0, 1.0)
    };
    let den0u = (1.0 - pdz) * (1.0 - up) * (up - dn * (1.0 + up));
    let den0l = (1.0 - pdz) * (1.0 - dn) * (up * (1.0 + dn) - dn);
    if den0u <= 0.0 || den0l <= 0.0 {
        return Err(Error::config(
            "weight-bound denominator is non-positive; constraint1 is violated",
        ));
    }
    let w0_up = f64::min(
        1.0,
        (t.lin.w0_up + up * (1.0 - up) - dn + up * up * dn * (1.0 - pdz)) / den0u,
    );
    let w0_low = f64::max(
        0.0,
        (-t.lin.w0_low + up - dn * (1.0 - dn) - dn * dn * up * (1.0 - pdz)) / den0l,
    );
    let w1_up = f64::min(1.0, (t.lin.w1_up - dn * dn * pdz) / den0l);
    let w1_low = f64::max(0.0, (-t.lin.w1_low + up * up * pdz) / den0u);
    Ok(WeightBounds { w0_up, w0_low, w1_up, w1_low, w_gt1_up })
}

/// Shrink every test-round interval to the (<=1)-subspace:
/// lower -> max(0, lower - sqrt(w) - w), upper -> min(1, upper + sqrt(w)).
/// An interval that is empty beyond tolerance signals corrupted statistics.
pub fn restrict_bounds(t: &BoundTable, w_gt1_up: f64) -> Result<RestrictedBounds> {
    let rt = w_gt1_up.sqrt();
    let restrict = |(lo, hi): (f64, f64)| {
        (f64::max(0.0, lo - rt - w_gt1_up), f64::min(1.0, hi + rt))
    };
    let mut out = RestrictedBounds {
        yxc: t.yxc.map(restrict),
        yxe: t.yxe.map(restrict),
        pxc: t.pxc.map(restrict),
        pxe: t.pxe.map(restrict),
    };
    let mut check = |name: &str, iv: &mut [(f64, f64)]| -> Result<()> {
        for (n, (lo, hi)) in iv.iter().enumerate() {
            if *lo > *hi + EMPTY_INTERVAL_TOL {
                return Err(Error::numeric(format!(
                    "restricted interval {name}[{n}] is empty: [{lo:.6e}, {hi:.6e}]"
                )));
            }
        }
        Ok(())
    };
    check("yxc", &mut out.yxc)?;
    check("yxe", &mut out.yxe)?;
    check("pxc", &mut out.pxc)?;
    check("pxe", &mut out.pxe)?;
    Ok(out)
}

/// Shared inversion coefficients of the three-setting linear systems.
struct SolveCoeffs {
    a: f64,
    b: f64,
    c: f64,
    ap: f64,
    bp: f64,
    cp: f64,
    su: f64,
    s2: f64,
    sd: f64,
    one: f64,
}

fn coeffs(m: &Model) -> SolveCoeffs {
    let (su, s2, sd) = (m.eta_up.sqrt(), m.eta2.sqrt(), m.eta_dn.sqrt());
    let one = 1.0 - m.pd_z;
    SolveCoeffs {
        a: (m.eta2 * m.eta_dn).sqrt() / ((su - s2) * (su - sd) * one),
        b: (m.eta_up * m.eta_dn).sqrt() / ((su - s2) * (s2 - sd) * one),
        c: (m.eta_up * m.eta2).sqrt() / ((su - sd) * (s2 - sd) * one),
        ap: 1.0 / ((su - s2) * (su - sd) * one),
        bp: 1.0 / ((su - s2) * (s2 - sd) * one),
        cp: 1.0 / ((su - sd) * (s2 - sd) * one),
        su,
        s2,
        sd,
        one,
    }
}

/// Solve the yield system: each restricted quantity enters with the bound
/// matching its coefficient's sign, capped by the weight bounds.
pub fn solve_aux_y(r: &RestrictedBounds, m: &Model, w: &WeightBounds) -> YBounds {
    let k = coeffs(m);
    let dn = m.eta_dn;
    let pdz = m.pd_z;
    let mut out = YBounds::default();
    for l in [Tbs::Dn, Tbs::Up] {
        let li = l_idx(l);
        let e = |i: Tbs| r.yxe[setting_idx(i, l)];
        let cch = r.yxc[setting_idx(Tbs::Dn, l)];
        let y0_up = f64::min(
            w.w0_up,
            k.a * e(Tbs::Up).1 - k.b * e(Tbs::Mid).0 + k.c * e(Tbs::Dn).1,
        );
        let y0_low = f64::max(
            0.0,
            k.a * e(Tbs::Up).0 - k.b * e(Tbs::Mid).1 + k.c * e(Tbs::Dn).0,
        );
        let y1t_up = f64::min(
            w.w1_up,
            k.ap * e(Tbs::Up).1 - k.bp * e(Tbs::Mid).0 + k.cp * e(Tbs::Dn).1,
        );
        let y1t_low = f64::max(
            0.0,
            k.ap * e(Tbs::Up).0 - k.bp * e(Tbs::Mid).1 + k.cp * e(Tbs::Dn).0,
        );
        let y1r_up = f64::min(
            w.w1_up,
            cch.1 / (1.0 - dn) - pdz * e(Tbs::Dn).0 / ((1.0 - dn) * k.one),
        );
        let y1r_low = f64::max(
            0.0,
            cch.0 / (1.0 - dn) - pdz * e(Tbs::Dn).1 / ((1.0 - dn) * k.one),
        );
        out.y0[li] = (y0_low, y0_up);
        out.y1t[li] = (y1t_low, y1t_up);
        out.y1r[li] = (y1r_low, y1r_up);
    }
    out
}

/// Solve the error system (upper bounds, at eta_l = eta_up).
pub fn solve_aux_e(r: &RestrictedBounds, m: &Model, w: &WeightBounds) -> EBounds {
    let k = coeffs(m);
    let dn = m.eta_dn;
    let pdz = m.pd_z;
    let pe = |i: Tbs| r.pxe[i.idx()];
    let pc_dn = r.pxc[Tbs::Dn.idx()];
    let ee0 = f64::min(
        w.w0_up,
        k.a * pe(Tbs::Up).1 - k.b * pe(Tbs::Mid).0 + k.c * pe(Tbs::Dn).1,
    );
    let ee01 = f64::min(
        pe(Tbs::Up).1 / (k.one * k.su),
        -(k.s2 + k.sd) * pe(Tbs::Up).0 / ((k.su - k.s2) * (k.su - k.sd) * k.one)
            + (k.su + k.sd) * pe(Tbs::Mid).1 / ((k.su - k.s2) * (k.s2 - k.sd) * k.one)
            - (k.su + k.s2) * pe(Tbs::Dn).0 / ((k.su - k.sd) * (k.s2 - k.sd) * k.one),
    );
    let ee1t = f64::min(
        w.w1_up,
        k.ap * pe(Tbs::Up).1 - k.bp * pe(Tbs::Mid).0 + k.cp * pe(Tbs::Dn).1,
    );
    let ee1r = f64::min(
        w.w1_up,
        pc_dn.1 / (1.0 - dn) - pdz * pe(Tbs::Dn).0 / ((1.0 - dn) * k.one),
    );
    EBounds { ee0, ee01, ee1t, ee1r }
}

/// Upper bounds on the vacuum-in-X weights conditioned on the Z-photon
/// count (0 or 1). Errors when the detector-decoy denominator is
/// non-positive, which is exactly a constraint2 violation.
pub fn x_vacuum_weights(y: &YBounds, w: &WeightBounds, m: &Model) -> Result<(f64, f64)> {
    let (up, dn) = (m.eta_up, m.eta_dn);
    let (pdx, eta_r) = (m.pd_x, m.eta_r());
    let den_x = dn * eta_r * (1.0 - pdx) * (2.0 * up * eta_r - 1.0 - eta_r * eta_r * up * dn);
    if den_x <= 0.0 {
        return Err(Error::config(format!(
            "X-vacuum weight denominator is non-positive ({den_x:.3e}): constraint2 violated"
        )));
    }
    let (ld, lu) = (l_idx(Tbs::Dn), l_idx(Tbs::Up));
    let wx0z0 = f64::min(
        w.w0_up,
        ((1.0 - up * eta_r) * y.y0[ld].1
            - dn * eta_r * (1.0 - dn * eta_r) * y.y0[lu].0
            - w.w0_low * pdx * (1.0 - up * eta_r) * (1.0 - dn * eta_r).powi(2))
            / den_x
            + w.w0_up / (1.0 - pdx),
    );
    let wx0z1 = f64::min(
        w.w1_up,
        ((1.0 - up * eta_r) * (dn * y.y1t[ld].1 + (1.0 - dn) * y.y1r[ld].1)
            - dn * eta_r
                * (1.0 - dn * eta_r)
                * (up * y.y1t[lu].0 + (1.0 - up) * y.y1r[lu].0)
            - w.w1_low * pdx * (1.0 - up * eta_r) * (1.0 - dn * eta_r).powi(2))
            / den_x
            + w.w1_up / (1.0 - pdx),
    );
    Ok((wx0z0.max(0.0), wx0z1.max(0.0)))
}

/// sqrt((Ybar - m) m) with m = min(w_gt1_up, Ybar/2).
pub fn delta2_bar(w_gt1_up: f64, y1z_up: f64) -> f64 {
    let m = f64::min(w_gt1_up, y1z_up / 2.0);
    f64::sqrt(f64::max(0.0, (y1z_up - m) * m))
}

/// Assemble the three-term phase-error bound from its components.
pub fn phase_error_upper(
    w: &WeightBounds,
    e: &EBounds,
    wx0_z0: f64,
    wx0_z1: f64,
    delta2: f64,
    y1z_low: f64,
    m: &Model,
) -> PhaseErrorResult {
    let (up, dn) = (m.eta_up, m.eta_dn);
    let (pdz, pdx, eta_r) = (m.pd_z, m.pd_x, m.eta_r());
    let su = up.sqrt();
    let p_c0 = pdz;
    let p_c1 = 1.0 - (1.0 - pdz) * dn;
    let d_big = pdx + eta_r * up * (1.0 - pdx);
    if y1z_low <= 0.0 {
        return PhaseErrorResult {
            e_phase_raw: f64::INFINITY,
            e_phase_up: 1.0,
            delta2_bar: delta2,
            weights: *w,
            wx0_z0_up: wx0_z0,
            wx0_z1_up: wx0_z1,
            errors: *e,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            t3: f64::INFINITY,
        };
    }
    let t1 = (p_c0 * e.ee0
        + (p_c0 * p_c1).sqrt() * su * e.ee01
        + p_c1 * (up * e.ee1t + (1.0 - up) * e.ee1r))
        / (y1z_low * d_big);
    let t2 = (eta_r * up * (1.0 - pdx) / (y1z_low * d_big))
        * (p_c0 * wx0_z0 + 2.0 * (p_c0 * p_c1).sqrt() * f64::sqrt(f64::max(0.0, wx0_z1))
            + p_c1 * wx0_z1);
    let t3 = (delta2 + w.w_gt1_up) / y1z_low;
    let raw = t1 + t2 + t3;
    PhaseErrorResult {
        e_phase_raw: raw,
        e_phase_up: raw.clamp(0.0, 1.0),
        delta2_bar: delta2,
        weights: *w,
        wx0_z0_up: wx0_z0,
        wx0_z1_up: wx0_z1,
        errors: *e,
        t1,
        t2,
        t3,
    }
}

/// Full phase-error pipeline from a bound table.
pub fn phase_error_bound(
    t: &BoundTable,
    m: &Model,
    force_w_gt1_zero: bool,
) -> Result<PhaseErrorResult> {
    let w = weight_bounds(t, m, force_w_gt1_zero)?;
    let r = restrict_bounds(t, w.w_gt1_up)?;
    let y = solve_aux_y(&r, m, &w);
    let e = solve_aux_e(&r, m, &w);
    let (wx0_z0, wx0_z1) = x_vacuum_weights(&y, &w, m)?;
    let y1z_up = t.yz[Tbs::Dn.idx()].1;
    let y1z_low = t.yz[Tbs::Dn.idx()].0;
    let d2 = delta2_bar(w.w_gt1_up, y1z_up);
    Ok(phase_error_upper(&w, &e, wx0_z0, wx0_z1, d2, y1z_low, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::honest_single_photon;
    use crate::decoy::table_from_exact;

    #[test]
    fn delta2_examples() {
        assert_eq!(delta2_bar(0.0, 0.7), 0.0);
        // w >= Ybar/2 pins m at Ybar/2, the product's maximum.
        assert!((delta2_bar(0.3, 0.5) - 0.25).abs() < 1e-15);
        assert!((delta2_bar(0.1, 0.9) - (0.8f64 * 0.1).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn restriction_arithmetic() {
        let m = Model::default_test();
        let sp = honest_single_photon(&m);
        let mut t = table_from_exact(&sp, &m);
        t.yxc[0] = (0.3, 0.31);
        let r = restrict_bounds(&t, 0.01).unwrap();
        assert!((r.yxc[0].0 - 0.19).abs() < 1e-15);
        assert!((r.yxc[0].1 - 0.41).abs() < 1e-15);
        // w = 0 keeps intervals untouched.
        let r = restrict_bounds(&t, 0.0).unwrap();
        assert_eq!(r.yxc[0], (0.3, 0.31));
        // w = 1 opens every interval to [0, 1].
        let r = restrict_bounds(&t, 1.0).unwrap();
        assert_eq!(r.yxc[0], (0.0, 1.0));
    }

    #[test]
    fn empty_interval_rejected() {
        let m = Model::default_test();
        let sp = honest_single_photon(&m);
        let mut t = table_from_exact(&sp, &m);
        t.pxe[1] = (0.5, 0.2);
        let err = restrict_bounds(&t, 0.0).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }

    #[test]
    fn exact_honest_table_gives_small_weight_and_finite_bound() {
        let m = Model::default_test();
        let sp = honest_single_photon(&m);
        let t = table_from_exact(&sp, &m);
        let res = phase_error_bound(&t, &m, false).unwrap();
        // Exact single-photon statistics: the multi-photon weight collapses.
        assert!(res.weights.w_gt1_up < 1e-12, "w = {}", res.weights.w_gt1_up);
        assert!(res.e_phase_raw.is_finite());
        assert!(res.e_phase_up >= 0.0 && res.e_phase_up <= 1.0);
    }

    #[test]
    fn forcing_the_weight_zeroes_delta2() {
        let m = Model::default_test();
        let sp = honest_single_photon(&m);
        let t = table_from_exact(&sp, &m);
        let res = phase_error_bound(&t, &m, true).unwrap();
        assert_eq!(res.weights.w_gt1_up, 0.0);
        assert_eq!(res.delta2_bar, 0.0);
    }

    #[test]
    fn zero_yield_lower_bound_signals_infinity() {
        let m = Model::default_test();
        let sp = honest_single_photon(&m);
        let mut t = table_from_exact(&sp, &m);
        t.yz[Tbs::Dn.idx()] = (0.0, t.yz[Tbs::Dn.idx()].1);
        let res = phase_error_bound(&t, &m, false).unwrap();
        assert!(res.e_phase_raw.is_infinite());
        assert_eq!(res.e_phase_up, 1.0);
    }
}
