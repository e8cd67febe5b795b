//! Elementary functions: binary entropy, the leakage function u(x),
//! dark-count aggregation, and click probabilities.

use crate::error::{Error, Result};

/// Binary entropy h(x) = -x log2 x - (1-x) log2(1-x), with 0 log 0 = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("binary_entropy({x}) outside [0, 1]")));
    }
    Ok(h2(x))
}

/// Total, for internal pipeline use: 0 outside the open interval.
#[inline]
pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// u(x) = h(x) + x log2(d-1) on (0, 1-1/d), saturating to log2 d for
/// x >= 1-1/d, and 0 at x <= 0 (continuity convention at 0; the saturated
/// branch also covers bound values that exceed 1).
pub fn u_of(x: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("u_of needs d >= 2, got {d}")));
    }
    if x.is_nan() {
        return Err(Error::domain("u_of(NaN)".to_string()));
    }
    Ok(u_val(x, d as f64))
}

/// Total version used by the rate formulas (d validated upstream).
#[inline]
pub(crate) fn u_val(x: f64, d: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 - 1.0 / d {
        return d.log2();
    }
    h2(x) + x * (d - 1.0).log2()
}

/// Whole-window dark-count probability 1 - (1 - p)^d.
pub fn total_dark_count(p_per_bin: f64, d: usize) -> f64 {
    1.0 - (1.0 - p_per_bin).powi(d as i32)
}

/// Inverse of [`total_dark_count`]: the per-bin probability reproducing a
/// given whole-window total.
pub fn per_bin_from_total(p_total: f64, d: usize) -> f64 {
    1.0 - (1.0 - p_total).powf(1.0 / d as f64)
}

/// Probability that the Z-basis detector clicks given `alpha` photons in
/// the Z modes: 1 - (1 - pd_z_total) * eta_down^alpha.
pub fn p_click_given_alpha(alpha: u32, pd_z_total: f64, eta_down: f64) -> f64 {
    1.0 - (1.0 - pd_z_total) * eta_down.powi(alpha as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_basics() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn u_branches() {
        // x = 1 - 1/d saturates.
        assert_eq!(u_of(0.75, 4).unwrap(), 2.0);
        assert_eq!(u_of(0.9, 4).unwrap(), 2.0);
        assert_eq!(u_of(0.0, 4).unwrap(), 0.0);
        assert!(u_of(0.5, 1).is_err());
    }

    #[test]
    fn dark_count_identities() {
        assert_eq!(total_dark_count(0.0, 7), 0.0);
        assert_eq!(total_dark_count(0.3, 1), 0.3);
        let t = total_dark_count(2.5e-5, 4);
        assert!((per_bin_from_total(t, 4) - 2.5e-5).abs() < 1e-19);
    }

    #[test]
    fn click_probability_limits() {
        assert_eq!(p_click_given_alpha(0, 3.9994e-4, 0.1), 3.9994e-4);
        assert!((p_click_given_alpha(1, 3.9994e-4, 0.1) - 0.90003999400000003).abs() < 1e-15);
        assert!(p_click_given_alpha(200, 1e-4, 0.1) > 1.0 - 1e-15);
    }
}
