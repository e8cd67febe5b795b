//! Compatibility coefficient of the two single-photon encoding bases.
//!
//! Inputs are the cross-basis overlap matrix O with O[j][k] = <1_Zj | 1_Xk>
//! and the Gram matrix G of the Z states. With Z (X) denoting the matrix
//! whose columns are the state vectors, the basis-sum operator is
//! S = Z Z^H, and the coefficient is
//!
//!     c = max_{j,k} |<1_Zj| S^+ |1_Xk>|^2 = max_{j,k} |(G^+ O)_{jk}|^2,
//!
//! using the pseudo-inverse identity Z^H (Z Z^H)^+ = (Z^H Z)^+ Z^H. The
//! generalized inverse is taken on the support of G via eigendecomposition,
//! discarding eigenvalues below 1e-10 times the largest (G can be
//! rank-deficient for linearly dependent state families).
//!
//! Both bases must sum to the same operator, which in Gram coordinates
//! reads G^{+1/2} O O^H G^{+1/2} = G on the support; violations beyond
//! tolerance are a data error, not a numerical one.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff defining the numerical support of G.
const SUPPORT_CUTOFF: f64 = 1e-10;
/// Tolerance on the basis-sum consistency identity, per matrix entry.
const CONSISTENCY_TOL: f64 = 1e-8;

/// Compatibility coefficient c = max_{j,k} |<1_Zj| S^+ |1_Xk>|^2.
pub fn compatibility(overlaps: &DMatrix<Complex64>, gram_z: &DMatrix<Complex64>) -> Result<f64> {
    let d = gram_z.nrows();
    if gram_z.ncols() != d || overlaps.nrows() != d || overlaps.ncols() != d {
        return Err(Error::domain(format!(
            "compatibility needs square d x d inputs of matching size, got gram {}x{}, overlaps {}x{}",
            gram_z.nrows(),
            gram_z.ncols(),
            overlaps.nrows(),
            overlaps.ncols()
        )));
    }
    if d < 2 {
        return Err(Error::domain("compatibility requires d >= 2"));
    }
    let herm_defect = (gram_z - gram_z.adjoint()).camax();
    if herm_defect > CONSISTENCY_TOL {
        return Err(Error::domain(format!(
            "gram matrix is not Hermitian (max asymmetry {herm_defect:.3e})"
        )));
    }
    let g = (gram_z + gram_z.adjoint()).scale(0.5);
    let eig = g.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lam_max > 0.0) {
        return Err(Error::domain("gram matrix has no positive eigenvalues"));
    }
    if lam_min < -SUPPORT_CUTOFF * lam_max {
        return Err(Error::domain(format!(
            "gram matrix is not positive semidefinite (eigenvalue {lam_min:.3e})"
        )));
    }
    let cutoff = SUPPORT_CUTOFF * lam_max;
    let mut inv = DMatrix::<Complex64>::zeros(d, d);
    let mut inv_sqrt = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        let lam = eig.eigenvalues[i];
        if lam > cutoff {
            inv[(i, i)] = Complex64::new(1.0 / lam, 0.0);
            inv_sqrt[(i, i)] = Complex64::new(1.0 / lam.sqrt(), 0.0);
        }
    }
    let u = &eig.eigenvectors;
    let g_pinv = u * inv * u.adjoint();
    let g_pinv_sqrt = u * inv_sqrt * u.adjoint();

    // Basis-sum identity: the X family must rebuild the same operator sum,
    // i.e. (G^{+1/2} O)(G^{+1/2} O)^H = G on the support of G.
    let x_tilde = &g_pinv_sqrt * overlaps;
    let s_x = &x_tilde * x_tilde.adjoint();
    let defect = (&s_x - &g).camax();
    if defect > CONSISTENCY_TOL {
        return Err(Error::domain(format!(
            "overlap data inconsistent with the basis-sum identity \
             (max deviation {defect:.3e} exceeds {CONSISTENCY_TOL:.0e})"
        )));
    }

    let m = g_pinv * overlaps;
    let mut c: f64 = 0.0;
    for v in m.iter() {
        c = c.max(v.norm_sqr());
    }
    // Roundoff can push the supremum marginally past its analytic cap of 1.
    if c > 1.0 && c <= 1.0 + 1e-9 {
        c = 1.0;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(d: usize) -> DMatrix<Complex64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn dft_pair_gives_one_over_d() {
        let d = 4;
        let om = |j: usize, k: usize| {
            Complex64::from_polar(
                1.0 / (d as f64).sqrt(),
                2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64,
            )
        };
        let overlaps = DMatrix::from_fn(d, d, om);
        let c = compatibility(&overlaps, &identity(d)).unwrap();
        assert!((c - 0.25).abs() < 1e-14, "c = {c}");
    }

    #[test]
    fn identical_bases_give_one() {
        let c = compatibility(&identity(3), &identity(3)).unwrap();
        assert!((c - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qubit_bases_at_half_overlap() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let overlaps = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(r, 0.0),
                Complex64::new(r, 0.0),
                Complex64::new(r, 0.0),
                Complex64::new(-r, 0.0),
            ],
        );
        let c = compatibility(&overlaps, &identity(2)).unwrap();
        assert!((c - 0.5).abs() < 1e-14, "c = {c}");
    }

    #[test]
    fn inconsistent_overlaps_rejected() {
        // X states too short to rebuild the basis sum.
        let overlaps = identity(2).scale(0.5);
        let err = compatibility(&overlaps, &identity(2)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = compatibility(&identity(3), &identity(2)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
