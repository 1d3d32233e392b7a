//! Least squares against a fixed row-space.
//!
//! The compressor factors the recurrent matrix as `Z_h * P` and then needs
//! the best approximation of the inter-layer matrix inside the same
//! row-space: `Z_x = argmin_Y |Y P - W_x|_F`. `P` coming straight out of a
//! truncated SVD has orthonormal rows, which reduces the solve to one
//! matrix product; the general path exists so externally supplied or
//! perturbed projections still get the exact normal-equations answer.

use super::{svd, LinalgError, Matrix};

/// Row-orthonormality defect (relative to rank) under which the projection
/// shortcut `Z = W P^T` is taken.
const ORTHO_DEFECT_REL: f64 = 1e-8;

/// Relative singular-value floor for the Gram matrix in the general path.
const GRAM_COND_FLOOR: f64 = 1e-12;

/// Solves `min_Z |Z P - W|_F` for a projection `p` (r x n, r <= n) and
/// target `w` (m x n); returns the m x r coefficient matrix.
///
/// With orthonormal rows in `p` (Frobenius defect of `P P^T - I` at most
/// `1e-8 * r`) the minimizer is `W P^T` directly. Otherwise the normal
/// equations `Z (P P^T) = W P^T` are solved through an SVD of the r x r
/// Gram matrix. A Gram matrix whose condition exceeds 1e12 means the rows
/// of `p` are numerically dependent and the solve fails with
/// [`LinalgError::Singular`].
pub fn least_squares_rowspace(p: &Matrix, w: &Matrix) -> Result<Matrix, LinalgError> {
    if w.cols() != p.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "least_squares_rowspace",
            lhs: (w.rows(), w.cols()),
            rhs: (p.rows(), p.cols()),
        });
    }
    if p.rows() > p.cols() {
        return Err(LinalgError::RankOutOfRange {
            rank: p.rows(),
            max: p.cols(),
        });
    }
    if !p.is_finite() || !w.is_finite() {
        return Err(LinalgError::NotFinite {
            op: "least_squares_rowspace",
        });
    }

    let r = p.rows();
    let pt = p.transpose();
    let gram = p.matmul(&pt)?;
    let defect = gram
        .sub(&Matrix::identity(r))?
        .frobenius_norm();
    let wpt = w.matmul(&pt)?;
    if defect <= ORTHO_DEFECT_REL * r as f64 {
        return Ok(wpt);
    }

    // General path: invert the Gram matrix through its SVD. Symmetric
    // positive semi-definite, so this doubles as the rank check.
    let g = svd(&gram)?;
    let largest = g.sigma[0];
    let smallest = g.sigma[r - 1];
    if smallest <= GRAM_COND_FLOOR * largest {
        return Err(LinalgError::Singular { smallest, largest });
    }
    // inv = V diag(1/sigma) U^T.
    let mut vs = Matrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            vs.set(i, j, g.v.get(i, j) / g.sigma[j]);
        }
    }
    let inv = vs.matmul(&g.u.transpose())?;
    wpt.matmul(&inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::truncate;
    use crate::rng::SplitMix64;
    use alloc::vec::Vec;

    fn random_matrix(rng: &mut SplitMix64, m: usize, n: usize) -> Matrix {
        let data = (0..m * n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        Matrix::from_vec(m, n, data).unwrap()
    }

    fn residual_sq(z: &Matrix, p: &Matrix, w: &Matrix) -> f64 {
        let e = z.matmul(p).unwrap().sub(w).unwrap().frobenius_norm();
        e * e
    }

    #[test]
    fn axis_projection_keeps_leading_columns() {
        // P selects the first two coordinates; the best rank-2 fit keeps
        // those columns and drops the third entirely.
        let p = Matrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let w = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let z = least_squares_rowspace(&p, &w).unwrap();
        assert_eq!(z, Matrix::from_rows(&[&[1.0, 2.0], &[4.0, 5.0]]));
        // Dropped column contributes 3^2 + 6^2 = 45.
        assert!((residual_sq(&z, &p, &w) - 45.0).abs() < 1e-12);
    }

    #[test]
    fn matches_hand_inverted_normal_equations() {
        // Non-orthonormal P: solve Z (P P^T) = W P^T by inverting the 2x2
        // Gram matrix directly.
        let p = Matrix::from_rows(&[&[1.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 1.0, 0.5]]);
        let w = Matrix::from_rows(&[
            &[1.0, 2.0, 3.0, 4.0],
            &[0.0, 1.0, 0.0, 1.0],
            &[2.0, 0.0, 1.0, 1.0],
        ]);
        let z = least_squares_rowspace(&p, &w).unwrap();

        let gram = p.matmul(&p.transpose()).unwrap();
        let (a, b, c, d) = (gram.get(0, 0), gram.get(0, 1), gram.get(1, 0), gram.get(1, 1));
        let det = a * d - b * c;
        let ginv = Matrix::from_rows(&[&[d / det, -b / det], &[-c / det, a / det]]);
        let expect = w.matmul(&p.transpose()).unwrap().matmul(&ginv).unwrap();
        assert!(z.max_abs_diff(&expect).unwrap() < 1e-9);
    }

    #[test]
    fn solution_satisfies_optimality_condition() {
        // At the minimum the residual is orthogonal to the row-space:
        // (Z P - W) P^T = 0.
        let mut rng = SplitMix64::new(17);
        for (m, n, r) in [(3usize, 4usize, 2usize), (6, 6, 3), (5, 9, 4), (7, 8, 1)] {
            let p = random_matrix(&mut rng, r, n);
            let w = random_matrix(&mut rng, m, n);
            let z = least_squares_rowspace(&p, &w).unwrap();
            let grad = z
                .matmul(&p)
                .unwrap()
                .sub(&w)
                .unwrap()
                .matmul(&p.transpose())
                .unwrap();
            let scale = w.frobenius_norm().max(1.0) * p.frobenius_norm().max(1.0);
            assert!(
                grad.frobenius_norm() <= 1e-10 * scale,
                "optimality violated: {} at ({m},{n},{r})",
                grad.frobenius_norm()
            );
        }
    }

    #[test]
    fn orthonormal_projection_takes_exact_shortcut() {
        // P from a truncated SVD has orthonormal rows, so Z must equal
        // W P^T exactly (same floating-point operations, not just close).
        let mut rng = SplitMix64::new(23);
        let a = random_matrix(&mut rng, 8, 6);
        let d = crate::linalg::svd(&a).unwrap();
        let (_, p) = truncate(&d, 3).unwrap();
        let w = random_matrix(&mut rng, 5, 6);
        let z = least_squares_rowspace(&p, &w).unwrap();
        assert_eq!(z, w.matmul(&p.transpose()).unwrap());
    }

    #[test]
    fn any_perturbation_increases_residual() {
        let mut rng = SplitMix64::new(29);
        let p = random_matrix(&mut rng, 3, 7);
        let w = random_matrix(&mut rng, 4, 7);
        let z = least_squares_rowspace(&p, &w).unwrap();
        let base = residual_sq(&z, &p, &w);
        for _ in 0..20 {
            let noise: Vec<f64> = (0..z.rows() * z.cols())
                .map(|_| rng.uniform(-0.1, 0.1))
                .collect();
            let zp = Matrix::from_vec(
                z.rows(),
                z.cols(),
                z.as_slice().iter().zip(&noise).map(|(a, b)| a + b).collect(),
            )
            .unwrap();
            assert!(residual_sq(&zp, &p, &w) >= base - 1e-12);
        }
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let p = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]]);
        let w = Matrix::from_rows(&[&[1.0, 0.0, 1.0]]);
        assert!(matches!(
            least_squares_rowspace(&p, &w),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn shape_contract_is_enforced() {
        let p = Matrix::zeros(2, 3);
        let w = Matrix::zeros(2, 4);
        assert!(matches!(
            least_squares_rowspace(&p, &w),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        let fat = Matrix::identity(3);
        let p_tall = Matrix::zeros(4, 3);
        assert!(matches!(
            least_squares_rowspace(&p_tall, &fat),
            Err(LinalgError::RankOutOfRange { rank: 4, max: 3 })
        ));
    }
}
