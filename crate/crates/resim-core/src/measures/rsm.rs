//! Comparisons built on representational similarity matrices and subspace
//! statistics: CKA, RSA, distance correlation, eigenspace overlap, GULP.

use crate::error::MeasureFailure;
use crate::eval::spearman;
use crate::linalg::{self, double_center, euclidean_rsm, pearson_row_rsm, symmetric_eigen};
use nalgebra::DMatrix;

/// Linear centered kernel alignment on column-centered inputs:
/// ||Y^T X||_F^2 / (||X^T X||_F * ||Y^T Y||_F).
pub fn cka_linear(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let den = (x.transpose() * x).norm() * (y.transpose() * y).norm();
    if den == 0.0 {
        return Err(MeasureFailure::undefined_input("an input has zero variance"));
    }
    Ok(((y.transpose() * x).norm_squared() / den).clamp(0.0, 1.0))
}

/// Spearman correlation between the strict upper triangles of the two
/// row-correlation matrices.
pub fn rsa_spearman(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let (sx, sy) = (pearson_row_rsm(x)?, pearson_row_rsm(y)?);
    let upper = |m: &DMatrix<f64>| -> Vec<f64> {
        let n = m.nrows();
        let mut v = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                v.push(m[(i, j)]);
            }
        }
        v
    };
    spearman(&upper(&sx), &upper(&sy))
}

/// Frobenius norm of the difference between the Euclidean distance matrices.
pub fn rsm_norm_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    Ok((euclidean_rsm(x) - euclidean_rsm(y)).norm())
}

/// Distance correlation from double-centered Euclidean distance matrices.
pub fn distance_correlation(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let a = double_center(&euclidean_rsm(x));
    let b = double_center(&euclidean_rsm(y));
    let n2 = (x.nrows() * x.nrows()) as f64;
    let dcov2 = a.component_mul(&b).sum() / n2;
    let dvar_x = a.component_mul(&a).sum() / n2;
    let dvar_y = b.component_mul(&b).sum() / n2;
    if dvar_x <= 0.0 || dvar_y <= 0.0 {
        return Err(MeasureFailure::undefined_input(
            "all pairwise distances equal; distance variance is zero",
        ));
    }
    Ok((dcov2.max(0.0) / (dvar_x * dvar_y).sqrt()).sqrt().clamp(0.0, 1.0))
}

/// Overlap of the dominant left singular subspaces:
/// ||U^T V||_F^2 / max(rank_U, rank_V).
pub fn eigenspace_overlap(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let basis = |m: &DMatrix<f64>| linalg::orthonormal_columns(m);
    let (u, v) = (basis(x)?, basis(y)?);
    let denom = u.ncols().max(v.ncols());
    if denom == 0 {
        return Err(MeasureFailure::undefined_input("both inputs are numerically zero"));
    }
    Ok((u.transpose() * v).norm_squared() / denom as f64)
}

/// Unified linear-probing distance on column-centered inputs rescaled to
/// Frobenius norm sqrt(N). With ridge `lambda` and second-moment matrices
/// S_x = X^T X / N:
/// d^2 = tr[(A_x S_x)^2] + tr[(A_y S_y)^2] - 2 tr[A_x S_xy A_y S_yx],
/// where A = (S + lambda I)^{-1}, a pseudo-inverse when lambda = 0.
pub fn gulp(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<f64, MeasureFailure> {
    if lambda < 0.0 {
        return Err(MeasureFailure::undefined_input("lambda must be non-negative"));
    }
    let n = x.nrows() as f64;
    let sx = x.transpose() * x / n;
    let sy = y.transpose() * y / n;
    let sxy = x.transpose() * y / n;

    let regularized_inverse = |s: &DMatrix<f64>| -> Result<DMatrix<f64>, MeasureFailure> {
        let (vals, vecs) = symmetric_eigen(s)?;
        let max = vals.iter().cloned().fold(0.0f64, f64::max);
        let inverted = vals.map(|v| {
            if lambda > 0.0 {
                1.0 / (v.max(0.0) + lambda)
            } else if v > linalg::RANK_REL_TOL * max {
                1.0 / v
            } else {
                0.0
            }
        });
        Ok(&vecs * DMatrix::from_diagonal(&inverted) * vecs.transpose())
    };

    let ax = regularized_inverse(&sx)?;
    let ay = regularized_inverse(&sy)?;
    let t1 = (&ax * &sx * &ax * &sx).trace();
    let t2 = (&ay * &sy * &ay * &sy).trace();
    let t3 = (&ax * &sxy * &ay * sxy.transpose()).trace();
    Ok((t1 + t2 - 2.0 * t3).max(0.0).sqrt())
}
