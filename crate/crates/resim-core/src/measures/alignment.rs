//! Comparisons that optimally align one representation to the other with an
//! orthogonal map, a permutation, or a linear regression.

use crate::assignment::max_assignment_total;
use crate::error::MeasureFailure;
use crate::linalg::{self, pad_columns};
use nalgebra::DMatrix;

/// Orthogonal Procrustes distance on column-centered, unit-Frobenius inputs:
/// sqrt(2 - 2*||X^T Y||_*).
pub fn orthogonal_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let nuc = linalg::nuclear_norm(&(x.transpose() * y))?;
    Ok((2.0 - 2.0 * nuc).max(0.0).sqrt())
}

/// Angle between shapes on the same preprocessing: arccos(||X^T Y||_*), in [0, pi/2].
pub fn angular_shape(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let nuc = linalg::nuclear_norm(&(x.transpose() * y))?;
    Ok(nuc.clamp(0.0, 1.0).acos())
}

/// Procrustes distance keeping size: sqrt(||X||_F^2 + ||Y||_F^2 - 2*||X^T Y||_*)
/// on column-centered (but not rescaled) inputs.
pub fn procrustes_size_shape(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let nuc = linalg::nuclear_norm(&(x.transpose() * y))?;
    Ok((x.norm_squared() + y.norm_squared() - 2.0 * nuc).max(0.0).sqrt())
}

/// Procrustes distance where the aligning map is restricted to a column
/// permutation; inputs are zero-padded to a common column count.
pub fn permutation_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let d = x.ncols().max(y.ncols());
    let xp = pad_columns(x, d);
    let yp = pad_columns(y, d);
    // max over permutations s of sum_d (Y^T X)[s(d), d]
    let m = yp.transpose() * &xp;
    let best = max_assignment_total(&m.transpose())?;
    Ok((xp.norm_squared() + yp.norm_squared() - 2.0 * best).max(0.0).sqrt())
}

/// Fraction of Y's variance captured by regressing it onto X's column space
/// (both column-centered): ||Q_X^T Y||_F^2 / ||Y||_F^2.
pub fn linear_regression_r2(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let y_sq = y.norm_squared();
    if y_sq == 0.0 {
        return Err(MeasureFailure::undefined_input("target has zero variance"));
    }
    let q = linalg::orthonormal_columns(x)?;
    if q.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(((q.transpose() * y).norm_squared() / y_sq).clamp(0.0, 1.0))
}

/// Mean per-instance cosine after the best orthogonal alignment of Y onto X;
/// inputs are zero-padded to a common column count.
pub fn aligned_cosine(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    for (name, m) in [("left", x), ("right", y)] {
        for i in 0..m.nrows() {
            if m.row(i).norm() == 0.0 {
                return Err(MeasureFailure::undefined_input(format!(
                    "{name} input row {i} is all zeros; cosine undefined"
                )));
            }
        }
    }
    let d = x.ncols().max(y.ncols());
    let xp = pad_columns(x, d);
    let yp = pad_columns(y, d);
    // argmin_Q ||Y Q - X||_F over orthogonal Q: Q = U V^T from svd(Y^T X).
    let svd = linalg::svd(&(yp.transpose() * &xp))?;
    let aligned = yp * (svd.u * svd.v_t);
    let n = xp.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let xi: Vec<f64> = xp.row(i).iter().copied().collect();
        let ai: Vec<f64> = aligned.row(i).iter().copied().collect();
        total += linalg::cosine(&xi, &ai)
            .ok_or_else(|| MeasureFailure::numerical("aligned row collapsed to zero"))?;
    }
    Ok(total / n as f64)
}

/// Column-wise Pearson correlations; constant columns correlate 0 by convention.
fn column_correlations(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect()
    };
    let (xc, yc) = (cols(x), cols(y));
    DMatrix::from_fn(x.ncols(), y.ncols(), |i, j| linalg::pearson(&xc[i], &yc[j]).unwrap_or(0.0))
}

/// Mean correlation over the best one-to-one matching of columns.
pub fn hard_correlation_match(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let corr = column_correlations(x, y);
    let pairs = x.ncols().min(y.ncols());
    Ok(max_assignment_total(&corr)? / pairs as f64)
}

/// Mean over X's columns of the best correlation with any column of Y
/// (asymmetric: columns of Y may be reused).
pub fn soft_correlation_match(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let corr = column_correlations(x, y);
    Ok(soft_match_mean(&corr))
}

fn soft_match_mean(corr: &DMatrix<f64>) -> f64 {
    let best_per_row =
        (0..corr.nrows()).map(|i| corr.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max));
    best_per_row.sum::<f64>() / corr.nrows() as f64
}
