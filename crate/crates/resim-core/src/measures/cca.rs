//! Canonical correlation analysis and its singular-vector and projection-
//! weighted aggregates.

use crate::error::MeasureFailure;
use crate::linalg::{self, center_columns};
use nalgebra::DMatrix;

/// Canonical correlations plus the canonical variates of the first argument.
pub struct CcaSolution {
    /// Sorted descending, clamped to [0, 1]; length min(rank X, rank Y).
    pub correlations: Vec<f64>,
    /// N x len(correlations); column i realizes correlation i in X's column space.
    pub variates_left: DMatrix<f64>,
}

/// CCA on column-centered inputs via orthonormal bases: the canonical
/// correlations are the singular values of Q_x^T Q_y.
pub fn cca_core(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<CcaSolution, MeasureFailure> {
    let qx = linalg::orthonormal_columns(x)?;
    let qy = linalg::orthonormal_columns(y)?;
    if qx.ncols() == 0 || qy.ncols() == 0 {
        return Err(MeasureFailure::undefined_input("an input has numerical rank zero"));
    }
    let svd = linalg::svd(&(qx.transpose() * &qy))?;
    let k = qx.ncols().min(qy.ncols());
    let correlations: Vec<f64> =
        svd.singular_values.iter().take(k).map(|v| v.clamp(0.0, 1.0)).collect();
    let variates_left = &qx * svd.u.columns(0, k).into_owned();
    Ok(CcaSolution { correlations, variates_left })
}

/// Mean canonical correlation after reducing each input to the top singular
/// directions holding `mass` of the squared singular-value mass.
pub fn svcca(x: &DMatrix<f64>, y: &DMatrix<f64>, mass: f64) -> Result<f64, MeasureFailure> {
    if !(0.0 < mass && mass <= 1.0) {
        return Err(MeasureFailure::undefined_input("mass must lie in (0, 1]"));
    }
    let reduce = |m: &DMatrix<f64>| -> Result<DMatrix<f64>, MeasureFailure> {
        let centered = center_columns(m);
        let svd = linalg::svd(&centered)?;
        let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return Err(MeasureFailure::undefined_input("input has zero variance"));
        }
        let mut keep = 0;
        let mut acc = 0.0;
        while acc < mass * total && keep < svd.singular_values.len() {
            acc += svd.singular_values[keep] * svd.singular_values[keep];
            keep += 1;
        }
        // U_k Sigma_k: the data expressed in its dominant directions.
        let mut reduced = svd.u.columns(0, keep).into_owned();
        for c in 0..keep {
            reduced.column_mut(c).scale_mut(svd.singular_values[c]);
        }
        Ok(reduced)
    };
    let sol = cca_core(&reduce(x)?, &reduce(y)?)?;
    Ok(sol.correlations.iter().sum::<f64>() / sol.correlations.len() as f64)
}

/// Projection-weighted mean canonical correlation: each correlation is
/// weighted by how much the first argument's columns load on its variate.
/// Asymmetric in its arguments.
pub fn pwcca(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let xc = center_columns(x);
    let yc = center_columns(y);
    let sol = cca_core(&xc, &yc)?;
    let k = sol.correlations.len();
    let mut weights = vec![0.0; k];
    for (i, w) in weights.iter_mut().enumerate() {
        let h = sol.variates_left.column(i);
        *w = (0..xc.ncols()).map(|j| h.dot(&xc.column(j)).abs()).sum();
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return Err(MeasureFailure::numerical("canonical weights have zero mass"));
    }
    Ok(weights.iter().zip(&sol.correlations).map(|(w, r)| w / total * r).sum())
}

/// True when canonical ranks would be limited by the centered row count rather
/// than the feature counts. Informational only; the tolerance handles it.
pub fn rank_limited(x: &DMatrix<f64>, y: &DMatrix<f64>) -> bool {
    let n = x.nrows();
    n <= x.ncols() || n <= y.ncols()
}
