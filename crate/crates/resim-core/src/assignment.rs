//! Optimal one-to-one matching on dense profit matrices.

use crate::error::MeasureFailure;
use nalgebra::DMatrix;
use ordered_float::OrderedFloat;
use pathfinding::prelude::{kuhn_munkres, Matrix};

/// Maximum total profit over one-to-one matchings of min(nrows, ncols) pairs.
pub fn max_assignment_total(weights: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite assignment weights"));
    }
    // The solver wants nrows <= ncols; the optimal total is transpose-invariant.
    let wide;
    let m = if weights.nrows() <= weights.ncols() {
        weights
    } else {
        wide = weights.transpose();
        &wide
    };
    let rows = (0..m.nrows()).map(|i| (0..m.ncols()).map(move |j| OrderedFloat(m[(i, j)])));
    let matrix = Matrix::from_rows(rows)
        .map_err(|e| MeasureFailure::numerical(format!("assignment matrix: {e}")))?;
    let (total, _) = kuhn_munkres(&matrix);
    Ok(total.into_inner())
}
