//! Differences of per-representation summary statistics.

use crate::error::MeasureFailure;
use crate::linalg::cosine;
use nalgebra::DMatrix;

/// Absolute difference of the mean row norms.
pub fn magnitude_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    Ok((mean_row_norm(x) - mean_row_norm(y)).abs())
}

fn mean_row_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).norm()).sum::<f64>() / m.nrows() as f64
}

/// Absolute difference of the mean cosine between each row and the mean row.
pub fn concentricity_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    Ok((concentricity(x)? - concentricity(y)?).abs())
}

fn concentricity(m: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    let n = m.nrows() as f64;
    let mean_row: Vec<f64> = (0..m.ncols()).map(|c| m.column(c).sum() / n).collect();
    let mut total = 0.0;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        total += cosine(&row, &mean_row).ok_or_else(|| {
            MeasureFailure::undefined_input("zero row or zero mean row; cosine undefined")
        })?;
    }
    Ok(total / n)
}

/// Absolute difference of the Gaussian-potential uniformity of the
/// row-normalized points: U(R) = ln mean_{i != j} exp(-t ||r_i - r_j||^2).
pub fn uniformity_diff(x: &DMatrix<f64>, y: &DMatrix<f64>, t: f64) -> Result<f64, MeasureFailure> {
    Ok((uniformity(x, t)? - uniformity(y, t)?).abs())
}

fn uniformity(m: &DMatrix<f64>, t: f64) -> Result<f64, MeasureFailure> {
    let n = m.nrows();
    let mut unit = m.clone();
    for i in 0..n {
        let norm = m.row(i).norm();
        if norm == 0.0 {
            return Err(MeasureFailure::undefined_input(format!(
                "row {i} is all zeros; cannot project to the unit sphere"
            )));
        }
        for c in 0..m.ncols() {
            unit[(i, c)] /= norm;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut sq = 0.0;
            for c in 0..m.ncols() {
                let d = unit[(i, c)] - unit[(j, c)];
                sq += d * d;
            }
            total += (-t * sq).exp();
        }
    }
    Ok((total / (n * (n - 1)) as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn magnitude_sees_row_scaling() {
        let x = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 5.0]); // norms 5, 5
        let y = &x * 2.0;
        assert_relative_eq!(magnitude_diff(&x, &y).unwrap(), 5.0, epsilon = 1e-14);
        assert_relative_eq!(magnitude_diff(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn concentricity_of_identical_rays_is_one() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        assert_relative_eq!(concentricity(&x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn concentricity_undefined_for_balanced_cloud() {
        // Antipodal rows: the mean row is exactly zero.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert!(concentricity(&x).is_err());
    }

    #[test]
    fn uniformity_antipodal_versus_identical() {
        // Antipodal pair: U = -4t. Identical pair: U = 0. Difference = 4t = 8 at t=2.
        let antipodal = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let identical = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_relative_eq!(uniformity(&antipodal, 2.0).unwrap(), -8.0, epsilon = 1e-12);
        assert_relative_eq!(uniformity(&identical, 2.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            uniformity_diff(&antipodal, &identical, 2.0).unwrap(),
            8.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn uniformity_scale_invariant() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, -0.4, 0.8, 0.3, -0.9]);
        let y = &x * 7.5;
        assert_relative_eq!(uniformity_diff(&x, &y, 2.0).unwrap(), 0.0, epsilon = 1e-12);
    }
}
