//! Validated data model: instance-by-feature matrices and model outputs.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("matrix must be at least 2x1, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("probability matrix needs at least 2 classes, got {classes}")]
    TooFewClasses { classes: usize },
    #[error("negative probability {value} at row {row}, column {col}")]
    NegativeProbability { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1 within {tol}")]
    RowSum { row: usize, sum: f64, tol: f64 },
    #[error("got {labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("label {label} at row {row} out of range for {classes} classes")]
    LabelRange { row: usize, label: usize, classes: usize },
}

/// One model layer's activations: rows are instances, columns are features.
///
/// Invariants (checked at construction): at least 2 rows, at least 1 column,
/// every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    data: DMatrix<f64>,
    pub model_id: String,
    pub layer: usize,
    pub group: Option<String>,
}

impl Representation {
    pub fn new(
        data: DMatrix<f64>,
        model_id: impl Into<String>,
        layer: usize,
        group: Option<String>,
    ) -> Result<Self, DataError> {
        validate_finite_matrix(&data)?;
        Ok(Self { data, model_id: model_id.into(), layer, group })
    }

    /// Shorthand for tests and generators: anonymous single-layer representation.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self, DataError> {
        Self::new(data, "anon", 0, None)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Number of instances (rows).
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Number of features (columns).
    pub fn d(&self) -> usize {
        self.data.ncols()
    }
}

fn validate_finite_matrix(data: &DMatrix<f64>) -> Result<(), DataError> {
    if data.nrows() < 2 || data.ncols() < 1 {
        return Err(DataError::TooSmall { rows: data.nrows(), cols: data.ncols() });
    }
    for row in 0..data.nrows() {
        for col in 0..data.ncols() {
            if !data[(row, col)].is_finite() {
                return Err(DataError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// Per-instance class probabilities plus ground-truth labels.
///
/// Rows are renormalized to sum exactly to 1 after validating they already
/// sum to 1 within `ROW_SUM_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    probs: DMatrix<f64>,
    labels: Vec<usize>,
}

pub const ROW_SUM_TOL: f64 = 1e-6;

impl ModelOutputs {
    pub fn new(mut probs: DMatrix<f64>, labels: Vec<usize>) -> Result<Self, DataError> {
        validate_finite_matrix(&probs)?;
        let (n, c) = (probs.nrows(), probs.ncols());
        if c < 2 {
            return Err(DataError::TooFewClasses { classes: c });
        }
        if labels.len() != n {
            return Err(DataError::LabelCount { labels: labels.len(), rows: n });
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= c {
                return Err(DataError::LabelRange { row, label, classes: c });
            }
        }
        for row in 0..n {
            let mut sum = 0.0;
            for col in 0..c {
                let v = probs[(row, col)];
                if v < 0.0 {
                    return Err(DataError::NegativeProbability { row, col, value: v });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(DataError::RowSum { row, sum, tol: ROW_SUM_TOL });
            }
            for col in 0..c {
                probs[(row, col)] /= sum;
            }
        }
        Ok(Self { probs, labels })
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.probs.nrows()
    }

    pub fn classes(&self) -> usize {
        self.probs.ncols()
    }

    /// Predicted class per instance: argmax probability, ties to the lowest index.
    pub fn predictions(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| {
                let mut best = 0;
                for c in 1..self.classes() {
                    if self.probs[(i, c)] > self.probs[(i, best)] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}
