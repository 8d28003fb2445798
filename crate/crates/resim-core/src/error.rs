//! First-class failure values for measure evaluation.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Why a measure could not produce a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// Solver did not converge or produced non-finite intermediates.
    Numerical,
    /// The formula is undefined on this input (constant rows, zero norms, ...).
    UndefinedInput,
    /// Inputs have incompatible shapes.
    DimensionMismatch,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::Numerical => write!(f, "numerical"),
            FailureKind::UndefinedInput => write!(f, "undefined-input"),
            FailureKind::DimensionMismatch => write!(f, "dimension-mismatch"),
        }
    }
}

/// A failed evaluation; carried through the harness instead of panicking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureFailure {
    pub kind: FailureKind,
    pub message: String,
}

impl MeasureFailure {
    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: FailureKind::Numerical, message: message.into() }
    }

    pub fn undefined_input(message: impl Into<String>) -> Self {
        Self { kind: FailureKind::UndefinedInput, message: message.into() }
    }

    pub fn dimension_mismatch(message: impl Into<String>) -> Self {
        Self { kind: FailureKind::DimensionMismatch, message: message.into() }
    }
}

impl fmt::Display for MeasureFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for MeasureFailure {}
