//! Representational similarity measures and grounded evaluation tests.
//!
//! The crate compares neural-network representations (instance-by-feature
//! matrices) with 23 measures spanning alignment, RSM comparison, CCA,
//! neighborhood overlap, distributional statistics, and graph-spectral
//! divergence, and grades those measures against ground truth the evaluation
//! harness can verify: prediction correlation, planted groupings, and
//! monotone layer decay. Seeded synthetic generators provide families with
//! closed-form expected structure.

pub mod assignment;
pub mod error;
pub mod eval;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod repr;
pub mod synth;

pub use error::{FailureKind, MeasureFailure};
pub use measures::{
    EvalContext, Family, MeasureDescriptor, MeasureResult, Orientation, Registry,
};
pub use repr::{DataError, ModelOutputs, Representation};

pub use nalgebra;
