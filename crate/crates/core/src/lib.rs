//! Dimension witnesses on the two lowest Fock levels measured with binned
//! homodyne and displacement-based on/off detection: optimal violations,
//! loss thresholds, certified min-entropy and reference-frame-free
//! violation statistics.

pub mod cv;
pub mod error;
pub mod fixtures;
pub mod framefree;
pub mod linalg;
pub mod optimize;
pub mod qubit;
pub mod randomness;
pub mod report;
pub mod rng;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{BlochVector, Complex2x2};
pub use optimize::{
    max_witness, MeasurementKind, MeasurementSetting, OptimizationResult, OptimizerConfig,
    SchemeSpec,
};
pub use qubit::{Behavior, PreparationAngles, ProjectiveAngles};
pub use witness::Witness;
