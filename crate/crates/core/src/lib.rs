//! Calibration of verbal pairwise-comparison scales against direct scoring.
//!
//! The crate is organised bottom-up:
//!
//! - [`pcm`]: pairwise comparison matrices, CI/CR, eigenvector and
//!   geometric-mean weights.
//! - [`scales`]: the four-item verbal scale `1 < s < m < l`, its parameter
//!   grid, and a catalog of published numeric scales.
//! - [`ri`]: seeded, parallel Monte-Carlo estimation of the Random Index.
//! - [`dataset`]: survey records, ingestion, cleaning and descriptive
//!   analyses.
//! - [`calibration`]: grid search for the scale whose weights best match the
//!   direct scores, per respondent and on average.

pub mod calibration;
pub mod dataset;
pub mod pcm;
pub mod ri;
pub mod scales;
pub mod synthetic;

pub use calibration::{CalibrationError, CalibrationResult, WeightMethod};
pub use dataset::{RespondentRecord, VerbalPattern};
pub use pcm::{ConsistencyReport, Pcm, PcmError, WeightVector};
pub use ri::{RiError, RiEstimate};
pub use scales::{ScaleParams, VerbalCategory};

/// Every numeric tolerance used by the crate, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance on `a_ij * a_ji = 1`.
    pub reciprocity: f64,
    /// Largest componentwise relative change accepted as converged.
    pub eigen_relative_change: f64,
    pub eigen_max_iter: usize,
    /// Relative distance from `n` that is treated as rounding noise on
    /// the principal eigenvalue.
    pub eigenvalue_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reciprocity: 1e-12,
            eigen_relative_change: 1e-12,
            eigen_max_iter: 10_000,
            eigenvalue_floor: 1e-12,
        }
    }
}
