//! Monte-Carlo estimation of the Random Index for arbitrary matrix sizes and
//! scale value sets.
//!
//! Each sample fills the strict upper triangle of an `n x n` matrix with
//! entries drawn independently and uniformly from the *support*: the scale
//! values, their reciprocals and 1, deduplicated. Reciprocals fill the lower
//! triangle and the CI comes from the eigenvector routine in [`crate::pcm`].
//!
//! Samples are split into `workers` contiguous index ranges. Range `w` is
//! driven by a ChaCha8 stream seeded from `seed` with stream number `w`, and
//! the per-range moments are merged in range order, so the estimate is
//! bit-reproducible for a fixed `(seed, workers, samples)`. Different worker
//! counts give different (equally valid) estimates.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcm::{consistency_index, principal_eigen, Pcm, PcmError};
use crate::Tolerances;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const LONG_RUN_SAMPLES: u64 = 10_000_000;

/// Label written into estimates describing how the support is formed.
pub const SUPPORT_CONVENTION: &str = "values+reciprocals+1, deduplicated, uniform";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiError {
    #[error("matrix size {0} is too small, need at least 3")]
    SizeTooSmall(usize),
    #[error("scale values must be finite, positive and strictly increasing")]
    InvalidScale,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("sample {sample_index} failed: {source}")]
    Sample { sample_index: u64, source: PcmError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiEstimate {
    pub n: usize,
    pub scale: Vec<f64>,
    pub support: Vec<f64>,
    pub support_convention: String,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub mean_ci: f64,
    pub std_error: f64,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }
}

/// Sorted, deduplicated sampling support for a scale.
pub fn symmetric_support(scale: &[f64]) -> Result<Vec<f64>, RiError> {
    let valid =
        scale.iter().all(|v| v.is_finite() && *v > 0.0) && scale.windows(2).all(|w| w[0] < w[1]);
    if !valid || scale.is_empty() {
        return Err(RiError::InvalidScale);
    }
    let mut support: Vec<f64> = scale
        .iter()
        .flat_map(|&v| [v, 1.0 / v])
        .chain([1.0])
        .collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    Ok(support)
}

pub fn simulate_ri(
    n: usize,
    scale: &[f64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<RiEstimate, RiError> {
    if n < 3 {
        return Err(RiError::SizeTooSmall(n));
    }
    if samples == 0 {
        return Err(RiError::NoSamples);
    }
    if workers == 0 {
        return Err(RiError::NoWorkers);
    }
    let support = symmetric_support(scale)?;

    let ranges: Vec<(usize, u64, u64)> = (0..workers)
        .map(|w| {
            let start = samples * w as u64 / workers as u64;
            let end = samples * (w as u64 + 1) / workers as u64;
            (w, start, end)
        })
        .collect();

    let partials: Vec<Result<Moments, RiError>> = ranges
        .into_par_iter()
        .map(|(worker, start, end)| run_range(n, &support, seed, worker as u64, start, end))
        .collect();

    let mut total = Moments::default();
    for partial in partials {
        total = total.merge(partial?);
    }

    let std_error = if total.count > 1 {
        (total.m2 / (total.count - 1) as f64 / total.count as f64).sqrt()
    } else {
        0.0
    };

    Ok(RiEstimate {
        n,
        scale: scale.to_vec(),
        support,
        support_convention: SUPPORT_CONVENTION.to_string(),
        samples,
        seed,
        workers,
        mean_ci: total.mean.max(0.0),
        std_error,
    })
}

fn run_range(
    n: usize,
    support: &[f64],
    seed: u64,
    stream: u64,
    start: u64,
    end: u64,
) -> Result<Moments, RiError> {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut upper = vec![0.0; n * (n - 1) / 2];
    let mut moments = Moments::default();
    for sample_index in start..end {
        for slot in upper.iter_mut() {
            *slot = support[rng.random_range(0..support.len())];
        }
        let ci = Pcm::from_upper(n, &upper)
            .and_then(|pcm| principal_eigen(&pcm, tol.eigen_relative_change, tol.eigen_max_iter))
            .and_then(|(lambda_max, _)| consistency_index(lambda_max, n))
            .map_err(|source| RiError::Sample {
                sample_index,
                source,
            })?;
        moments.push(ci);
    }
    Ok(moments)
}

/// Factor converting a CR computed against `ri_base` into one computed
/// against `ri_modified`.
pub fn cr_multiplier(ri_base: f64, ri_modified: f64) -> f64 {
    ri_base / ri_modified
}
