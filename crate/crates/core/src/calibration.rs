//! Grid search for the verbal scale whose derived weights come closest to a
//! respondent's direct scores.
//!
//! For a scale `(s, m, l)` each respondent's verbal judgments become a
//! matrix, weights are derived by EM or LLSM, and the Euclidean distance to
//! the sum-1 normalized direct scores is measured. The individual optimum
//! minimizes that distance per respondent; the average optimum minimizes the
//! arithmetic mean over the cohort. Ties go to the lexicographically
//! smallest `(s, m, l)` compared as exact values, so the result does not
//! depend on how the sweep is partitioned.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{score_weights, RecordError, RespondentRecord, VerbalPattern};
use crate::pcm::{eigenvector_weights, llsm_weights, PcmError, WeightVector};
use crate::scales::{GridSpec, ScaleParams};

pub const NORMALIZATION: &str = "both vectors normalized to sum 1";
pub const AGGREGATE: &str = "arithmetic mean of respondent distances";
pub const TIE_BREAK: &str =
    "smallest distance, then lexicographically smallest (s, m, l) by exact value";

const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("the scale grid is empty")]
    EmptyGrid,
    #[error("no respondents to calibrate")]
    EmptyCohort,
    #[error("respondent {id}: {source}")]
    Record { id: String, source: RecordError },
    #[error("respondent {id} at scale ({params}): {source}")]
    Weights {
        id: String,
        params: ScaleParams,
        source: PcmError,
    },
    #[error("respondent {id}: target has {target} weights but the pattern has {pattern} items")]
    SizeMismatch {
        id: String,
        target: usize,
        pattern: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMethod {
    Em,
    Llsm,
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMethod::Em => "em",
            WeightMethod::Llsm => "llsm",
        })
    }
}

impl FromStr for WeightMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(WeightMethod::Em),
            "llsm" => Ok(WeightMethod::Llsm),
            other => Err(format!(
                "unknown weight method '{other}', expected em or llsm"
            )),
        }
    }
}

/// What calibration needs from a respondent: the verbal pattern and the
/// target weights from direct evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub pattern: VerbalPattern,
    pub target: WeightVector,
}

impl Subject {
    pub fn new(
        id: impl Into<String>,
        pattern: VerbalPattern,
        target: WeightVector,
    ) -> Result<Self, CalibrationError> {
        let id = id.into();
        if pattern.size() != target.len() {
            return Err(CalibrationError::SizeMismatch {
                id,
                target: target.len(),
                pattern: pattern.size(),
            });
        }
        Ok(Subject {
            id,
            pattern,
            target,
        })
    }

    pub fn from_record(record: &RespondentRecord) -> Result<Self, CalibrationError> {
        let wrap = |source| CalibrationError::Record {
            id: record.id.clone(),
            source,
        };
        let pattern = VerbalPattern::from_record(record).map_err(wrap)?;
        let target = score_weights(record).map_err(wrap)?;
        Subject::new(record.id.clone(), pattern, target)
    }

    /// A subject whose targets are exactly the weights the pattern produces
    /// at `params`, so its distance there is zero.
    pub fn planted(
        id: impl Into<String>,
        pattern: VerbalPattern,
        params: &ScaleParams,
        method: WeightMethod,
    ) -> Result<Self, CalibrationError> {
        let id = id.into();
        let target = derived_weights(&id, &pattern, params, method)?;
        Subject::new(id, pattern, target)
    }

    pub fn distance(
        &self,
        params: &ScaleParams,
        method: WeightMethod,
    ) -> Result<f64, CalibrationError> {
        let weights = derived_weights(&self.id, &self.pattern, params, method)?;
        Ok(weights.euclidean_distance(&self.target))
    }
}

fn derived_weights(
    id: &str,
    pattern: &VerbalPattern,
    params: &ScaleParams,
    method: WeightMethod,
) -> Result<WeightVector, CalibrationError> {
    let pcm = pattern.to_pcm(params);
    match method {
        WeightMethod::Llsm => Ok(llsm_weights(&pcm)),
        WeightMethod::Em => {
            eigenvector_weights(&pcm)
                .map(|(_, w)| w)
                .map_err(|source| CalibrationError::Weights {
                    id: id.to_string(),
                    params: *params,
                    source,
                })
        }
    }
}

pub fn respondent_distance(
    record: &RespondentRecord,
    params: &ScaleParams,
    method: WeightMethod,
) -> Result<f64, CalibrationError> {
    Subject::from_record(record)?.distance(params, method)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentOptimum {
    pub id: String,
    pub best: ScaleParams,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub method: WeightMethod,
    pub best: ScaleParams,
    /// Mean distance at `best`.
    pub best_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_respondent: Option<Vec<RespondentOptimum>>,
    pub evaluated_count: usize,
    pub normalization: String,
    pub aggregate: String,
    pub tie_break: String,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    params: ScaleParams,
    distance: f64,
}

impl Candidate {
    fn cmp(&self, other: &Candidate) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.params.lex_cmp(&other.params))
    }

    fn keep_better(slot: &mut Option<Candidate>, candidate: Candidate) {
        match slot {
            Some(current) if current.cmp(&candidate) != Ordering::Greater => {}
            _ => *slot = Some(candidate),
        }
    }
}

/// Best candidates found over one slice of the grid.
#[derive(Debug, Clone)]
struct Sweep {
    average: Option<Candidate>,
    individual: Vec<Option<Candidate>>,
}

impl Sweep {
    fn merge(mut self, other: Sweep) -> Sweep {
        if let Some(c) = other.average {
            Candidate::keep_better(&mut self.average, c);
        }
        for (mine, theirs) in self.individual.iter_mut().zip(other.individual) {
            if let Some(c) = theirs {
                Candidate::keep_better(mine, c);
            }
        }
        self
    }
}

fn sweep_chunk(
    subjects: &[Subject],
    chunk: &[ScaleParams],
    method: WeightMethod,
) -> Result<Sweep, CalibrationError> {
    let mut sweep = Sweep {
        average: None,
        individual: vec![None; subjects.len()],
    };
    let count = subjects.len() as f64;
    for params in chunk {
        let mut total = 0.0;
        for (subject, best) in subjects.iter().zip(sweep.individual.iter_mut()) {
            let distance = subject.distance(params, method)?;
            total += distance;
            Candidate::keep_better(
                best,
                Candidate {
                    params: *params,
                    distance,
                },
            );
        }
        Candidate::keep_better(
            &mut sweep.average,
            Candidate {
                params: *params,
                distance: total / count,
            },
        );
    }
    Ok(sweep)
}

fn sweep(
    subjects: &[Subject],
    grid: &[ScaleParams],
    method: WeightMethod,
) -> Result<Sweep, CalibrationError> {
    if grid.is_empty() {
        return Err(CalibrationError::EmptyGrid);
    }
    if subjects.is_empty() {
        return Err(CalibrationError::EmptyCohort);
    }
    let partials: Vec<Result<Sweep, CalibrationError>> = grid
        .par_chunks(CHUNK)
        .map(|chunk| sweep_chunk(subjects, chunk, method))
        .collect();
    let mut merged: Option<Sweep> = None;
    for partial in partials {
        let partial = partial?;
        merged = Some(match merged {
            None => partial,
            Some(m) => m.merge(partial),
        });
    }
    Ok(merged.expect("grid is non-empty"))
}

pub fn calibrate_subject(
    subject: &Subject,
    grid: &[ScaleParams],
    method: WeightMethod,
) -> Result<(ScaleParams, f64), CalibrationError> {
    let result = sweep(std::slice::from_ref(subject), grid, method)?;
    let best = result.individual[0].expect("grid is non-empty");
    Ok((best.params, best.distance))
}

pub fn calibrate_individual(
    record: &RespondentRecord,
    grid: &[ScaleParams],
    method: WeightMethod,
) -> Result<(ScaleParams, f64), CalibrationError> {
    calibrate_subject(&Subject::from_record(record)?, grid, method)
}

pub fn calibrate_subjects(
    subjects: &[Subject],
    grid: &[ScaleParams],
    method: WeightMethod,
    per_respondent: bool,
) -> Result<CalibrationResult, CalibrationError> {
    let result = sweep(subjects, grid, method)?;
    let best = result.average.expect("grid is non-empty");
    let per_respondent = per_respondent.then(|| {
        subjects
            .iter()
            .zip(&result.individual)
            .map(|(subject, c)| {
                let c = c.expect("grid is non-empty");
                RespondentOptimum {
                    id: subject.id.clone(),
                    best: c.params,
                    distance: c.distance,
                }
            })
            .collect()
    });
    Ok(CalibrationResult {
        method,
        best: best.params,
        best_distance: best.distance,
        per_respondent,
        evaluated_count: grid.len(),
        normalization: NORMALIZATION.to_string(),
        aggregate: AGGREGATE.to_string(),
        tie_break: TIE_BREAK.to_string(),
    })
}

pub fn calibrate_average(
    records: &[RespondentRecord],
    grid: &[ScaleParams],
    method: WeightMethod,
    per_respondent: bool,
) -> Result<CalibrationResult, CalibrationError> {
    let subjects = records
        .iter()
        .map(Subject::from_record)
        .collect::<Result<Vec<_>, _>>()?;
    calibrate_subjects(&subjects, grid, method, per_respondent)
}

/// Number of respondents whose individual optimum is each scale, restricted
/// to the bounds of `display` and listed in lexicographic order.
pub fn optimality_heatmap(
    results: &[RespondentOptimum],
    display: &GridSpec,
) -> Vec<(ScaleParams, usize)> {
    let mut points: Vec<ScaleParams> = results
        .iter()
        .map(|r| r.best)
        .filter(|p| display.contains_bounds(p))
        .collect();
    points.sort_by(ScaleParams::lex_cmp);
    let mut counts: Vec<(ScaleParams, usize)> = Vec::new();
    for p in points {
        match counts.last_mut() {
            Some((last, n)) if last.lex_cmp(&p) == Ordering::Equal => *n += 1,
            _ => counts.push((p, 1)),
        }
    }
    counts
}
