//! Descriptive analyses over cleaned records: score-ratio histograms per
//! verbal category, CR histograms, and test-retest step distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Preferred, RecordError, RespondentRecord, VerbalPattern};
use crate::pcm::{consistency_report, ConsistencyReport, PcmError};
use crate::scales::{ScaleParams, VerbalCategory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("bin width {0} must be positive and finite")]
    InvalidBinWidth(f64),
    #[error("respondent {id}: {source}")]
    Record { id: String, source: RecordError },
    #[error("respondent {id}: {source}")]
    Consistency { id: String, source: PcmError },
    #[error("step distance {0} is outside 0..=6")]
    DistanceOutOfRange(u8),
}

/// Distance between two answers on the seven-point signed verbal scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepDistance(u8);

impl StepDistance {
    pub const MAX: u8 = 6;

    pub fn new(value: u8) -> Result<Self, AnalysisError> {
        if value > Self::MAX {
            return Err(AnalysisError::DistanceOutOfRange(value));
        }
        Ok(StepDistance(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBin {
    pub center: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrBin {
    /// Inclusive lower edge; the bin is `[lower, lower + width)`.
    pub lower: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn check_width(width: f64) -> Result<(), AnalysisError> {
    if width.is_finite() && width > 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidBinWidth(width))
    }
}

/// Histogram of direct-score ratios over all judgments in `category`.
///
/// The ratio is score(preferred) / score(other); for Equal judgments it is
/// score(item_a) / score(item_b). Ratios are rounded half-up to the nearest
/// multiple of `bin_width`, and anything above `cap` lands in the cap bin.
pub fn ratio_histogram(
    records: &[RespondentRecord],
    category: VerbalCategory,
    bin_width: f64,
    cap: f64,
) -> Result<Vec<RatioBin>, AnalysisError> {
    check_width(bin_width)?;
    let cap_index = (cap / bin_width + 0.5).floor() as i64;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for record in records {
        for j in record.judgments.iter().filter(|j| j.category == category) {
            let (num, den) = match j.preferred {
                Preferred::A | Preferred::Neither => {
                    (record.scores[j.item_a], record.scores[j.item_b])
                }
                Preferred::B => (record.scores[j.item_b], record.scores[j.item_a]),
            };
            let ratio = f64::from(num) / f64::from(den);
            let index = if ratio > cap {
                cap_index
            } else {
                (ratio / bin_width + 0.5).floor() as i64
            };
            *counts.entry(index).or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(index, count)| RatioBin {
            center: index as f64 * bin_width,
            count,
        })
        .collect())
}

/// |encode(original) - encode(repeat)| where both answers are encoded on the
/// canonical pair by preferred-item identity, so screen orientation of the
/// repeat does not matter.
pub fn repeated_step_distance(record: &RespondentRecord) -> Result<StepDistance, AnalysisError> {
    let original = record
        .judgments
        .iter()
        .find(|j| j.presentation_order == 2)
        .ok_or_else(|| AnalysisError::Record {
            id: record.id.clone(),
            source: RecordError::PresentationOrder {
                position: 2,
                found: 0,
            },
        })?;
    if original.pair() != record.repeated.pair() {
        return Err(AnalysisError::Record {
            id: record.id.clone(),
            source: RecordError::RepeatPairMismatch {
                a: record.repeated.item_a,
                b: record.repeated.item_b,
            },
        });
    }
    let diff = (original.signed_steps() - record.repeated.signed_steps()).unsigned_abs();
    StepDistance::new(diff)
}

/// Consistency of a respondent's matrix under `params`, against `ri`.
pub fn respondent_consistency(
    record: &RespondentRecord,
    params: &ScaleParams,
    ri: f64,
) -> Result<ConsistencyReport, AnalysisError> {
    let pattern = VerbalPattern::from_record(record).map_err(|source| AnalysisError::Record {
        id: record.id.clone(),
        source,
    })?;
    consistency_report(&pattern.to_pcm(params), ri).map_err(|source| AnalysisError::Consistency {
        id: record.id.clone(),
        source,
    })
}

/// Quantile by linear interpolation between order statistics at position
/// `p * (len - 1)` (the inclusive method). `sorted` must be ascending and
/// non-empty.
pub fn quantile_inclusive(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let position = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let frac = position - lower as f64;
    sorted[lower] + (sorted[upper] - sorted[lower]) * frac
}

fn box_stats(mut values: Vec<f64>) -> BoxStats {
    values.sort_by(f64::total_cmp);
    BoxStats {
        count: values.len(),
        min: values[0],
        q1: quantile_inclusive(&values, 0.25),
        median: quantile_inclusive(&values, 0.5),
        q3: quantile_inclusive(&values, 0.75),
        max: values[values.len() - 1],
    }
}

/// Five-number CR summary per repeated-question step distance.
pub fn distance_category_stats(
    records: &[RespondentRecord],
    params: &ScaleParams,
    ri: f64,
) -> Result<BTreeMap<StepDistance, BoxStats>, AnalysisError> {
    let mut groups: BTreeMap<StepDistance, Vec<f64>> = BTreeMap::new();
    for record in records {
        let distance = repeated_step_distance(record)?;
        let cr = respondent_consistency(record, params, ri)?.cr;
        groups.entry(distance).or_default().push(cr);
    }
    Ok(groups
        .into_iter()
        .map(|(d, crs)| (d, box_stats(crs)))
        .collect())
}

/// Histogram of per-respondent CR with left-closed bins of `bin_width`.
pub fn cr_histogram(
    records: &[RespondentRecord],
    params: &ScaleParams,
    ri: f64,
    bin_width: f64,
) -> Result<Vec<CrBin>, AnalysisError> {
    check_width(bin_width)?;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for record in records {
        let cr = respondent_consistency(record, params, ri)?.cr;
        *counts.entry((cr / bin_width).floor() as i64).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(index, count)| CrBin {
            lower: index as f64 * bin_width,
            count,
        })
        .collect())
}
