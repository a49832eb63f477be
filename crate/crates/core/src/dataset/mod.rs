//! Survey records: one respondent's verbal pairwise judgments, direct
//! scores, repeated judgment and demographics.

mod analysis;
mod clean;
mod io;

pub use analysis::{
    cr_histogram, distance_category_stats, quantile_inclusive, ratio_histogram,
    repeated_step_distance, respondent_consistency, AnalysisError, BoxStats, CrBin, RatioBin,
    StepDistance,
};
pub use clean::{clean, CleaningOutcome, Removal, RemovalReason};
pub use io::{ingest, ingest_path, write_records, DataFormat, IngestError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcm::{Pcm, WeightVector};
use crate::scales::{ScaleParams, VerbalCategory};

pub const MAX_SCORE: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("need at least 3 items, got {0}")]
    TooFewItems(usize),
    #[error("item name '{0}' appears twice")]
    DuplicateItem(String),
    #[error("expected {expected} judgments, got {got}")]
    JudgmentCount { expected: usize, got: usize },
    #[error("judgment {position}: pair ({a}, {b}) is not a valid canonical pair")]
    InvalidPair { position: usize, a: usize, b: usize },
    #[error("judgment {position}: pair ({a}, {b}) already judged")]
    DuplicatePair { position: usize, a: usize, b: usize },
    #[error("pair ({0}, {1}) has no judgment")]
    MissingPair(String, String),
    #[error("judgment {position}: presentation order {found} out of sequence")]
    PresentationOrder { position: usize, found: usize },
    #[error("{field}: preferred side and category disagree (neither must go with equal)")]
    PreferenceMismatch { field: String },
    #[error("expected {expected} scores, got {got}")]
    ScoreCount { expected: usize, got: usize },
    #[error("score_{item}: {score} is outside 0..=10")]
    ScoreOutOfRange { item: String, score: u8 },
    #[error("score_{item}: zero scores cannot be turned into weights")]
    ZeroScore { item: String },
    #[error("repeated judgment pair ({a}, {b}) differs from the second-presented pair")]
    RepeatPairMismatch { a: usize, b: usize },
}

impl RecordError {
    /// Column-style name of the offending field.
    pub fn field(&self) -> String {
        match self {
            RecordError::TooFewItems(_) | RecordError::DuplicateItem(_) => "items".into(),
            RecordError::JudgmentCount { .. } | RecordError::MissingPair(..) => "judgments".into(),
            RecordError::InvalidPair { position, .. }
            | RecordError::DuplicatePair { position, .. }
            | RecordError::PresentationOrder { position, .. } => format!("pair_{position}"),
            RecordError::PreferenceMismatch { field } => field.clone(),
            RecordError::ScoreCount { .. } => "scores".into(),
            RecordError::ScoreOutOfRange { item, .. } | RecordError::ZeroScore { item } => {
                format!("score_{item}")
            }
            RecordError::RepeatPairMismatch { .. } => "repeat_preferred".into(),
        }
    }
}

/// Which item of a canonical pair was preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preferred {
    A,
    B,
    Neither,
}

/// A verbal judgment on the pair `(item_a, item_b)` with `item_a < item_b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub item_a: usize,
    pub item_b: usize,
    pub preferred: Preferred,
    pub category: VerbalCategory,
    pub presentation_order: usize,
    /// Set when the pair was shown with sides and category list reversed.
    #[serde(default)]
    pub reversed: bool,
}

impl Judgment {
    /// Signed position on the combined seven-point scale: 0 for Equal,
    /// +1..+3 favoring `item_a`, -1..-3 favoring `item_b`.
    pub fn signed_steps(&self) -> i8 {
        match self.preferred {
            Preferred::A => self.category.steps(),
            Preferred::B => -self.category.steps(),
            Preferred::Neither => 0,
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.item_a, self.item_b)
    }

    fn preference_is_coherent(&self) -> bool {
        (self.preferred == Preferred::Neither) == (self.category == VerbalCategory::Equal)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub gender: String,
    pub age: String,
    pub county: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RespondentRecord {
    pub id: String,
    /// Item names in canonical order; judgments refer to them by index.
    pub items: Vec<String>,
    /// Judgments in presentation order.
    pub judgments: Vec<Judgment>,
    /// Direct scores aligned with `items`.
    pub scores: Vec<u8>,
    /// The second-presented pair asked again at the end.
    pub repeated: Judgment,
    pub demographics: Demographics,
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl RespondentRecord {
    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let n = self.items.len();
        if n < 3 {
            return Err(RecordError::TooFewItems(n));
        }
        for (i, name) in self.items.iter().enumerate() {
            if self.items[..i].contains(name) {
                return Err(RecordError::DuplicateItem(name.clone()));
            }
        }
        let expected = pair_count(n);
        if self.judgments.len() != expected {
            return Err(RecordError::JudgmentCount {
                expected,
                got: self.judgments.len(),
            });
        }
        let mut seen = vec![false; n * n];
        for (idx, j) in self.judgments.iter().enumerate() {
            let position = idx + 1;
            if !(j.item_a < j.item_b && j.item_b < n) {
                return Err(RecordError::InvalidPair {
                    position,
                    a: j.item_a,
                    b: j.item_b,
                });
            }
            if j.presentation_order != position {
                return Err(RecordError::PresentationOrder {
                    position,
                    found: j.presentation_order,
                });
            }
            if !j.preference_is_coherent() {
                return Err(RecordError::PreferenceMismatch {
                    field: format!("pair_{position}_preferred"),
                });
            }
            let slot = &mut seen[j.item_a * n + j.item_b];
            if *slot {
                return Err(RecordError::DuplicatePair {
                    position,
                    a: j.item_a,
                    b: j.item_b,
                });
            }
            *slot = true;
        }
        // With the count matched and no duplicates, every pair is covered.
        debug_assert!((0..n).all(|a| ((a + 1)..n).all(|b| seen[a * n + b])));

        if self.scores.len() != n {
            return Err(RecordError::ScoreCount {
                expected: n,
                got: self.scores.len(),
            });
        }
        for (item, &score) in self.items.iter().zip(&self.scores) {
            if score > MAX_SCORE {
                return Err(RecordError::ScoreOutOfRange {
                    item: item.clone(),
                    score,
                });
            }
        }
        let second = &self.judgments[1];
        if self.repeated.pair() != second.pair() {
            return Err(RecordError::RepeatPairMismatch {
                a: self.repeated.item_a,
                b: self.repeated.item_b,
            });
        }
        if !self.repeated.preference_is_coherent() {
            return Err(RecordError::PreferenceMismatch {
                field: "repeat_preferred".into(),
            });
        }
        Ok(())
    }

    /// The judgment shown second, which the repeat question re-asks.
    pub fn second_presented(&self) -> &Judgment {
        &self.judgments[1]
    }

    pub fn uses_category(&self, category: VerbalCategory) -> bool {
        self.judgments.iter().any(|j| j.category == category)
    }
}

/// Verbal judgments of one respondent laid out as a matrix of signed steps
/// (strict upper triangle, row by row). Positive steps favor the row item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalPattern {
    n: usize,
    upper: Vec<i8>,
}

impl VerbalPattern {
    pub fn new(n: usize, upper: Vec<i8>) -> Option<Self> {
        (n >= 2 && upper.len() == pair_count(n) && upper.iter().all(|s| (-3..=3).contains(s)))
            .then_some(VerbalPattern { n, upper })
    }

    pub fn from_record(record: &RespondentRecord) -> Result<Self, RecordError> {
        let n = record.items.len();
        if n < 3 {
            return Err(RecordError::TooFewItems(n));
        }
        let mut upper = vec![0i8; pair_count(n)];
        let mut filled = vec![false; upper.len()];
        for (idx, j) in record.judgments.iter().enumerate() {
            if !(j.item_a < j.item_b && j.item_b < n) {
                return Err(RecordError::InvalidPair {
                    position: idx + 1,
                    a: j.item_a,
                    b: j.item_b,
                });
            }
            let k = upper_index(n, j.item_a, j.item_b);
            if filled[k] {
                return Err(RecordError::DuplicatePair {
                    position: idx + 1,
                    a: j.item_a,
                    b: j.item_b,
                });
            }
            filled[k] = true;
            upper[k] = j.signed_steps();
        }
        if let Some(k) = filled.iter().position(|f| !f) {
            let (a, b) = pair_at(n, k);
            return Err(RecordError::MissingPair(
                record.items[a].clone(),
                record.items[b].clone(),
            ));
        }
        Ok(VerbalPattern { n, upper })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> &[i8] {
        &self.upper
    }

    pub fn to_pcm(&self, params: &ScaleParams) -> Pcm {
        let upper: Vec<f64> = self.upper.iter().map(|&s| params.signed_value(s)).collect();
        Pcm::from_upper(self.n, &upper).expect("scale values are positive and finite")
    }

    pub fn uses(&self, category: VerbalCategory) -> bool {
        self.upper
            .iter()
            .any(|s| s.unsigned_abs() as i8 == category.steps())
    }
}

/// Position of `(a, b)`, `a < b`, in the row-major strict upper triangle.
pub fn upper_index(n: usize, a: usize, b: usize) -> usize {
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

fn pair_at(n: usize, k: usize) -> (usize, usize) {
    let mut remaining = k;
    for a in 0..n {
        let row = n - a - 1;
        if remaining < row {
            return (a, a + 1 + remaining);
        }
        remaining -= row;
    }
    unreachable!("index {k} beyond the upper triangle of size {n}")
}

/// Matrix whose `(i, j)` entry is the numeric value of the verbal judgment
/// on items `i` and `j` under `params`.
pub fn build_pcm_from_record(
    record: &RespondentRecord,
    params: &ScaleParams,
) -> Result<Pcm, RecordError> {
    Ok(VerbalPattern::from_record(record)?.to_pcm(params))
}

/// Direct scores normalized to sum 1.
pub fn score_weights(record: &RespondentRecord) -> Result<WeightVector, RecordError> {
    if let Some(i) = record.scores.iter().position(|&s| s == 0) {
        return Err(RecordError::ZeroScore {
            item: record.items.get(i).cloned().unwrap_or_default(),
        });
    }
    let raw = record.scores.iter().map(|&s| f64::from(s)).collect();
    Ok(WeightVector::normalized(raw).expect("scores are positive"))
}

/// The six colors used in the original color-preference survey.
pub const DEFAULT_ITEMS: [&str; 6] = ["red", "green", "blue", "magenta", "turquoise", "yellow"];

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Six-item record presented in canonical pair order.
    pub fn record_from_steps(
        id: &str,
        steps: &[i8],
        scores: [u8; 6],
        repeat_steps: i8,
    ) -> RespondentRecord {
        let mut record = crate::synthetic::record_from_steps(
            id,
            &DEFAULT_ITEMS,
            steps,
            &scores,
            repeat_steps,
            None,
        );
        record.demographics = Demographics {
            gender: "f".into(),
            age: "30".into(),
            county: "Pest".into(),
        };
        record
    }

    /// Uses every category: pairs cycle through -3..=3.
    pub fn varied_steps() -> Vec<i8> {
        (0..15).map(|k| (k % 7) as i8 - 3).collect()
    }
}
