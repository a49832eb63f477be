//! Questionnaire protocol: all pairs in a shuffled order, direct scores,
//! demographics, then the second-presented pair again with sides swapped.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scalecal_core::dataset::{
    pair_count, Demographics, Judgment, Preferred, RecordError, RespondentRecord, MAX_SCORE,
};
use scalecal_core::scales::VerbalCategory;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub rgb: [u8; 3],
}

impl Item {
    pub fn new(name: &str, rgb: [u8; 3]) -> Self {
        Item {
            name: name.to_string(),
            rgb,
        }
    }
}

/// The six stimulus colors.
pub fn default_items() -> Vec<Item> {
    vec![
        Item::new("red", [189, 62, 57]),
        Item::new("green", [90, 151, 90]),
        Item::new("blue", [84, 110, 183]),
        Item::new("magenta", [179, 55, 151]),
        Item::new("turquoise", [63, 185, 177]),
        Item::new("yellow", [227, 203, 78]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "k", rename_all = "snake_case")]
pub enum Phase {
    /// 1-based position in the pair order.
    Pairwise(usize),
    Scoring,
    Demographics,
    Repeat,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Pairwise(k) => write!(f, "pairwise({k})"),
            Phase::Scoring => f.write_str("scoring"),
            Phase::Demographics => f.write_str("demographics"),
            Phase::Repeat => f.write_str("repeat"),
            Phase::Done => f.write_str("done"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("need at least 3 items, got {0}")]
    TooFewItems(usize),
    #[error("duplicate item {0:?}")]
    DuplicateItem(String),
    #[error("invalid item name {0:?}: use letters, digits, '-' or '_' (and not \"neither\")")]
    InvalidItemName(String),
    #[error("no more questions")]
    NoMoreQuestions,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmitError {
    #[error("expected a {expected} answer in phase {phase}, got {got}")]
    PhaseMismatch {
        phase: Phase,
        expected: &'static str,
        got: &'static str,
    },
    #[error("answer names pair {got:?}, but the question is about {expected:?}")]
    WrongPair {
        expected: [String; 2],
        got: [String; 2],
    },
    #[error("preferred item {0:?} is not part of the pair")]
    UnknownPreferred(String),
    #[error("'equal' must go with preferred \"neither\" and vice versa")]
    EqualMismatch,
    #[error("score for {item} is {value}, allowed 0..={max}")]
    ScoreOutOfRange { item: String, value: i64, max: u8 },
    #[error("missing score for {0}")]
    MissingScore(String),
    #[error("score given for unknown item {0:?}")]
    UnknownScoreItem(String),
    #[error("session is complete")]
    Done,
}

impl SubmitError {
    /// Name of the offending answer field.
    pub fn field(&self) -> String {
        match self {
            SubmitError::PhaseMismatch { .. } | SubmitError::Done => "kind".into(),
            SubmitError::WrongPair { .. } => "items".into(),
            SubmitError::UnknownPreferred(_) | SubmitError::EqualMismatch => "preferred".into(),
            SubmitError::ScoreOutOfRange { item, .. } | SubmitError::MissingScore(item) => {
                format!("scores.{item}")
            }
            SubmitError::UnknownScoreItem(item) => format!("scores.{item}"),
        }
    }
}

/// Answer to a pair question. `items` names the pair as displayed; it is
/// compared as an unordered set so either orientation is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnswer {
    pub items: [String; 2],
    /// Item name or "neither".
    pub preferred: String,
    pub category: VerbalCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    PairChoice(PairAnswer),
    DirectScores {
        scores: BTreeMap<String, i64>,
    },
    Demographics {
        gender: String,
        age: String,
        county: String,
    },
    RepeatChoice(PairAnswer),
}

impl Answer {
    fn kind(&self) -> &'static str {
        match self {
            Answer::PairChoice(_) => "pair_choice",
            Answer::DirectScores { .. } => "direct_scores",
            Answer::Demographics { .. } => "demographics",
            Answer::RepeatChoice(_) => "repeat_choice",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Question {
    PairChoice {
        step: usize,
        total_steps: usize,
        left: Item,
        right: Item,
        categories: Vec<VerbalCategory>,
    },
    DirectScores {
        step: usize,
        total_steps: usize,
        items: Vec<Item>,
        min: u8,
        max: u8,
    },
    Demographics {
        step: usize,
        total_steps: usize,
        fields: Vec<String>,
    },
    RepeatChoice {
        step: usize,
        total_steps: usize,
        left: Item,
        right: Item,
        categories: Vec<VerbalCategory>,
        orientation_swapped: bool,
        categories_reversed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub items: Vec<Item>,
    /// Canonical `(a, b)` pairs with `a < b`, in presentation order.
    pub pair_order: Vec<(usize, usize)>,
    pub phase: Phase,
    pub seed: u64,
    pub judgments: Vec<Judgment>,
    pub scores: Option<Vec<u8>>,
    pub demographics: Option<Demographics>,
    pub repeated: Option<Judgment>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "neither"
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Seeded uniform shuffle of all unordered pairs.
pub fn shuffled_pairs(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pairs
}

impl SessionState {
    pub fn create(
        session_id: impl Into<String>,
        items: Vec<Item>,
        seed: u64,
    ) -> Result<Self, SessionError> {
        if items.len() < 3 {
            return Err(SessionError::TooFewItems(items.len()));
        }
        let mut seen = HashSet::new();
        for item in &items {
            if !valid_name(&item.name) {
                return Err(SessionError::InvalidItemName(item.name.clone()));
            }
            if !seen.insert(item.name.as_str()) {
                return Err(SessionError::DuplicateItem(item.name.clone()));
            }
        }
        let pair_order = shuffled_pairs(items.len(), seed);
        Ok(SessionState {
            session_id: session_id.into(),
            items,
            pair_order,
            phase: Phase::Pairwise(1),
            seed,
            judgments: Vec::new(),
            scores: None,
            demographics: None,
            repeated: None,
        })
    }

    /// Pairs + scoring + demographics + repeat.
    pub fn total_steps(&self) -> usize {
        pair_count(self.items.len()) + 3
    }

    /// Number of answers accepted so far.
    pub fn steps_done(&self) -> usize {
        let p = self.pair_order.len();
        match self.phase {
            Phase::Pairwise(k) => k - 1,
            Phase::Scoring => p,
            Phase::Demographics => p + 1,
            Phase::Repeat => p + 2,
            Phase::Done => p + 3,
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    fn repeat_pair(&self) -> (usize, usize) {
        self.pair_order[1]
    }

    pub fn next_question(&self) -> Result<Question, SessionError> {
        let step = self.steps_done() + 1;
        let total_steps = self.total_steps();
        let categories = VerbalCategory::ALL.to_vec();
        Ok(match self.phase {
            Phase::Pairwise(k) => {
                let (a, b) = self.pair_order[k - 1];
                Question::PairChoice {
                    step,
                    total_steps,
                    left: self.items[a].clone(),
                    right: self.items[b].clone(),
                    categories,
                }
            }
            Phase::Scoring => Question::DirectScores {
                step,
                total_steps,
                items: self.items.clone(),
                min: 0,
                max: MAX_SCORE,
            },
            Phase::Demographics => Question::Demographics {
                step,
                total_steps,
                fields: vec!["gender".into(), "age".into(), "county".into()],
            },
            Phase::Repeat => {
                let (a, b) = self.repeat_pair();
                Question::RepeatChoice {
                    step,
                    total_steps,
                    left: self.items[b].clone(),
                    right: self.items[a].clone(),
                    categories: categories.into_iter().rev().collect(),
                    orientation_swapped: true,
                    categories_reversed: true,
                }
            }
            Phase::Done => return Err(SessionError::NoMoreQuestions),
        })
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|i| i.name == name)
    }

    fn judge(
        &self,
        (a, b): (usize, usize),
        answer: &PairAnswer,
        order: usize,
    ) -> Result<Judgment, SubmitError> {
        let expected = [self.items[a].name.clone(), self.items[b].name.clone()];
        let same = (answer.items[0] == expected[0] && answer.items[1] == expected[1])
            || (answer.items[0] == expected[1] && answer.items[1] == expected[0]);
        if !same {
            return Err(SubmitError::WrongPair {
                expected,
                got: answer.items.clone(),
            });
        }
        let preferred = match answer.preferred.as_str() {
            "neither" => Preferred::Neither,
            p if p == expected[0] => Preferred::A,
            p if p == expected[1] => Preferred::B,
            p => return Err(SubmitError::UnknownPreferred(p.to_string())),
        };
        if (preferred == Preferred::Neither) != (answer.category == VerbalCategory::Equal) {
            return Err(SubmitError::EqualMismatch);
        }
        Ok(Judgment {
            item_a: a,
            item_b: b,
            preferred,
            category: answer.category,
            presentation_order: order,
            reversed: false,
        })
    }

    fn mismatch(&self, expected: &'static str, answer: &Answer) -> SubmitError {
        SubmitError::PhaseMismatch {
            phase: self.phase,
            expected,
            got: answer.kind(),
        }
    }

    /// Validates `answer` against the current question and returns the
    /// advanced state; `self` is never modified.
    pub fn submit(&self, answer: &Answer) -> Result<SessionState, SubmitError> {
        let mut next = self.clone();
        match (self.phase, answer) {
            (Phase::Done, _) => return Err(SubmitError::Done),
            (Phase::Pairwise(k), Answer::PairChoice(a)) => {
                next.judgments
                    .push(self.judge(self.pair_order[k - 1], a, k)?);
                next.phase = if k == self.pair_order.len() {
                    Phase::Scoring
                } else {
                    Phase::Pairwise(k + 1)
                };
            }
            (Phase::Pairwise(_), other) => return Err(self.mismatch("pair_choice", other)),
            (Phase::Scoring, Answer::DirectScores { scores }) => {
                for name in scores.keys() {
                    if self.index_of(name).is_none() {
                        return Err(SubmitError::UnknownScoreItem(name.clone()));
                    }
                }
                let mut values = Vec::with_capacity(self.items.len());
                for item in &self.items {
                    let value = *scores
                        .get(&item.name)
                        .ok_or_else(|| SubmitError::MissingScore(item.name.clone()))?;
                    if !(0..=i64::from(MAX_SCORE)).contains(&value) {
                        return Err(SubmitError::ScoreOutOfRange {
                            item: item.name.clone(),
                            value,
                            max: MAX_SCORE,
                        });
                    }
                    values.push(value as u8);
                }
                next.scores = Some(values);
                next.phase = Phase::Demographics;
            }
            (Phase::Scoring, other) => return Err(self.mismatch("direct_scores", other)),
            (
                Phase::Demographics,
                Answer::Demographics {
                    gender,
                    age,
                    county,
                },
            ) => {
                next.demographics = Some(Demographics {
                    gender: gender.trim().to_string(),
                    age: age.trim().to_string(),
                    county: county.trim().to_string(),
                });
                next.phase = Phase::Repeat;
            }
            (Phase::Demographics, other) => return Err(self.mismatch("demographics", other)),
            (Phase::Repeat, Answer::RepeatChoice(a)) => {
                let mut judgment = self.judge(self.repeat_pair(), a, self.pair_order.len() + 1)?;
                judgment.reversed = true;
                next.repeated = Some(judgment);
                next.phase = Phase::Done;
            }
            (Phase::Repeat, other) => return Err(self.mismatch("repeat_choice", other)),
        }
        Ok(next)
    }

    /// The completed session as a dataset record, or `None` before Done.
    pub fn to_record(&self) -> Option<Result<RespondentRecord, RecordError>> {
        if !self.is_done() {
            return None;
        }
        let record = RespondentRecord {
            id: self.session_id.clone(),
            items: self.items.iter().map(|i| i.name.clone()).collect(),
            judgments: self.judgments.clone(),
            scores: self.scores.clone()?,
            repeated: self.repeated.clone()?,
            demographics: self.demographics.clone()?,
        };
        Some(record.validate().map(|()| record))
    }
}
