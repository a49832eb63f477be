use serde::{Deserialize, Serialize};

use super::RespondentRecord;
use crate::scales::VerbalCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    /// Some non-Equal verbal category was never used, leaving its scale
    /// value unconstrained.
    ScaleNotCovered,
    /// At least one direct score was 0, so score ratios are undefined.
    ZeroScore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub id: String,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningOutcome {
    pub kept: Vec<RespondentRecord>,
    pub removed: Vec<Removal>,
    /// Rules in the order they were applied.
    pub rules_applied: Vec<RemovalReason>,
    /// Equal is not required by the coverage rule.
    pub equal_category_exempt: bool,
}

impl CleaningOutcome {
    pub fn removed_count(&self, reason: RemovalReason) -> usize {
        self.removed.iter().filter(|r| r.reason == reason).count()
    }
}

const REQUIRED: [VerbalCategory; 3] = [
    VerbalCategory::Little,
    VerbalCategory::Moderate,
    VerbalCategory::Much,
];

/// Removes records that skip one of Little/Moderate/Much, then records with
/// a zero direct score. Only the main judgments count towards coverage.
pub fn clean(records: Vec<RespondentRecord>) -> CleaningOutcome {
    let mut removed = Vec::new();

    let (covered, uncovered): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| REQUIRED.iter().all(|&c| r.uses_category(c)));
    removed.extend(uncovered.into_iter().map(|r| Removal {
        id: r.id,
        reason: RemovalReason::ScaleNotCovered,
    }));

    let (kept, zeroed): (Vec<_>, Vec<_>) = covered
        .into_iter()
        .partition(|r| r.scores.iter().all(|&s| s > 0));
    removed.extend(zeroed.into_iter().map(|r| Removal {
        id: r.id,
        reason: RemovalReason::ZeroScore,
    }));

    CleaningOutcome {
        kept,
        removed,
        rules_applied: vec![RemovalReason::ScaleNotCovered, RemovalReason::ZeroScore],
        equal_category_exempt: true,
    }
}
