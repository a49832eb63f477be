//! Builders for synthetic respondents with known structure.

use crate::dataset::{
    pair_count, upper_index, Demographics, Judgment, Preferred, RespondentRecord,
};
use crate::scales::VerbalCategory;

/// Judgment on the canonical pair `(a, b)` from a signed step in `-3..=3`.
pub fn judgment_from_steps(a: usize, b: usize, steps: i8, presentation_order: usize) -> Judgment {
    let preferred = match steps.signum() {
        0 => Preferred::Neither,
        1 => Preferred::A,
        _ => Preferred::B,
    };
    Judgment {
        item_a: a,
        item_b: b,
        preferred,
        category: VerbalCategory::from_steps(steps.unsigned_abs()).expect("steps within -3..=3"),
        presentation_order,
        reversed: false,
    }
}

/// Record whose canonical pair `k` (row-major upper triangle) carries
/// `steps[k]`. Pairs are presented in `order` (a permutation of pair
/// indices) or canonically when `order` is `None`.
pub fn record_from_steps(
    id: &str,
    items: &[&str],
    steps: &[i8],
    scores: &[u8],
    repeat_steps: i8,
    order: Option<&[usize]>,
) -> RespondentRecord {
    let n = items.len();
    assert_eq!(steps.len(), pair_count(n), "one step per pair");
    let mut pairs = Vec::with_capacity(steps.len());
    for a in 0..n {
        for b in (a + 1)..n {
            pairs.push((a, b));
        }
    }
    let sequence: Vec<usize> = order.map_or_else(|| (0..pairs.len()).collect(), <[usize]>::to_vec);
    let judgments: Vec<Judgment> = sequence
        .iter()
        .enumerate()
        .map(|(pos, &k)| {
            let (a, b) = pairs[k];
            judgment_from_steps(a, b, steps[upper_index(n, a, b)], pos + 1)
        })
        .collect();
    let second = &judgments[1];
    let mut repeated = judgment_from_steps(
        second.item_a,
        second.item_b,
        repeat_steps,
        judgments.len() + 1,
    );
    repeated.reversed = true;
    RespondentRecord {
        id: id.to_string(),
        items: items.iter().map(|s| s.to_string()).collect(),
        judgments,
        scores: scores.to_vec(),
        repeated,
        demographics: Demographics::default(),
    }
}

/// Steps of a consistent three-tier respondent: items in tier `t` have
/// score proportional to `tier_values[t]`; the step between tiers is
/// looked up from `ratio_steps`, mapping the (lower, higher) tier pair to
/// the category whose value equals their ratio.
pub fn tiered_steps(tiers: &[usize], ratio_steps: impl Fn(usize, usize) -> i8) -> Vec<i8> {
    let n = tiers.len();
    let mut steps = vec![0i8; pair_count(n)];
    for a in 0..n {
        for b in (a + 1)..n {
            let (ta, tb) = (tiers[a], tiers[b]);
            steps[upper_index(n, a, b)] = match ta.cmp(&tb) {
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Less => -ratio_steps(ta, tb),
                std::cmp::Ordering::Greater => ratio_steps(tb, ta),
            };
        }
    }
    steps
}
