use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalecal_core::dataset::{
    build_pcm_from_record, clean, cr_histogram, distance_category_stats, ingest, ratio_histogram,
    repeated_step_distance, write_records, DataFormat, RemovalReason, RespondentRecord,
    StepDistance, DEFAULT_ITEMS,
};
use scalecal_core::scales::{ScaleParams, VerbalCategory};
use scalecal_core::synthetic::record_from_steps;

fn reference_scale() -> ScaleParams {
    ScaleParams::new(1.5, 1.7, 2.0).unwrap()
}

fn random_record(rng: &mut ChaCha8Rng, id: usize, zero_scores: bool) -> RespondentRecord {
    let steps: Vec<i8> = (0..15).map(|_| rng.random_range(-3..=3)).collect();
    let low = if zero_scores { 0 } else { 1 };
    let scores: Vec<u8> = (0..6).map(|_| rng.random_range(low..=10)).collect();
    let mut order: Vec<usize> = (0..15).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    record_from_steps(
        &format!("r{id}"),
        &DEFAULT_ITEMS,
        &steps,
        &scores,
        rng.random_range(-3..=3),
        Some(&order),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clean_is_idempotent_and_partitions(seed in any::<u64>(), count in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<_> = (0..count).map(|i| random_record(&mut rng, i, true)).collect();
        let outcome = clean(records.clone());
        prop_assert_eq!(outcome.kept.len() + outcome.removed.len(), records.len());
        for r in &outcome.kept {
            prop_assert!(!outcome.removed.iter().any(|x| x.id == r.id));
        }
        let again = clean(outcome.kept.clone());
        prop_assert_eq!(again.kept, outcome.kept);
        prop_assert!(again.removed.is_empty());
    }

    #[test]
    fn ratio_counts_match_judgment_counts(seed in any::<u64>(), count in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<_> = (0..count).map(|i| random_record(&mut rng, i, false)).collect();
        for category in VerbalCategory::ALL {
            let expected = records.iter().flat_map(|r| &r.judgments).filter(|j| j.category == category).count();
            let total: usize = ratio_histogram(&records, category, 0.25, 10.0).unwrap().iter().map(|b| b.count).sum();
            prop_assert_eq!(total, expected);
        }
    }

    #[test]
    fn distances_ignore_display_orientation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<_> = (0..5).map(|i| random_record(&mut rng, i, false)).collect();
        let mut csv = Vec::new();
        write_records(&records, DataFormat::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        let mut swapped = String::from(lines.next().unwrap());
        swapped.push('\n');
        for line in lines {
            let mut cells: Vec<&str> = line.split(',').collect();
            for k in 0..15 {
                cells.swap(1 + 4 * k, 2 + 4 * k);
            }
            swapped.push_str(&cells.join(","));
            swapped.push('\n');
        }
        let back = ingest(swapped.as_bytes(), DataFormat::Csv).unwrap();
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(repeated_step_distance(a).unwrap(), repeated_step_distance(b).unwrap());
        }
    }
}

#[test]
fn equal_ratios_are_balanced_under_symmetric_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let records: Vec<_> = (0..400)
        .map(|i| {
            let scores: Vec<u8> = (0..6)
                .map(|_| (5 + rng.random_range(-3i8..=3)) as u8)
                .collect();
            record_from_steps(&format!("e{i}"), &DEFAULT_ITEMS, &[0; 15], &scores, 0, None)
        })
        .collect();
    let bins = ratio_histogram(&records, VerbalCategory::Equal, 0.01, 10.0).unwrap();
    let below: usize = bins
        .iter()
        .filter(|b| b.center < 1.0)
        .map(|b| b.count)
        .sum();
    let above: usize = bins
        .iter()
        .filter(|b| b.center > 1.0)
        .map(|b| b.count)
        .sum();
    let trials = (below + above) as f64;
    // Normal approximation of the 95% interval for Binomial(trials, 1/2).
    let half_width = 1.96 * (trials * 0.25).sqrt();
    assert!(
        ((below as f64) - trials / 2.0).abs() <= half_width,
        "below {below}, above {above}"
    );
}

#[test]
fn cleaning_bookkeeping_on_constructed_cohort() {
    let mut records = Vec::new();
    let full: Vec<i8> = (0..15).map(|k| (k % 7) as i8 - 3).collect();
    let no_moderate: Vec<i8> = full
        .iter()
        .map(|&s| if s.abs() == 2 { s.signum() } else { s })
        .collect();
    for i in 0..7 {
        records.push(record_from_steps(
            &format!("keep{i}"),
            &DEFAULT_ITEMS,
            &full,
            &[3, 4, 5, 6, 7, 8],
            0,
            None,
        ));
    }
    for i in 0..4 {
        records.push(record_from_steps(
            &format!("scale{i}"),
            &DEFAULT_ITEMS,
            &no_moderate,
            &[0, 4, 5, 6, 7, 8],
            0,
            None,
        ));
    }
    for i in 0..3 {
        records.push(record_from_steps(
            &format!("zero{i}"),
            &DEFAULT_ITEMS,
            &full,
            &[3, 0, 5, 6, 7, 8],
            0,
            None,
        ));
    }
    let outcome = clean(records);
    assert_eq!(outcome.kept.len(), 7);
    assert_eq!(outcome.removed_count(RemovalReason::ScaleNotCovered), 4);
    assert_eq!(outcome.removed_count(RemovalReason::ZeroScore), 3);
    assert!(outcome.removed.iter().all(|r| r.id.starts_with(
        if r.reason == RemovalReason::ZeroScore {
            "zero"
        } else {
            "scale"
        }
    )));
}

#[test]
fn all_forty_nine_encoding_pairs() {
    for original in -3i8..=3 {
        for repeat in -3i8..=3 {
            let mut steps = [0i8; 15];
            steps[1] = original;
            let r = record_from_steps("p", &DEFAULT_ITEMS, &steps, &[5; 6], repeat, None);
            let d = repeated_step_distance(&r).unwrap().value();
            assert_eq!(d, original.abs_diff(repeat));
            if d >= 3 {
                assert!(
                    original * repeat <= 0,
                    "{original} -> {repeat} kept a strict preference"
                );
            }
            if d > 3 {
                assert!(
                    original * repeat < 0,
                    "{original} -> {repeat} is not a reversal"
                );
            }
        }
    }
}

#[test]
fn planted_distance_groups() {
    let mut cohort = Vec::new();
    let mut expected = [0usize; 7];
    for (i, (original, repeat)) in [
        (3, -3),
        (0, 0),
        (1, 0),
        (2, -1),
        (-3, 0),
        (3, 3),
        (1, -3),
        (2, -3),
        (-1, 1),
        (0, 2),
    ]
    .into_iter()
    .enumerate()
    {
        let mut steps = [0i8; 15];
        steps[1] = original;
        steps[7] = 1;
        cohort.push(record_from_steps(
            &format!("d{i}"),
            &DEFAULT_ITEMS,
            &steps,
            &[5; 6],
            repeat,
            None,
        ));
        expected[original.abs_diff(repeat) as usize] += 1;
    }
    let stats = distance_category_stats(&cohort, &reference_scale(), 0.09224).unwrap();
    for (d, want) in expected.iter().enumerate() {
        let got = stats
            .get(&StepDistance::new(d as u8).unwrap())
            .map_or(0, |s| s.count);
        assert_eq!(got, *want, "distance {d}");
    }
    let singleton = stats[&StepDistance::new(6).unwrap()];
    assert_eq!(singleton.min, singleton.max);
    assert_eq!(singleton.q1, singleton.median);
}

#[test]
fn single_respondent_cr_bin_matches_dense_oracle() {
    // The 3x3 example's judgments on (red, green, blue) become Little, Much
    // (red over blue) and Moderate (green over blue); other pairs Equal.
    let mut steps = [0i8; 15];
    steps[0] = 1;
    steps[1] = 3;
    steps[5] = 2;
    let record = record_from_steps("one", &DEFAULT_ITEMS, &steps, &[5; 6], 0, None);
    let pcm = build_pcm_from_record(&record, &reference_scale()).unwrap();
    let dense = DMatrix::from_fn(6, 6, |i, j| pcm.get(i, j));
    let lambda = dense
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-9)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let ri = 0.09224;
    let cr = (lambda - 6.0) / 5.0 / ri;
    let hist = cr_histogram(&[record], &reference_scale(), ri, 0.005).unwrap();
    assert_eq!(hist.len(), 1);
    assert_eq!(hist[0].count, 1);
    assert_eq!(hist[0].lower, (cr / 0.005).floor() * 0.005);
}
