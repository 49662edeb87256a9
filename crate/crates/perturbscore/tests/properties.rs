//! Cross-module invariants, mostly property-based.

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perturbscore::{
    apply_mask, apply_scaler, asr, classify, effective_cardinality, export_graph, fit_scaler,
    gradient_sign_attack, high_corr_counts, pearson_matrix, ps2, ps3, ps_total, score_all, split,
    undersample, AttackConstraints, Dataset, Direction, FeatureMetadata, PsClass, PsInputs,
    ScalerMethod, ThresholdConfig,
};

fn dataset_from_columns(cols: &[Vec<f64>], y: Vec<u8>) -> Dataset {
    let rows = cols[0].len();
    let mut x = Array2::zeros((rows, cols.len()));
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    Dataset::new(
        (0..cols.len()).map(|j| format!("f{j}")).collect(),
        x,
        Array1::from_vec(y),
    )
    .unwrap()
}

fn meta(name: &str, direction: Direction) -> FeatureMetadata {
    FeatureMetadata {
        name: name.into(),
        is_protocol_id: false,
        is_critical_identifier: false,
        is_functional_integrity: false,
        direction,
        is_flow_wide_aggregate: false,
        declared_cardinality: None,
    }
}

proptest! {
    #[test]
    fn cardinality_matches_distinct_set(values in prop::collection::vec(-50i32..50, 1..200)) {
        let column: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let expected = values.iter().collect::<HashSet<_>>().len() as u64;
        prop_assert_eq!(effective_cardinality(&column, None).unwrap(), expected);
    }

    #[test]
    fn split_is_a_partition(n in 5usize..60, frac in 0.1f64..0.9, seed in 0u64..1000) {
        let cols = vec![(0..n).map(|i| i as f64).collect::<Vec<_>>()];
        let ds = dataset_from_columns(&cols, vec![0; n]);
        let n_test = (frac * n as f64).round() as usize;
        prop_assume!(n_test > 0 && n_test < n);
        let (train, test) = split(&ds, frac, seed).unwrap();
        prop_assert_eq!(train.n_rows() + test.n_rows(), n);
        prop_assert_eq!(test.n_rows(), n_test);
        let mut seen: Vec<i64> = train.x.column(0).iter().chain(test.x.column(0).iter())
            .map(|&v| v as i64).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n as i64).collect::<Vec<_>>());
    }

    #[test]
    fn undersample_balances_and_reuses_rows(
        n_pos in 1usize..30,
        n_neg in 1usize..30,
        seed in 0u64..1000,
    ) {
        let n = n_pos + n_neg;
        let col: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut y = vec![1u8; n_pos];
        y.extend(vec![0u8; n_neg]);
        let ds = dataset_from_columns(&[col], y);
        let balanced = undersample(&ds, seed).unwrap();
        let pos = balanced.y.iter().filter(|&&v| v == 1).count();
        let neg = balanced.y.iter().filter(|&&v| v == 0).count();
        prop_assert_eq!(pos, neg);
        prop_assert_eq!(pos, n_pos.min(n_neg));
        for &v in balanced.x.column(0) {
            prop_assert!(v >= 0.0 && v < n as f64);
        }
    }

    #[test]
    fn high_corr_counts_monotone_in_threshold(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ds = dataset_from_columns(&cols, vec![0; 30]);
        let m = pearson_matrix(&ds).unwrap();
        let loose = high_corr_counts(&m, 0.3).unwrap();
        let tight = high_corr_counts(&m, 0.7).unwrap();
        for (l, t) in loose.iter().zip(&tight) {
            prop_assert!(t <= l);
        }
    }

    #[test]
    fn mask_is_idempotent_and_pins_masked_columns(
        rows in 1usize..10,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = 4usize;
        let x = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-10.0..10.0));
        let x2 = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-10.0..10.0));
        let mask: Vec<u8> = (0..cols).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let neutral: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let once = apply_mask(&mask, &neutral, &x).unwrap();
        let twice = apply_mask(&mask, &neutral, &once).unwrap();
        prop_assert_eq!(&once, &twice);

        // matrices differing only at masked columns mask to the same thing
        let mut mixed = x.clone();
        for j in 0..cols {
            if mask[j] == 0 {
                for i in 0..rows {
                    mixed[[i, j]] = x2[[i, j]];
                }
            }
        }
        let masked_mixed = apply_mask(&mask, &neutral, &mixed).unwrap();
        prop_assert_eq!(&once, &masked_mixed);

        // unmasked columns pass through bit-identically
        for j in 0..cols {
            if mask[j] == 1 {
                for i in 0..rows {
                    prop_assert_eq!(once[[i, j]].to_bits(), x[[i, j]].to_bits());
                }
            }
        }
    }

    #[test]
    fn asr_is_invariant_under_row_permutation(
        labels in prop::collection::vec(0u8..2, 2..40),
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = labels.len();
        let y = Array1::from_vec(labels);
        let pred_orig = Array1::from_shape_fn(n, |_| rng.gen_range(0u8..2));
        let pred_adv = Array1::from_shape_fn(n, |_| rng.gen_range(0u8..2));
        let base = asr(&pred_orig, &pred_adv, &y).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.gen_range(0..=k));
        }
        let permuted = |v: &Array1<u8>| Array1::from_iter(perm.iter().map(|&i| v[i]));
        let shuffled = asr(&permuted(&pred_orig), &permuted(&pred_adv), &permuted(&y)).unwrap();
        prop_assert!((base - shuffled).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&base));
    }
}

#[test]
fn standardize_contract_holds_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cols: Vec<Vec<f64>> = (0..6)
        .map(|j| {
            (0..50)
                .map(|_| rng.gen_range(-5.0..5.0) * (j + 1) as f64 + j as f64)
                .collect()
        })
        .collect();
    let ds = dataset_from_columns(&cols, vec![0; 50]);
    let params = fit_scaler(&ds, ScalerMethod::Standardize).unwrap();
    let scaled = apply_scaler(&params, &ds).unwrap();
    for col in scaled.x.columns() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-9, "std {}", var.sqrt());
    }
}

#[test]
fn minmax_contract_holds_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cols: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..40).map(|_| rng.gen_range(-100.0..100.0)).collect())
        .collect();
    let ds = dataset_from_columns(&cols, vec![0; 40]);
    let params = fit_scaler(&ds, ScalerMethod::MinMax).unwrap();
    let scaled = apply_scaler(&params, &ds).unwrap();
    for col in scaled.x.columns() {
        for &v in col {
            assert!((0.0..=1.0).contains(&v), "value {v}");
        }
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(max, 1.0);
        assert_eq!(min, 0.0);
    }
}

// independent oracle: single-pass raw-moment formulation
fn pearson_raw_moments(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let num = n * sab - sa * sb;
    let den = ((n * saa - sa * sa) * (n * sbb - sb * sb)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[test]
fn pearson_matches_raw_moment_oracle_on_random_matrices() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..20).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let ds = dataset_from_columns(&cols, vec![0; 20]);
        let m = pearson_matrix(&ds).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!(m.r[[i, j]].abs() <= 1.0 + 1e-12);
                if i != j {
                    let oracle = pearson_raw_moments(&cols[i], &cols[j]);
                    assert!(
                        (m.r[[i, j]] - oracle).abs() < 1e-9,
                        "seed {seed} ({i},{j}): {} vs {oracle}",
                        m.r[[i, j]]
                    );
                }
            }
        }
    }
}

#[test]
fn graph_edge_count_is_half_the_cf_sum() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // mix of independent and derived columns to get edges at 0.8
        let base: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|j| {
                base.iter()
                    .map(|&v| {
                        if j % 2 == 0 {
                            v + 0.1 * rng.gen_range(-1.0..1.0)
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let ds = dataset_from_columns(&cols, vec![0; 40]);
        let m = pearson_matrix(&ds).unwrap();
        let cf = high_corr_counts(&m, 0.8).unwrap();
        let graph = export_graph(&m, 0.8);
        let total: u32 = cf.iter().sum();
        assert_eq!(graph.edges.len() * 2, total as usize, "seed {seed}");
    }
}

#[test]
fn ps2_monotone_and_ps3_strictly_decreasing() {
    let mut prev = 0.0;
    for pv in 2..=300u64 {
        let v = ps2(pv, 2, 255).unwrap();
        assert!(v >= prev, "ps2 dipped at pv={pv}");
        prev = v;
    }
    let mut prev = f64::INFINITY;
    for cf in 0..=20u32 {
        let v = ps3(cf);
        assert!(v < prev, "ps3 not strictly decreasing at cf={cf}");
        prev = v;
    }
}

#[test]
fn ps_total_monotone_in_each_field() {
    let grid = [0.25, 0.5, 0.75, 1.0];
    for k in 0..5 {
        for &a in &grid {
            for &b in &grid {
                if a > b {
                    continue;
                }
                let mut lo = [0.8; 5];
                let mut hi = [0.8; 5];
                lo[k] = a;
                hi[k] = b;
                assert!(ps_total(lo) <= ps_total(hi) + 1e-15);
            }
        }
    }
}

#[test]
fn classification_is_field_permutation_invariant() {
    let fields = [1.0, 0.5, 0.75, 1.0, 0.9];
    let base = classify(ps_total(fields), 0.87);
    // rotate through all cyclic shifts and a couple of swaps
    for shift in 0..5 {
        let mut rotated = fields;
        rotated.rotate_left(shift);
        assert_eq!(classify(ps_total(rotated), 0.87), base);
    }
    let mut swapped = fields;
    swapped.swap(1, 4);
    assert_eq!(classify(ps_total(swapped), 0.87), base);
}

#[test]
fn high_class_admits_at_most_one_half_field() {
    // sweep achievable field values; at tau = 0.87 a High feature can carry
    // at most one 0.5-valued field and nothing below 0.5
    let field_values = [0.0, 0.25, 0.5, 0.5625, 0.625, 0.75, 0.8, 0.9, 1.0];
    for &a in &field_values {
        for &b in &field_values {
            for &c in &field_values {
                let fields = [a, b, c, 1.0, 1.0];
                let total = ps_total(fields);
                if classify(total, 0.87) == PsClass::High {
                    let halves = fields.iter().filter(|&&v| v == 0.5).count();
                    assert!(halves <= 1, "{fields:?} -> {total}");
                    assert!(fields.iter().all(|&v| v >= 0.5), "{fields:?} -> {total}");
                }
            }
        }
    }
}

#[test]
fn score_all_is_bit_for_bit_deterministic() {
    let inputs: Vec<PsInputs> = (0..30)
        .map(|i| PsInputs {
            pv: 1 + (i * 37) % 400,
            cf: (i % 6) as u32,
            forward_corr_count: (i % 3) as u32,
            flags: meta(
                &format!("f{i}"),
                if i % 2 == 0 {
                    Direction::Forward
                } else {
                    Direction::Backward
                },
            ),
        })
        .collect();
    let a = score_all(&inputs, &ThresholdConfig::default()).unwrap();
    let b = score_all(&inputs, &ThresholdConfig::default()).unwrap();
    for (x, y) in a.breakdowns.iter().zip(&b.breakdowns) {
        assert_eq!(x.ps_total.to_bits(), y.ps_total.to_bits());
    }
}

fn toy_model(w: Vec<f64>) -> perturbscore::Model {
    perturbscore::Model {
        kind: perturbscore::ModelKind::LogReg,
        input_dim: w.len(),
        params: perturbscore::model::ModelParams::LogReg { w, b: 0.0 },
        training_config: perturbscore::TrainConfig::default(),
    }
}

#[test]
fn attack_containment_over_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let d = rng.gen_range(2..6);
        let n = rng.gen_range(1..8);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let model = toy_model(w);
        let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| rng.gen_range(0u8..2));
        let eps = rng.gen_range(0.0..1.5);
        let allowed: std::collections::BTreeSet<usize> =
            (0..d).filter(|_| rng.gen_bool(0.6)).collect();
        if allowed.is_empty() {
            continue;
        }
        let constraints = AttackConstraints {
            allowed: allowed.clone(),
            lower: vec![-1.8; d],
            upper: vec![1.8; d],
            integer_snap: (0..d).map(|_| rng.gen_bool(0.3)).collect(),
            epsilon: eps,
        };
        let adv = gradient_sign_attack(&model, &x, &y, &constraints).unwrap();
        for i in 0..n {
            for j in 0..d {
                if allowed.contains(&j) {
                    assert!(
                        (adv[[i, j]] - x[[i, j]]).abs() <= eps + 1e-12,
                        "budget violated at ({i},{j})"
                    );
                    if x[[i, j]] >= -1.8 && x[[i, j]] <= 1.8 {
                        assert!(adv[[i, j]] >= -1.8 - 1e-12 && adv[[i, j]] <= 1.8 + 1e-12);
                    }
                } else {
                    assert_eq!(adv[[i, j]].to_bits(), x[[i, j]].to_bits());
                }
            }
        }
    }
}

#[test]
fn gradsign_asr_is_monotone_in_epsilon_without_clipping() {
    // fixed linear model, unbounded box: larger epsilon can only push the
    // logit further, so the flip set only grows
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let model = toy_model(vec![1.2, -0.7, 0.4]);
    let n = 200;
    let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-2.0..2.0));
    let (labels, _) = perturbscore::predict(&model, &x).unwrap();
    let y = labels.clone(); // every row originally correct

    let mut prev = -1.0;
    for eps in [0.0, 0.2, 0.4, 0.8, 1.2, 2.0, 3.0] {
        let constraints = AttackConstraints::unconstrained(3, eps);
        let adv = gradient_sign_attack(&model, &x, &y, &constraints).unwrap();
        let (pred_adv, _) = perturbscore::predict(&model, &adv).unwrap();
        let rate = asr(&labels, &pred_adv, &y).unwrap();
        assert!(
            rate >= prev - 1e-12,
            "asr dropped from {prev} to {rate} at eps={eps}"
        );
        prev = rate;
    }
}

#[test]
fn predict_scores_stay_strictly_inside_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let d = rng.gen_range(1..6);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let model = toy_model(w);
        let x = Array2::from_shape_fn((4, d), |_| rng.gen_range(-20.0..20.0));
        let (_, scores) = perturbscore::predict(&model, &x).unwrap();
        for &s in &scores {
            assert!(s > 0.0 && s < 1.0, "score {s}");
        }
    }
}

#[test]
fn metrics_are_consistent_with_their_confusion_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..100 {
        let n = rng.gen_range(1..50);
        let pred = Array1::from_shape_fn(n, |_| rng.gen_range(0u8..2));
        let truth = Array1::from_shape_fn(n, |_| rng.gen_range(0u8..2));
        let m = perturbscore::model::metrics_from_predictions(&pred, &truth);
        let recomputed = perturbscore::Metrics::from_confusion(m.tp, m.fp, m.tn, m.fn_);
        assert_eq!(m, recomputed);
        assert_eq!((m.tp + m.fp + m.tn + m.fn_) as usize, n);
    }
}
