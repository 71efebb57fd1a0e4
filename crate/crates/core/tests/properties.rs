//! Property tests for the crate-wide invariants.

use argue_core::datasets::{apply_scale, fit_scale, Matrix};
use argue_core::metrics::{average_precision, roc_auc, wilcoxon_signed_rank};
use argue_core::model::{ArgueConfig, ArgueModel};
use argue_core::nn::loss;
use proptest::prelude::*;

fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    // quantized scores so ties occur; at least one of each class
    proptest::collection::vec((0u8..=16, any::<bool>()), 4..80).prop_map(|pairs| {
        let mut scores: Vec<f64> = pairs.iter().map(|(s, _)| *s as f64 / 16.0).collect();
        let mut labels: Vec<bool> = pairs.iter().map(|(_, l)| *l).collect();
        labels[0] = true;
        labels[1] = false;
        // keep scores untouched; labels fixed up for class presence
        let _ = &mut scores;
        (scores, labels)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bce_nonnegative_and_zero_only_on_match((y, p) in (0u8..=1, 0.0f64..=1.0)) {
        let y = y as f64;
        let v = loss::bce(y, p);
        prop_assert!(v >= 0.0);
        if (p - y).abs() > 1e-3 {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn cce_nonnegative(target_idx in 0usize..4, raw in proptest::collection::vec(0.01f64..1.0, 4)) {
        let sum: f64 = raw.iter().sum();
        let p_hat: Vec<f64> = raw.iter().map(|v| v / sum).collect();
        let mut p = vec![0.0; 4];
        p[target_idx] = 1.0;
        let v = loss::cce(&p, &p_hat).unwrap();
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn auc_invariant_under_strictly_increasing_transform((scores, labels) in scores_and_labels()) {
        let base = roc_auc(&scores, &labels).unwrap();
        // affine map on a 1/16 grid is exact, so ties are preserved exactly
        let transformed: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        let mapped = roc_auc(&transformed, &labels).unwrap();
        prop_assert!((base - mapped).abs() < 1e-12);
    }

    #[test]
    fn auc_complement_without_ties(perm in proptest::collection::vec(0u16..u16::MAX, 5..60), flips in proptest::collection::vec(any::<bool>(), 5..60)) {
        // build tie-free scores by deduplication
        let mut scores: Vec<f64> = perm.iter().map(|v| *v as f64).collect();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        if scores.len() < 3 {
            return Ok(());
        }
        let mut labels: Vec<bool> = scores.iter().zip(flips.iter().cycle()).map(|(_, f)| *f).collect();
        labels[0] = true;
        labels[1] = false;
        let fwd = roc_auc(&scores, &labels).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let rev = roc_auc(&neg, &labels).unwrap();
        prop_assert!((fwd + rev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ap_of_all_tied_scores_is_prevalence((_, labels) in scores_and_labels()) {
        let scores = vec![0.5; labels.len()];
        let ap = average_precision(&scores, &labels).unwrap();
        let prevalence = labels.iter().filter(|l| **l).count() as f64 / labels.len() as f64;
        prop_assert!((ap - prevalence).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_p_in_unit_interval_and_symmetric(
        a in proptest::collection::vec(-8i8..=8, 1..20),
        b in proptest::collection::vec(-8i8..=8, 1..20),
    ) {
        let n = a.len().min(b.len());
        let a: Vec<f64> = a[..n].iter().map(|v| *v as f64 / 2.0).collect();
        let b: Vec<f64> = b[..n].iter().map(|v| *v as f64 / 2.0).collect();
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0, "p = {}", p);
        let q = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert!((p - q).abs() < 1e-15);
    }

    #[test]
    fn scaled_training_rows_stay_in_unit_interval(
        raw in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..40)
    ) {
        let mut m = Matrix::with_cols(3);
        for row in &raw {
            m.push_row(row);
        }
        let scaler = fit_scale(&m).unwrap();
        let scaled = apply_scale(&scaler, &m).unwrap();
        for row in scaled.iter_rows() {
            for v in row {
                prop_assert!((0.0..=1.0).contains(v), "value {}", v);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn score_algebra_holds_for_random_inputs(
        seed in 0u64..1000,
        raw in proptest::collection::vec(-0.5f64..1.5, 9),
    ) {
        let model = ArgueModel::build(ArgueConfig::new(9, vec![5, 3], 3), seed).unwrap();
        let scored = model.score(&raw).unwrap();
        let p = &scored.gating.0;
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let mut expected = scored.gating.short_cut();
        for (w, y) in scored.gating.expert_weights().iter().zip(&scored.expert_scores) {
            expected += w * y;
        }
        prop_assert!((scored.anomaly_score - expected).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&scored.anomaly_score));
    }
}
