use std::sync::Arc;

use actriage_core::dataset::{encode, fit_schema, Class, EncodedDataset, FeatureSchema};
use actriage_core::engine::{run_simulation, EngineConfig, Phase, SessionState};
use actriage_core::learners::{DecisionTree, LearnerKind, TreeParams};
use actriage_core::metrics::{cost_at_recall, roc_auc};
use actriage_core::synthetic::{generate, Separation, SyntheticSpec};
use actriage_core::Matrix;
use proptest::prelude::*;

fn class_vec(bits: &[bool]) -> Vec<Class> {
    bits.iter().map(|b| if *b { Class::Positive } else { Class::Negative }).collect()
}

/// Pairwise definition: P(s+ > s-) + ½ P(s+ = s-).
fn pairwise_auc(scores: &[f64], labels: &[Class]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if li.is_positive() && !lj.is_positive() {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

fn small_pool(n_neg: usize, n_pos: usize, seed: u64) -> Arc<EncodedDataset> {
    let recs = generate(&SyntheticSpec::new(n_neg, n_pos, seed));
    let schema = fit_schema(&recs).unwrap();
    Arc::new(encode(&recs, &schema).unwrap())
}

proptest! {
    #[test]
    fn auc_matches_pairwise_oracle(
        items in prop::collection::vec((0u8..6, any::<bool>()), 2..=12)
    ) {
        let scores: Vec<f64> = items.iter().map(|(s, _)| f64::from(*s) / 2.0).collect();
        let labels = class_vec(&items.iter().map(|(_, b)| *b).collect::<Vec<_>>());
        let pos = labels.iter().filter(|c| c.is_positive()).count();
        match roc_auc(&scores, &labels) {
            Ok(a) => {
                prop_assert!(pos > 0 && pos < labels.len());
                prop_assert!((a - pairwise_auc(&scores, &labels)).abs() < 1e-12);
            }
            Err(_) => prop_assert!(pos == 0 || pos == labels.len()),
        }
    }

    #[test]
    fn root_split_matches_exhaustive_gini(
        rows in prop::collection::vec((0u8..5, 0u8..4, any::<bool>()), 2..=14),
        wpos in 0.5f64..3.0,
    ) {
        let x = Matrix::from_rows(
            &rows.iter().map(|(a, b, _)| vec![f64::from(*a), f64::from(*b)]).collect::<Vec<_>>(),
            2,
        );
        let y = class_vec(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
        let w = [wpos, 1.0];
        let got = DecisionTree::root_split(&x, &y, w, &TreeParams::default());

        let gini = |p: f64, n: f64| if p + n == 0.0 { 0.0 } else { (p + n) * (1.0 - (p / (p + n)).powi(2) - (n / (p + n)).powi(2)) };
        let mut best: Option<f64> = None;
        for f in 0..2 {
            let mut vals: Vec<f64> = (0..x.rows()).map(|r| x.get(r, f)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let t = (pair[0] + pair[1]) / 2.0;
                let (mut lp, mut ln, mut rp, mut rn) = (0.0, 0.0, 0.0, 0.0);
                for r in 0..x.rows() {
                    let wt = if y[r].is_positive() { w[0] } else { w[1] };
                    match (x.get(r, f) <= t, y[r].is_positive()) {
                        (true, true) => lp += wt,
                        (true, false) => ln += wt,
                        (false, true) => rp += wt,
                        (false, false) => rn += wt,
                    }
                }
                let imp = gini(lp, ln) + gini(rp, rn);
                best = Some(best.map_or(imp, |b: f64| b.min(imp)));
            }
        }
        match (got, best) {
            (None, None) => {}
            (Some(s), Some(b)) => prop_assert!((s.impurity - b).abs() < 1e-9, "{} vs {}", s.impurity, b),
            (g, b) => prop_assert!(false, "split {:?} vs oracle {:?}", g, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_curves_are_monotone_and_cost_exact(
        n_neg in 10usize..60,
        n_pos in 1usize..12,
        seed in 0u64..1000,
        stop in 0.3f64..=1.0,
        kind in prop::sample::select(vec![LearnerKind::LinearSvm, LearnerKind::DecisionTree]),
    ) {
        let pool = small_pool(n_neg, n_pos, seed);
        let total = pool.n_rows();
        let cfg = EngineConfig::new(kind).with_seed(seed).with_stop_recall(stop);
        let out = run_simulation(pool, cfg).unwrap();
        let pts = &out.curve.points;
        prop_assert!(!pts.is_empty());
        for (k, p) in pts.iter().enumerate() {
            prop_assert_eq!(p.cost, (k + 1) as f64 / total as f64);
        }
        prop_assert!(pts.windows(2).all(|w| w[0].recall <= w[1].recall && w[0].cost < w[1].cost));
        prop_assert_eq!(out.curve.final_recall(), out.state.positive_count() as f64 / n_pos as f64);
        prop_assert!(out.state.positive_count() as f64 >= stop * n_pos as f64 - 1e-9);
        out.state.check_invariants();
    }

    #[test]
    fn identical_seeds_give_identical_histories(seed in 0u64..500, n_pos in 2usize..10) {
        let pool = small_pool(60, n_pos, seed ^ 0xABCD);
        let cfg = EngineConfig::new(LearnerKind::LinearSvm).with_seed(seed);
        let a = run_simulation(pool.clone(), cfg.clone()).unwrap();
        let b = run_simulation(pool, cfg).unwrap();
        prop_assert_eq!(a.state.history(), b.state.history());
        prop_assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn certainty_training_sets_are_balanced(seed in 0u64..200) {
        let pool = small_pool(150, 30, seed);
        let truth = pool.known_labels().unwrap();
        let mut cfg = EngineConfig::new(LearnerKind::LinearSvm).with_seed(seed);
        cfg.certainty_switch_threshold = 4;
        let mut s = SessionState::new(pool, cfg).unwrap();
        let mut checked = 0;
        while s.positive_count() < 25 {
            let id = s.next_query().unwrap();
            let row = s.row_of(&id).unwrap();
            s.submit_label(&id, truth[row].label()).unwrap();
            if s.phase() == Phase::Certainty {
                let mut probe = s.clone();
                let set = probe.build_training_set();
                prop_assert!(set.negatives() <= set.positives());
                prop_assert_eq!(set.positives(), s.positive_count());
                checked += 1;
            }
        }
        prop_assert!(checked > 0);
    }
}

#[test]
fn encoding_width_matches_schema() {
    let recs = generate(&SyntheticSpec {
        deleted: 4,
        ..SyntheticSpec::new(30, 6, 2)
    });
    let schema: FeatureSchema = fit_schema(&recs).unwrap();
    let ds = encode(&recs, &schema).unwrap();
    assert_eq!(ds.x.cols(), schema.n_columns());
    assert_eq!(ds.n_rows(), 36);
    assert!(ds.x.is_finite());
    assert_eq!(schema.fingerprint(), fit_schema(&recs).unwrap().fingerprint());
}

#[test]
fn separable_pool_beats_random_expected_cost() {
    // under a random order the last of K positives among N sits at K(N+1)/(K+1) on average
    let random_expected = (20.0 / 21.0) * (201.0 / 200.0);
    let mut costs = Vec::new();
    for seed in 0..20 {
        let recs = generate(&SyntheticSpec {
            separation: Separation::Separable(1.0),
            ..SyntheticSpec::new(180, 20, 100 + seed)
        });
        let pool = Arc::new(encode(&recs, &fit_schema(&recs).unwrap()).unwrap());
        let cfg = EngineConfig::new(LearnerKind::LinearSvm).with_seed(seed).with_stop_recall(1.0);
        let out = run_simulation(pool, cfg).unwrap();
        costs.push(cost_at_recall(&out.curve, 1.0).cost);
    }
    costs.sort_by(f64::total_cmp);
    let median = (costs[9] + costs[10]) / 2.0;
    assert!(median < random_expected, "median {median} vs random {random_expected}");
}

#[test]
fn warm_start_skips_cold_sampling() {
    let train = generate(&SyntheticSpec::new(120, 20, 8));
    let test = generate(&SyntheticSpec::new(120, 20, 9));
    let schema = fit_schema(&train).unwrap();
    let tr = encode(&train, &schema).unwrap();
    let te = Arc::new(encode(&test, &schema).unwrap());
    let model = actriage_core::learners::train(
        &tr.x,
        &tr.known_labels().unwrap(),
        &actriage_core::TrainConfig::new(LearnerKind::LinearSvm),
    )
    .unwrap();
    let mut cfg = EngineConfig::new(LearnerKind::LinearSvm);
    cfg.warm_start_model = Some(model.clone());
    let s = SessionState::new(te.clone(), cfg).unwrap();
    assert_eq!(s.phase(), Phase::Uncertainty);
    let first = s.next_query().unwrap();
    let row = te.ids.iter().position(|i| *i == first).unwrap();
    let margin = |r: usize| model.score_row(te.x.row(r)).abs();
    assert!((0..te.n_rows()).all(|r| margin(row) <= margin(r)));
}
