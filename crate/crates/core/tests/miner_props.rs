use mt_core::executor::{TrialRecord, Verdict};
use mt_core::input::Input;
use mt_core::miner::{
    apply_constraint, classify, constraint_metrics, mine_constraints, AtomOp, FeatureValue, FeatureVector,
    MineOptions, Status, BASE_FEATURES,
};
use proptest::prelude::*;

fn trial(i: usize, xs: Vec<f64>, c: f64, verdict: Verdict) -> TrialRecord {
    TrialRecord {
        trial_id: format!("s:-:m:{i}:0"),
        sut_id: "s".into(),
        mutant_id: None,
        mr_id: "m".into(),
        param_binding: [("c".to_string(), c)].into(),
        source_input: Input::List(xs),
        followup_input: None,
        source_output: None,
        followup_output: None,
        verdict,
        error_detail: None,
        seed_path: vec![0, i as u64, 0],
    }
}

/// Verdicts follow a hidden rule on (min, c), optionally flipped by noise.
fn trials() -> impl Strategy<Value = Vec<TrialRecord>> {
    let row = (
        proptest::collection::vec((-8i32..8).prop_map(|k| k as f64 / 2.0), 0..5),
        (1i32..5).prop_map(|k| k as f64),
        0u8..10,
    );
    (proptest::collection::vec(row, 5..60), -3i32..3, 0u8..3).prop_map(|(rows, t0, noise)| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (xs, c, r))| {
                let v = if xs.is_empty() {
                    Verdict::Error
                } else {
                    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let ok = min >= t0 as f64 - c / 2.0;
                    if (ok && r >= noise) || (!ok && r < noise) { Verdict::Holds } else { Verdict::Violated }
                };
                trial(i, xs, c, v)
            })
            .collect()
    })
}

fn opts(min_precision: f64) -> MineOptions {
    MineOptions { min_support: 3, min_precision, max_results: 100_000 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn metrics_recount_and_soundness(ts in trials(), p in prop_oneof![Just(1.0), Just(0.8)]) {
        let r: Vec<&TrialRecord> = ts.iter().collect();
        let Ok(m) = mine_constraints(&r, &opts(p)) else { return Ok(()) };
        prop_assert_eq!(m.total_candidates as usize, m.ranked.len());
        for c in &m.ranked {
            prop_assert_eq!(constraint_metrics(&c.atoms, &r), c.metrics);
            prop_assert!(c.atoms.len() <= 2);
            prop_assert!(c.metrics.support >= 3 && c.metrics.precision >= p);
            prop_assert!((0.0..=1.0).contains(&c.metrics.precision) && (0.0..=1.0).contains(&c.metrics.coverage));
            if c.metrics.precision == 1.0 {
                let part = apply_constraint(&c.atoms, &r);
                prop_assert!(part.in_region.iter().all(|&i| r[i].verdict != Verdict::Violated));
            }
            for a in &c.atoms {
                // Only pre-execution features, thresholds taken from observed values.
                prop_assert!(BASE_FEATURES.contains(&a.feature.as_str()) || a.feature == "c");
                if let FeatureValue::Num(t) = a.value {
                    prop_assert!(a.op != AtomOp::Eq);
                    let observed = ts.iter().filter(|t| t.verdict != Verdict::Error).any(|tr| {
                        FeatureVector::extract(tr).get(&a.feature) == Some(FeatureValue::Num(t))
                    });
                    prop_assert!(observed, "{a}");
                }
            }
        }
        // Ranked order: coverage desc, atoms asc, support desc.
        for w in m.ranked.windows(2) {
            let k = |c: &mt_core::miner::Constraint| (std::cmp::Reverse((c.metrics.coverage * 1e9) as u64), c.atoms.len(), std::cmp::Reverse(c.metrics.support));
            prop_assert!(k(&w[0]) <= k(&w[1]));
        }
    }

    #[test]
    fn deterministic_and_monotone_in_precision(ts in trials()) {
        let r: Vec<&TrialRecord> = ts.iter().collect();
        let (Ok(strict), Ok(loose)) = (mine_constraints(&r, &opts(1.0)), mine_constraints(&r, &opts(0.7))) else {
            return Ok(());
        };
        prop_assert_eq!(&strict, &mine_constraints(&r, &opts(1.0)).unwrap());
        prop_assert!(strict.total_candidates <= loose.total_candidates);
        for c in &strict.ranked {
            prop_assert!(loose.ranked.contains(c));
        }
    }

    #[test]
    fn classification_invariants(ts in trials()) {
        let r: Vec<&TrialRecord> = ts.iter().collect();
        let o = MineOptions { min_support: 3, ..MineOptions::default() };
        let v = classify(&r, &mine_constraints(&r, &o), &o);
        let ids: Vec<&str> = ts.iter().map(|t| t.trial_id.as_str()).collect();
        match v.status {
            Status::Applicable => prop_assert_eq!(v.evidence.violated, 0),
            Status::Inapplicable => prop_assert_eq!(v.evidence.holds, 0),
            Status::Conditional => {
                let m = v.metrics.unwrap();
                prop_assert!(m.precision >= o.min_precision && m.support >= o.min_support);
            }
            Status::Undetermined => {}
        }
        let e = &v.explanation;
        for w in e.holds_witnesses.iter().chain(&e.violated_witnesses).chain(&e.error_witnesses) {
            prop_assert!(ids.contains(&w.as_str()));
        }
        prop_assert!(e.holds_witnesses.len() <= 3 && e.violated_witnesses.len() <= 3);
    }
}
