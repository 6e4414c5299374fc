use proptest::prelude::*;
use treesurv_core::bench::{c_index, EvalSpec, Outcome};
use treesurv_core::forest::{route, Axis, MissingDirection, SplitRule, Tree};
use treesurv_core::records::{build_time_grid, expand_person_period, locf_covariates, rows_for, Observation, PatientRecord};

fn outcomes_strategy() -> impl Strategy<Value = Vec<(f64, bool, f64)>> {
    prop::collection::vec((1u32..40, any::<bool>(), 0.001f64..0.999), 2..30)
        .prop_map(|v| v.into_iter().map(|(t, e, p)| (t as f64 / 4.0, e, p)).collect())
}

fn split(v: &[(f64, bool, f64)]) -> (Vec<f64>, Vec<Outcome>) {
    let pred = v.iter().map(|x| x.2).collect();
    let out = v.iter().map(|&(time, event, _)| Outcome { time, event }).collect();
    (pred, out)
}

proptest! {
    #[test]
    fn c_index_is_rank_invariant(v in outcomes_strategy(), t in 0.0f64..3.0, w in 0.5f64..10.0) {
        let spec = EvalSpec::new(t, w).unwrap();
        let (pred, out) = split(&v);
        let squashed: Vec<f64> = pred.iter().map(|p| p.powi(3) * 0.5 + 0.1).collect();
        let a = c_index(&pred, &out, &spec).unwrap();
        let b = c_index(&squashed, &out, &spec).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.estimate));
        prop_assert_eq!(a.comparable_pairs, b.comparable_pairs);
        prop_assert!((a.estimate - b.estimate).abs() < 1e-12);
    }

    #[test]
    fn c_index_of_complement_sums_to_one(v in outcomes_strategy()) {
        let spec = EvalSpec::new(0.0, 100.0).unwrap();
        let (pred, out) = split(&v);
        let mut sorted = pred.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] != w[1]));
        let a = c_index(&pred, &out, &spec).unwrap();
        prop_assume!(!a.no_comparable_pairs);
        let flipped: Vec<f64> = pred.iter().map(|p| 1.0 - p).collect();
        let b = c_index(&flipped, &out, &spec).unwrap();
        prop_assert!((a.estimate + b.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_input_reaches_exactly_one_leaf(
        thresholds in prop::collection::vec(-2.0f64..2.0, 1..6),
        x in prop::collection::vec(prop::option::of(-3.0f64..3.0), 3),
        time in 0.0f64..5.0,
    ) {
        let dirs = [MissingDirection::MissingLeft, MissingDirection::MissingRight, MissingDirection::MissingOnly];
        let mut tree = Tree::leaf(0.0);
        for (k, &th) in thresholds.iter().enumerate() {
            let leaf = tree.leaves().last().unwrap();
            let axis = if k % 4 == 3 { Axis::Time } else { Axis::Feature(k % 3) };
            tree = tree.grow(leaf, SplitRule::threshold(axis, th, dirs[k % 3]), k as f64, -(k as f64));
        }
        let leaf = route(&tree, &x, time).unwrap();
        prop_assert!(tree.is_leaf(leaf));
        // Walking the rules by hand reaches the same leaf.
        let mut id = 0;
        while let Some((l, r)) = tree.children(id) {
            let rule = tree.rule(id).unwrap();
            let value = match rule.axis { Axis::Feature(j) => x[j], Axis::Time => Some(time) };
            id = if rule.goes_left(value) { l } else { r };
        }
        prop_assert_eq!(id, leaf);
    }

    #[test]
    fn locf_returns_latest_observed_value(
        cells in prop::collection::vec(prop::option::of(-5.0f64..5.0), 1..8),
        at in 0.0f64..9.0,
    ) {
        let observations: Vec<Observation> = cells
            .iter()
            .enumerate()
            .map(|(i, v)| Observation { time: i as f64, values: vec![*v] })
            .collect();
        let rec = PatientRecord {
            id: "p".into(),
            observations,
            event_time: 10.0,
            event: false,
            static_covariates: vec![],
        };
        let expected = cells.iter().enumerate().filter(|(i, _)| *i as f64 <= at).filter_map(|(_, v)| *v).next_back();
        prop_assert_eq!(locf_covariates(&rec, at), vec![expected]);
    }

    #[test]
    fn expansion_counts_rows_and_events(
        exits in prop::collection::vec((1u32..60, any::<bool>()), 1..25),
        k in 1usize..10,
    ) {
        let records: Vec<PatientRecord> = exits
            .iter()
            .enumerate()
            .map(|(i, &(t, e))| PatientRecord {
                id: format!("p{i}"),
                observations: vec![Observation { time: 0.0, values: vec![Some(i as f64)] }],
                event_time: t as f64 / 10.0,
                event: e,
                static_covariates: vec![],
            })
            .collect();
        let grid = build_time_grid(&records, k).unwrap();
        let table = expand_person_period(&records, &grid, None).unwrap();
        let expected_rows: usize = records.iter().map(|r| rows_for(r, &grid).unwrap()).sum();
        prop_assert_eq!(table.rows.len(), expected_rows);
        prop_assert_eq!(table.n_events(), records.iter().filter(|r| r.event).count());
        // Rows are grouped by patient with consecutive intervals from 1.
        for (p, _) in records.iter().enumerate() {
            let intervals: Vec<usize> = table.rows.iter().filter(|r| r.patient == p).map(|r| r.interval).collect();
            prop_assert!(intervals.iter().enumerate().all(|(i, &r)| r == i + 1));
        }
    }
}
