use std::collections::BTreeSet;

use mead::evaluation::{
    agreement_curve, cross_judge_matrix, csis_agreement_tally, extract_utility, judge_extract,
    max_utility, mean_cross_judge, percent_agreement, random_performance, system_performance,
    Precision, RandomMode, SubsumptionAnnotation, SubsumptionGraph, UtilityAnnotation,
};
use mead::summarizer::{compression_size, enumerate_extracts};
use proptest::prelude::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn arb_judges(max_n: usize) -> impl Strategy<Value = (Vec<UtilityAnnotation>, f64)> {
    (2usize..=max_n, 2usize..=5, 0.05f64..=1.0).prop_flat_map(|(n, judges, r)| {
        prop::collection::vec(prop::collection::vec(0u8..=10, n), judges).prop_map(move |rows| {
            let mut anns: Vec<UtilityAnnotation> = rows
                .into_iter()
                .enumerate()
                .map(|(j, u)| UtilityAnnotation::new(format!("j{j}"), "c", u).unwrap())
                .collect();
            // keep every judge's maximum non-zero
            for ann in &mut anns {
                if ann.utilities.iter().all(|&u| u == 0) {
                    ann.utilities[0] = 1;
                }
            }
            (anns, r)
        })
    })
}

#[test]
fn table8_fixture_tallies() {
    let anns: Vec<SubsumptionAnnotation> = (1..=5)
        .map(|j| SubsumptionAnnotation::read(format!("{FIXTURES}/table8/judge{j}.json")).unwrap())
        .collect();
    let tally = csis_agreement_tally(&anns, 0);
    let signed: Vec<i64> = tally.rows[..7]
        .iter()
        .map(|r| match (r.plus, r.minus) {
            (Some(p), None) => p as i64,
            (None, Some(m)) => -(m as i64),
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    assert_eq!(signed, [3, 3, -4, 4, -2, -4, -4]);
    assert_eq!(tally.rows[3].modal, BTreeSet::from([22]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_modes_agree((anns, r) in arb_judges(10)) {
        let cf = random_performance(&anns, r, RandomMode::ClosedForm, 1_000_000).unwrap();
        let en = random_performance(&anns, r, RandomMode::Enumerate, 1_000_000).unwrap();
        prop_assert!((cf - en).abs() < 1e-12, "{cf} vs {en}");
    }

    #[test]
    fn random_between_extreme_systems((anns, r) in arb_judges(8)) {
        let n = anns[0].n();
        let k = compression_size(n, r).unwrap();
        let rnd = random_performance(&anns, r, RandomMode::ClosedForm, 1_000_000).unwrap();
        let scores: Vec<f64> = enumerate_extracts(n, k, 1_000_000)
            .unwrap()
            .map(|s| system_performance(&s.into_iter().collect(), &anns, None, 1.0).unwrap())
            .collect();
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= rnd && rnd <= hi + 1e-12);
    }

    #[test]
    fn matrix_bounds_and_utility_cap((anns, r) in arb_judges(10)) {
        let m = cross_judge_matrix(&anns, r).unwrap();
        for (i, row) in m.iter().enumerate() {
            prop_assert_eq!(row[i], 1.0);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let k = compression_size(anns[0].n(), r).unwrap();
        for a in &anns {
            let ext = judge_extract(a, k).unwrap();
            for b in &anns {
                prop_assert!(extract_utility(&ext, b, None, 1.0) <= max_utility(b, k).unwrap() as f64);
            }
        }
    }

    #[test]
    fn curve_matches_pointwise_recomputation((anns, _) in arb_judges(9)) {
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        let curve = agreement_curve(&anns, &grid, Precision::Exact).unwrap();
        for (r, j) in curve {
            let (_, expected) = mean_cross_judge(&cross_judge_matrix(&anns, r).unwrap());
            prop_assert_eq!(j, expected);
        }
    }

    #[test]
    fn csis_credit_monotone_in_e(
        utilities in prop::collection::vec(0u8..=10, 6),
        edges in prop::collection::btree_set((1usize..=6, 1usize..=6), 0..8),
        extract in prop::collection::btree_set(1usize..=6, 1..6),
        e1 in 0.0f64..=1.0,
        e2 in 0.0f64..=1.0,
    ) {
        let ann = UtilityAnnotation::new("j", "c", utilities).unwrap();
        let graph = SubsumptionGraph {
            cluster_id: "c".into(),
            edges: edges.into_iter().filter(|(a, b)| a != b).collect(),
            agreement_threshold: 1,
        };
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(extract_utility(&extract, &ann, Some(&graph), lo) <= extract_utility(&extract, &ann, Some(&graph), hi) + 1e-12);
        prop_assert!(extract_utility(&extract, &ann, Some(&graph), 1.0) == extract_utility(&extract, &ann, None, 0.0));
    }

    #[test]
    fn judge_extract_scale_invariant(utilities in prop::collection::vec(0u8..=5, 1..12), k_seed in 0usize..12) {
        let k = k_seed % utilities.len() + 1;
        let ann = UtilityAnnotation::new("j", "c", utilities.clone()).unwrap();
        let doubled = UtilityAnnotation::new("j", "c", utilities.iter().map(|u| u * 2).collect()).unwrap();
        prop_assert_eq!(judge_extract(&ann, k).unwrap(), judge_extract(&doubled, k).unwrap());
    }

    #[test]
    fn percent_agreement_symmetric_difference(
        system in prop::collection::btree_set(1usize..=15, 0..15),
        ideal in prop::collection::btree_set(1usize..=15, 0..15),
    ) {
        let n = 15;
        let diff = system.symmetric_difference(&ideal).count() as f64;
        prop_assert!((percent_agreement(&system, &ideal, n) - (1.0 - diff / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn consensus_subset_of_union(sets in prop::collection::vec(prop::collection::btree_map(1usize..8, prop::collection::btree_set(8usize..12, 0..3), 0..5), 2..6)) {
        let anns: Vec<SubsumptionAnnotation> = sets
            .into_iter()
            .enumerate()
            .map(|(j, m)| SubsumptionAnnotation::new(j.to_string(), "c", m).unwrap())
            .collect();
        let all = mead::evaluation::csis_consensus(&anns, 1).edges;
        let strict = mead::evaluation::csis_consensus(&anns, 2).edges;
        prop_assert!(strict.is_subset(&all));
        let union: BTreeSet<(usize, usize)> = anns
            .iter()
            .flat_map(|a| a.subsumers.iter().flat_map(|(&x, ys)| ys.iter().map(move |&y| (x, y))))
            .collect();
        prop_assert_eq!(all, union);
    }
}
