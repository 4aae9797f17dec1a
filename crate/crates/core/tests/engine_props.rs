mod common;

use std::collections::BTreeSet;

use common::{random_pair, table};
use flora_core::engine::{align, AlignmentReport, Config, Origin};
use flora_core::kg::EntityId;
use proptest::prelude::*;

fn run(pair: &common::Pair, config: Config, seeds: &[(EntityId, EntityId)]) -> AlignmentReport {
    let t = table(pair, &config);
    align(&pair.kg1, &pair.kg2, &t, seeds, config).unwrap()
}

fn labels(report: &AlignmentReport) -> Vec<(String, String, f64)> {
    report
        .entity_matches()
        .iter()
        .map(|m| (m.label1.clone(), m.label2.clone(), m.score))
        .collect()
}

fn seed_ids(pair: &common::Pair, n: usize) -> Vec<(EntityId, EntityId)> {
    pair.gold
        .iter()
        .take(n)
        .map(|(a, b)| (pair.kg1.lookup_entity(a).unwrap(), pair.kg2.lookup_entity(b).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scores_bounded_and_report_one_to_one(seed in any::<u64>(), drop in 0.0f64..0.3, named in any::<bool>()) {
        let pair = random_pair(seed, 12, 30, drop, named);
        let config = Config::default();
        let report = run(&pair, config.clone(), &seed_ids(&pair, if named { 0 } else { 3 }));
        for (_, _, e) in report.store().entity_pairs() {
            prop_assert!((0.0..=1.0).contains(&e.score));
        }
        for &(r1, r2) in &report.store().relation_pairs() {
            prop_assert!((0.0..=1.0).contains(&report.store().sub12(r1, r2)));
            prop_assert!((0.0..=1.0).contains(&report.store().sub21(r2, r1)));
        }
        let (mut lefts, mut rights) = (BTreeSet::new(), BTreeSet::new());
        for m in report.entity_matches() {
            prop_assert!(m.score > config.theta_e);
            prop_assert!(lefts.insert(m.left));
            prop_assert!(rights.insert(m.right));
        }
        for r in report.relation_matches() {
            prop_assert!(r.score12 > 0.0 || r.score21 > 0.0);
        }
    }

    #[test]
    fn reported_scores_match_their_rule(seed in any::<u64>()) {
        let pair = random_pair(seed, 14, 35, 0.1, true);
        let report = run(&pair, Config::default(), &[]);
        for m in report.entity_matches() {
            let entry = report.store().entry(m.left, m.right).unwrap();
            prop_assert_eq!(entry.origin, Origin::Rule);
            let best = entry.best.as_ref().unwrap();
            prop_assert_eq!(best.strength, m.score);
            prop_assert!((best.recompute_strength() - m.score).abs() <= 1e-12);
            for f in &best.facts {
                prop_assert!(pair.kg1.contains(f.head1, f.relation1, m.left));
                prop_assert!(pair.kg2.contains(f.head2, f.relation2, m.right));
            }
        }
    }

    #[test]
    fn identical_inputs_identical_reports(seed in any::<u64>()) {
        let pair = random_pair(seed, 12, 30, 0.1, true);
        let a = run(&pair, Config::default(), &[]);
        let b = run(&pair, Config::default(), &[]);
        prop_assert_eq!(labels(&a), labels(&b));
        prop_assert_eq!(a.iterations(), b.iterations());
    }

    #[test]
    fn total_score_never_drops_without_pruning(seed in any::<u64>(), named in any::<bool>()) {
        let pair = random_pair(seed, 12, 30, 0.2, named);
        let config = Config { pruning: false, epsilon: 0.0, ..Config::default() };
        let report = run(&pair, config, &seed_ids(&pair, 2));
        let totals: Vec<f64> = report.iterations().iter().map(|s| s.total_entity_score).collect();
        for w in totals.windows(2) {
            prop_assert!(w[1] >= w[0], "{totals:?}");
        }
    }

    #[test]
    fn retained_score_never_drops_after_first_iteration(seed in any::<u64>()) {
        let pair = random_pair(seed, 14, 35, 0.2, true);
        let config = Config { epsilon: 0.0, ..Config::default() };
        let report = run(&pair, config, &[]);
        let retained: Vec<f64> = report.iterations().iter().map(|s| s.retained_entity_score).collect();
        for w in retained.windows(2).skip(1) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{retained:?}");
        }
    }
}

#[test]
fn named_copy_is_recovered() {
    let pair = random_pair(1, 14, 35, 0.0, true);
    let report = run(&pair, Config::default(), &[]);
    let gold: BTreeSet<(String, String)> = pair.gold.iter().cloned().collect();
    let got: BTreeSet<(String, String)> = labels(&report).into_iter().map(|(a, b, _)| (a, b)).collect();
    assert_eq!(got, gold);
}

#[cfg(feature = "std")]
proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn thread_count_does_not_change_the_report(seed in any::<u64>()) {
        let pair = random_pair(seed, 16, 40, 0.1, true);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run(&pair, Config::default(), &[]));
        let b = four.install(|| run(&pair, Config::default(), &[]));
        prop_assert_eq!(labels(&a), labels(&b));
        let rel = |r: &AlignmentReport| r.relation_matches().iter().map(|m| (m.label1.clone(), m.label2.clone(), m.score12, m.score21)).collect::<Vec<_>>();
        prop_assert_eq!(rel(&a), rel(&b));
    }
}
