mod common;

use proptest::prelude::*;
use unicov::quotient::{
    build_fiber_quotient, check_approx_uniqueness, check_chain_lifting, check_generates, factor_and_verify,
    verify_gucm, Counterexample, FactorVerdict, FilteredMap, UniquenessMode,
};

use common::random_map;

fn map_and_scale() -> impl Strategy<Value = (FilteredMap, usize)> {
    random_map().prop_flat_map(|f| {
        let m = f.source().scale_count();
        (Just(f), 1..=m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn strong_uniqueness_implies_plain(f in random_map()) {
        let plain = check_approx_uniqueness(&f, UniquenessMode::Plain);
        let strong = check_approx_uniqueness(&f, UniquenessMode::Strong);
        if strong.passed {
            prop_assert!(plain.passed);
        }
        for (p, s) in plain.rows.iter().zip(&strong.rows) {
            if s.witness.is_some() {
                prop_assert!(p.witness.is_some());
            }
        }
    }

    #[test]
    fn fiber_quotient_factors_the_map((f, k) in map_and_scale()) {
        let quotient = build_fiber_quotient(&f, k).unwrap();
        let blocks = quotient.space.len();
        let mut hit = vec![false; blocks];
        for &b in &quotient.q {
            hit[b] = true;
        }
        prop_assert!(hit.iter().all(|&h| h));
        for x in 0..f.source().len() {
            prop_assert_eq!(quotient.g[quotient.q[x]], f.apply(x));
        }
        prop_assert!(quotient.q_map(&f).is_ok());
        prop_assert!(quotient.g_map(&f).is_ok());
        if !quotient.hypothesis_unmet {
            let e = f.source().scale(k).unwrap();
            for x in 0..f.source().len() {
                for y in 0..f.source().len() {
                    let same = quotient.q[x] == quotient.q[y];
                    prop_assert_eq!(same, f.apply(x) == f.apply(y) && e.contains(x, y));
                }
            }
        }
    }

    #[test]
    fn factorization_is_consistent((f, e) in map_and_scale()) {
        let report = factor_and_verify(&f, e).unwrap();
        prop_assert_eq!(report.generates, check_generates(&f).passed);
        prop_assert_eq!(report.chain_lifting, check_chain_lifting(&f).passed);
        prop_assert_eq!(
            report.strong_uniqueness,
            check_approx_uniqueness(&f, UniquenessMode::Strong).passed
        );
        let preconditions = report.generates && report.chain_lifting && report.strong_uniqueness;
        prop_assert_eq!(report.failing_axiom.is_none(), preconditions);
        if !preconditions {
            prop_assert_eq!(report.verdict, FactorVerdict::PreconditionFailed);
            return Ok(());
        }
        let chosen = report.chosen.unwrap();
        prop_assert!(chosen >= e);
        let quotient = build_fiber_quotient(&f, chosen).unwrap();
        prop_assert!(!quotient.hypothesis_unmet);
        prop_assert_eq!(&report.blocks, &quotient.blocks.blocks);
        if report.verdict == FactorVerdict::Ucm {
            prop_assert!(report.blocks_bounded && report.g_generates && report.g_chain_lifting);
            prop_assert_eq!(report.g_transverse_scale, Some(chosen));
        }
    }

    #[test]
    fn counterexamples_replay(f in random_map()) {
        let report = verify_gucm(&f);
        if let Some(c) = report.uniqueness.counterexample() {
            prop_assert!(Counterexample::Uniqueness(c.clone()).replay(&f));
        }
        prop_assert_eq!(
            report.passed,
            report.generation.passed && report.lifting.passed && report.uniqueness.passed
        );
    }

    #[test]
    fn identity_maps_are_covering_maps(f in random_map()) {
        let id = FilteredMap::identity(f.source());
        prop_assert!(verify_gucm(&id).passed);
        let report = factor_and_verify(&id, 1).unwrap();
        prop_assert_eq!(report.verdict, FactorVerdict::Ucm);
    }
}
