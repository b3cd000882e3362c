mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicov::action::{
    action_tower_verify, close_group, diagnose_action, orbit_projection, quotient_at_scale, saturate_invariant,
    subgroup_at_scale, GroupAction,
};
use unicov::space::cycle_metric;
use unicov::tower::DEFAULT_PRODUCT_BOUND;
use unicov::{Error, FilteredSpace};

use common::space_with;

fn random_action() -> impl Strategy<Value = GroupAction> {
    (2usize..6, 1usize..4, any::<u64>(), 1usize..3).prop_flat_map(|(n, m, seed, gens)| {
        space_with(n, m, true).prop_map(move |space| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let generators = (0..gens)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            close_group(&space, generators, 1000).unwrap()
        })
    })
}

/// Subgroups of the dihedral group acting on a metric cycle.
fn dihedral_action() -> impl Strategy<Value = GroupAction> {
    (
        3usize..9,
        0usize..9,
        any::<bool>(),
        proptest::collection::btree_set(1usize..5, 0..3),
    )
        .prop_map(|(n, step, reflect, radii)| {
            let mut radii: Vec<f64> = radii.into_iter().rev().map(|r| r as f64).collect();
            radii.push(0.0);
            let space = FilteredSpace::from_metric(&cycle_metric(n), &radii).unwrap();
            let mut generators = vec![(0..n).map(|x| (x + step) % n).collect::<Vec<_>>()];
            if reflect {
                generators.push((0..n).map(|x| (n - x) % n).collect());
            }
            close_group(&space, generators, 1000).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_subgroups_shrink_with_the_scale(action in random_action()) {
        let m = action.space().scale_count();
        for k in 1..m {
            let coarse = subgroup_at_scale(&action, k).unwrap().elements;
            let fine = subgroup_at_scale(&action, k + 1).unwrap().elements;
            prop_assert!(fine.iter().all(|g| coarse.binary_search(g).is_ok()));
        }
    }

    #[test]
    fn upd_rows_match_trivial_subgroups(action in random_action()) {
        let diag = diagnose_action(&action);
        for row in &diag.upd_rows {
            let trivial = subgroup_at_scale(&action, row.scale).unwrap().elements == vec![0];
            prop_assert_eq!(row.counterexample.is_none(), trivial);
        }
        prop_assert_eq!(diag.is_upd(), diag.upd_rows.iter().any(|r| r.counterexample.is_none()));
    }

    #[test]
    fn quotients_factor_the_orbit_map(action in random_action(), pick in 0usize..4) {
        let k = pick % action.space().scale_count() + 1;
        let quotient = quotient_at_scale(&action, k).unwrap();
        prop_assert!(quotient.well_defined);
        prop_assert!(quotient.faithful);
        prop_assert!(quotient.normal);
        let induced = quotient.as_action().unwrap();
        prop_assert!(induced.is_faithful());
        prop_assert!(quotient.projection(action.space()).is_ok());
        // X -> X/G_E -> (X/G_E)/(G/G_E) is the orbit map X -> X/G.
        let whole = orbit_projection(&action).unwrap();
        let second = orbit_projection(&induced).unwrap();
        let n = action.space().len();
        for x in 0..n {
            for y in 0..n {
                let direct = whole.apply(x) == whole.apply(y);
                let staged = second.apply(quotient.orbit_of[x]) == second.apply(quotient.orbit_of[y]);
                prop_assert_eq!(direct, staged);
            }
        }
        for (c, row) in quotient.induced.iter().enumerate() {
            for &g in &quotient.cosets[c] {
                for x in 0..n {
                    prop_assert_eq!(quotient.orbit_of[action.apply(g, x)], row[quotient.orbit_of[x]]);
                }
            }
        }
    }

    #[test]
    fn isometric_actions_keep_metric_scales(action in dihedral_action()) {
        for k in 1..=action.space().scale_count() {
            prop_assert_eq!(&saturate_invariant(&action, k).unwrap(), action.space().scale(k).unwrap());
            prop_assert!(action.is_invariant(action.space().scale(k).unwrap()));
        }
        prop_assert!(diagnose_action(&action).is_equicontinuous());
    }

    #[test]
    fn orbit_limits_commute_when_the_tower_is_faithful(action in prop_oneof![dihedral_action(), random_action()]) {
        match action_tower_verify(&action, DEFAULT_PRODUCT_BOUND) {
            Ok(report) => {
                if report.group_isomorphism && report.space_equivalence {
                    prop_assert!(report.quotient_commutes, "{:?}", report);
                }
                prop_assert!(report.bonds_surjective);
            }
            Err(Error::HypothesisUnmet(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
