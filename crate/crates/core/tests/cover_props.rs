mod common;

use proptest::prelude::*;
use unicov::cover::{build_cover, lift_chain, verify_endpoint_ucm, UcmVerdict};
use unicov::quotient::{verify_gucm, FilteredMap};
use unicov::rips::{HomotopyBudget, HomotopyDecider};
use unicov::{Chain, Error, FilteredSpace};

use common::{random_loop, random_space};

const RADIUS: usize = 6;

fn instance() -> impl Strategy<Value = (FilteredSpace, usize, Vec<usize>)> {
    random_space().prop_flat_map(|s| {
        let m = s.scale_count();
        (Just(s), 1..=m, proptest::collection::vec(0usize..6, 0..10))
    })
}

fn connected(space: &FilteredSpace, k: usize) -> bool {
    space.chain_components(k).unwrap().len() == 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifts_follow_the_chain((space, k, walk) in instance()) {
        let mut cover = build_cover(&space, k, 0, 2, HomotopyBudget::default()).unwrap();
        let chain = random_loop(&space, k, 0, &walk);
        let lift = match lift_chain(&mut cover, 0, &chain, RADIUS) {
            Ok(l) => l,
            Err(Error::BudgetExhausted(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let ends = cover.endpoint_map();
        prop_assert_eq!(lift.len(), chain.seq.len());
        for (v, &x) in lift.iter().zip(&chain.seq) {
            prop_assert_eq!(ends[*v], x);
        }
        let fk = cover.fhat(k).unwrap();
        for w in lift.windows(2) {
            prop_assert!(fk.contains(w[0], w[1]));
        }
        // Distinct related vertices lie over distinct points, so lifts are unique.
        prop_assert!(fk.pairs().all(|(v, w)| v == w || ends[v] != ends[w]));
        prop_assert_eq!(lift_chain(&mut cover, 0, &chain, RADIUS).unwrap(), lift.clone());
        if !cover.identification_incomplete() {
            let decider = HomotopyDecider::new(&space, k, 0, HomotopyBudget::default()).unwrap();
            let decision = decider.decide(&chain, &Chain::constant(k, 0)).unwrap();
            if decision.is_yes() {
                prop_assert_eq!(*lift.last().unwrap(), 0);
            }
            if decision.is_no() {
                prop_assert_ne!(*lift.last().unwrap(), 0);
            }
        }
    }

    #[test]
    fn complete_covers_have_constant_fibers((space, k, _walk) in instance()) {
        let cover = build_cover(&space, k, 0, RADIUS, HomotopyBudget::default()).unwrap();
        if !cover.is_complete() || cover.identification_incomplete() {
            return Ok(());
        }
        let components = space.chain_components(k).unwrap();
        let block = &components.blocks[components.block_of(0).unwrap()];
        let mut counts = vec![0usize; space.len()];
        for x in cover.endpoint_map() {
            counts[x] += 1;
        }
        let first = counts[block[0]];
        prop_assert!(first >= 1);
        for (x, &c) in counts.iter().enumerate() {
            prop_assert_eq!(c, if block.contains(&x) { first } else { 0 });
        }
        let report = verify_endpoint_ucm(&cover).unwrap();
        prop_assert_eq!(report.verdict, UcmVerdict::Ucm);
    }

    #[test]
    fn complete_cover_maps_are_generalized_covering_maps((space, k, _walk) in instance()) {
        prop_assume!(connected(&space, k));
        let cover = build_cover(&space, k, 0, RADIUS, HomotopyBudget::default()).unwrap();
        if !cover.is_complete() || cover.identification_incomplete() {
            return Ok(());
        }
        let target = space.with_scales(space.scales()[k - 1..].to_vec()).unwrap();
        let f = FilteredMap::new(cover.as_space().unwrap(), target, cover.endpoint_map()).unwrap();
        prop_assert!(verify_gucm(&f).passed);
    }
}

#[test]
fn hexagon_cover_at_the_coarse_scale_is_trivial() {
    let space = FilteredSpace::from_metric(&unicov::space::cycle_metric(6), &[2.0, 1.0]).unwrap();
    let cover = build_cover(&space, 1, 0, RADIUS, HomotopyBudget::default()).unwrap();
    assert!(cover.is_complete());
    assert_eq!(cover.len(), 6);
    assert_eq!(verify_endpoint_ucm(&cover).unwrap().verdict, UcmVerdict::Ucm);
}
