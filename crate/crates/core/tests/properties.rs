//! Property tests over randomly generated rings, elements and subsets.

use mlit_core::json::{element_from_json, element_to_json};
use mlit_core::ring::{subset_sum, AdditiveBasis, BlackBoxRing, RingKind};
use proptest::prelude::*;

fn ring_kind_strategy() -> impl Strategy<Value = RingKind> {
    prop_oneof![
        (1u64..=64).prop_map(|n| RingKind::Zn { n }),
        (1usize..=5).prop_map(|t| RingKind::MatF2 { t }),
        ((1u64..=8), (1usize..=3)).prop_map(|(n, t)| RingKind::Product {
            factors: vec![RingKind::Zn { n }, RingKind::MatF2 { t }],
        }),
    ]
}

proptest! {
    /// Element literals survive a round trip for every ring kind.
    #[test]
    fn element_literal_round_trip(kind in ring_kind_strategy(), seed in any::<u64>()) {
        let ring = BlackBoxRing::new(kind).unwrap();
        let mut rng = mlit_core::rng::from_seed(seed);
        let el = ring.random_element(&mut rng);
        let lit = element_to_json(&ring, &el);
        let back = element_from_json(&ring, &lit).unwrap();
        prop_assert_eq!(el, back);
    }

    /// Subset sums always cost exactly |u| - 1 additions and agree with a
    /// fold over the metered oracle.
    #[test]
    fn subset_sum_cost_and_value(n in 2u64..=64, picks in proptest::collection::vec(any::<u64>(), 1..6), seed in any::<u64>()) {
        let ring = BlackBoxRing::zn(n).unwrap();
        let mut rng = mlit_core::rng::from_seed(seed);
        let gens: Vec<_> = (0..5).map(|_| ring.random_element(&mut rng)).collect();
        let basis = AdditiveBasis::new(&ring, gens).unwrap();
        let k = basis.k();
        let mut subset: Vec<usize> = picks.iter().map(|p| (*p as usize) % k).collect();
        subset.sort_unstable();
        subset.dedup();

        let before = ring.ledger_snapshot();
        let sum = subset_sum(&ring, &basis, &subset).unwrap();
        let delta = ring.ledger_snapshot().delta_since(&before);
        prop_assert_eq!(delta.add_count, subset.len() as u64 - 1);

        let mut expect = ring.zero();
        for &i in &subset {
            expect = ring.add(&expect, basis.generator(i).unwrap()).unwrap();
        }
        prop_assert_eq!(sum, expect);
    }

    /// Addition commutes and negation inverts, through the oracle interface.
    #[test]
    fn oracle_group_laws(kind in ring_kind_strategy(), seed in any::<u64>()) {
        let ring = BlackBoxRing::new(kind).unwrap();
        let mut rng = mlit_core::rng::from_seed(seed);
        let a = ring.random_element(&mut rng);
        let b = ring.random_element(&mut rng);
        prop_assert_eq!(ring.add(&a, &b).unwrap(), ring.add(&b, &a).unwrap());
        let na = ring.neg(&a).unwrap();
        prop_assert!(ring.is_zero(&ring.add(&a, &na).unwrap()));
        prop_assert_eq!(ring.sub(&a, &b).unwrap(), ring.add(&a, &ring.neg(&b).unwrap()).unwrap());
    }
}
