use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlab_core::colouring::{colour_in_window, default_max_rounds, run_local, Topology, TERMINATION_SLACK};
use rlab_core::numerics::{log_star, Natural};

fn distinct_labels(max_len: usize) -> impl Strategy<Value = Vec<Natural>> {
    prop::collection::hash_set(
        prop_oneof![2u128..40, 2u128..5000, 2u128..=(1u128 << 64)],
        2..max_len,
    )
    .prop_flat_map(|set| Just(set.into_iter().collect::<Vec<_>>()).prop_shuffle())
    .prop_map(|v| v.into_iter().map(Natural::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn paths_and_cycles_get_proper_colourings_on_time(labels in distinct_labels(80), cycle: bool) {
        let topology = if cycle && labels.len() >= 3 { Topology::Cycle } else { Topology::Path };
        let res = run_local(&labels, topology, default_max_rounds(&labels)).unwrap();
        let n = labels.len();
        prop_assert!(res.colours.iter().all(|&c| c <= 2));
        for i in 0..n - 1 {
            prop_assert_ne!(res.colours[i], res.colours[i + 1]);
        }
        if topology == Topology::Cycle {
            prop_assert_ne!(res.colours[0], res.colours[n - 1]);
        }
        for (l, &t) in labels.iter().zip(&res.termination_rounds) {
            prop_assert!(t <= u64::from(log_star(l)) + TERMINATION_SLACK);
        }
        let again = run_local(&labels, topology, default_max_rounds(&labels)).unwrap();
        prop_assert_eq!(res, again);
    }

    #[test]
    fn window_colour_ignores_far_labels(
        centre in prop_oneof![Just(2u128), 3u128..=4, 5u128..=16, 17u128..=65536, 65537u128..=(1u128 << 64)],
        seed: u64,
    ) {
        let kappa = 60u64;
        let centre = Natural::from(centre);
        let r = (kappa * u64::from(log_star(&centre))) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen: HashSet<Natural> = HashSet::from([centre.clone()]);
        let mut others = Vec::with_capacity(4 * r);
        while others.len() < 4 * r {
            let v = Natural::from(rng.gen_range(2u128..=1u128 << 64));
            if seen.insert(v.clone()) {
                others.push(v);
            }
        }
        let small: Vec<Natural> = others[..r].iter().chain([&centre]).chain(&others[r..2 * r]).cloned().collect();
        let big: Vec<Natural> = others[2 * r..3 * r]
            .iter()
            .chain(&small)
            .chain(&others[3 * r..4 * r])
            .cloned()
            .collect();
        prop_assert_eq!(
            colour_in_window(&small, r, kappa).unwrap(),
            colour_in_window(&big, 2 * r, kappa).unwrap()
        );
    }
}
