use std::collections::HashSet;

use proptest::prelude::*;
use rlab_core::agents::AgentMove;
use rlab_core::line::{make_line, LabelGenSpec, Orientation, Position};
use rlab_core::numerics::{tower, Natural};

const AGREE: (Orientation, Orientation) = (Orientation::Agree, Orientation::Agree);

fn generator() -> impl Strategy<Value = LabelGenSpec> {
    prop_oneof![
        // 12 bits keeps every sampled window inside the injective range
        (12u32..=64).prop_map(|bits| LabelGenSpec::RandomWindow { bits }),
        (prop_oneof![Just(4u32), Just(5u32)], -50i64..50, 1i64..20)
            .prop_map(|(tier, a, d)| LabelGenSpec::HugeNeighbours { tier, starts: [a, a + d] }),
        (prop::collection::hash_set(2u64..10_000, 1..30), -20i64..20).prop_map(|(set, origin_offset)| {
            LabelGenSpec::Explicit { labels: set.into_iter().map(Natural::from).collect(), origin_offset }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn windows_are_injective_and_at_least_two(spec in generator(), seed: u64, centre in -1000i64..1000) {
        let line = make_line(spec, seed, AGREE).unwrap();
        let w = line.window(centre - 100, centre + 100);
        prop_assert!(w.iter().all(|l| *l >= Natural::from(2u32)));
        let distinct: HashSet<&Natural> = w.iter().collect();
        prop_assert_eq!(distinct.len(), w.len());
    }

    #[test]
    fn labels_are_deterministic(spec in generator(), seed: u64, pos in -10_000i64..10_000) {
        let a = make_line(spec.clone(), seed, AGREE).unwrap();
        let b = make_line(spec, seed, AGREE).unwrap();
        prop_assert_eq!(a.label_at(pos), b.label_at(pos));
    }

    #[test]
    fn huge_lines_keep_small_labels_near_starts(tier in 4u32..=5, a in -50i64..50, d in 3i64..20, seed: u64) {
        let line = make_line(LabelGenSpec::HugeNeighbours { tier, starts: [a, a + d] }, seed, AGREE).unwrap();
        for p in [a - 1, a, a + 1, a + d - 1, a + d, a + d + 1] {
            prop_assert!(line.label_at(p) < Natural::from(100u32));
        }
        prop_assert!(line.label_at(a - 2) >= tower(tier).unwrap());
        prop_assert!(line.label_at(a + d + 2) >= tower(tier).unwrap());
    }

    #[test]
    fn right_then_left_is_a_round_trip(pos in -1_000_000i64..1_000_000, flip: bool) {
        let o = if flip { Orientation::Flip } else { Orientation::Agree };
        let step = |p: Position, m: AgentMove| p + o.sign() * m.delta();
        prop_assert_eq!(step(step(pos, AgentMove::Right), AgentMove::Left), pos);
    }
}
