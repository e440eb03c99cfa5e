mod common;

use proptest::prelude::*;

use ier_sim::ier::{has_priority_other, Approach, RoadUser};
use ier_sim::road::{Dir, IntersectionId, Turn};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tto_never_exceeds_ttv(seed in any::<u64>()) {
        let w = common::fuzz_world(seed);
        prop_assert!(common::check_tto_le_ttv(&w).is_ok(), "{:?}", common::check_tto_le_ttv(&w));
    }

    #[test]
    fn rigid_transform_changes_nothing(seed in any::<u64>(), angle in -3.2f64..3.2, dx in -1e4f64..1e4, dy in -1e4f64..1e4) {
        let w = common::fuzz_world(seed);
        let r = common::check_rigid_invariance(&w, angle, dx, dy);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn incoming_matches_brute_force(seed in any::<u64>()) {
        let w = common::fuzz_world(seed);
        let r = common::check_incoming(&w);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn buildings_only_add_occupancy(seed in any::<u64>(), ox in -45.0f64..25.0, oy in -45.0f64..25.0, sx in 2.0f64..25.0, sy in 2.0f64..25.0) {
        let w = common::fuzz_world(seed);
        let r = common::check_building_pessimism(&w, ox, oy, sx, sy);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

#[test]
fn crossing_straights_have_exactly_one_priority() {
    let ap = |heading, turn| Approach { intersection: IntersectionId(0), heading, turn };
    for a in Dir::ALL {
        for b in [a.cw(), a.ccw()] {
            let x = has_priority_other(&ap(a, Turn::Straight), &RoadUser::Vehicle(ap(b, Turn::Straight))).unwrap();
            let y = has_priority_other(&ap(b, Turn::Straight), &RoadUser::Vehicle(ap(a, Turn::Straight))).unwrap();
            assert!(x ^ y, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn oncoming_left_turn_yields() {
    let ap = |heading, turn| Approach { intersection: IntersectionId(0), heading, turn };
    for a in Dir::ALL {
        let left = ap(a, Turn::Left);
        let straight = ap(a.opposite(), Turn::Straight);
        assert!(has_priority_other(&left, &RoadUser::Vehicle(straight)).unwrap());
        assert!(!has_priority_other(&straight, &RoadUser::Vehicle(left)).unwrap());
    }
}

#[test]
fn added_buildings_do_reach_the_observation() {
    use ier_sim::geometry::{Rect, Vec2};
    use ier_sim::ier::encode;
    use std::sync::Arc;
    let mut changed = 0;
    for seed in 0..200 {
        let w = common::fuzz_world(seed);
        let base = encode(&w);
        let Some((i, _)) = base.next_intersection else { continue };
        let c = w.network.intersection(i).center;
        let mut n = (*w.network).clone();
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let a = c + Vec2::new(8.0 * sx, 8.0 * sy);
            let b = c + Vec2::new(30.0 * sx, 30.0 * sy);
            n.buildings.push(Rect::new(Vec2::new(a.x.min(b.x), a.y.min(b.y)), Vec2::new(a.x.max(b.x), a.y.max(b.y))));
        }
        let mut more = w.clone();
        more.network = Arc::new(n);
        more.refresh();
        let after = encode(&more);
        assert!(base.cells.iter().zip(&after.cells).all(|(x, y)| y.tto <= x.tto));
        if base.cells.iter().zip(&after.cells).any(|(x, y)| y.tto < x.tto) {
            changed += 1;
        }
    }
    assert!(changed >= 10, "only {changed} worlds reacted to corner buildings");
}
