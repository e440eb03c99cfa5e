mod common;

use proptest::prelude::*;

use ier_sim::agents::ACTIONS;
use ier_sim::ier::encode;
use ier_sim::shield::{braking_distance, in_window, Shield, ShieldConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn untriggered_frames_pass_the_action_through(seed in any::<u64>(), ai in 0usize..6) {
        let w = common::fuzz_world(seed);
        let obs = encode(&w);
        let mut s = Shield::new(ShieldConfig::default());
        let d = s.decide(&obs, ACTIONS[ai]);
        if !d.triggered {
            prop_assert_eq!(d.final_accel.to_bits(), ACTIONS[ai].to_bits());
        } else {
            prop_assert_eq!(d.final_accel, -7.0);
        }
    }

    #[test]
    fn braking_again_is_stable(seed in any::<u64>()) {
        let w = common::fuzz_world(seed);
        let obs = encode(&w);
        let mut a = Shield::new(ShieldConfig::default());
        let mut b = Shield::new(ShieldConfig::default());
        let first = a.decide(&obs, 3.0);
        let again = b.decide(&obs, -7.0);
        prop_assert_eq!(again.final_accel, -7.0);
        prop_assert_eq!(again.triggered, first.triggered);
    }

    #[test]
    fn window_predicate(d in -20.0f64..80.0, v in 0.0f64..20.0, pr in any::<bool>()) {
        let cfg = ShieldConfig::default();
        let b = braking_distance(v, 7.0, 1.0 / 24.0).unwrap();
        let want = pr && d - b >= 0.0 && d - b < 7.0;
        prop_assert_eq!(in_window(d, b, pr, &cfg), want);
    }
}

#[test]
fn full_throttle_into_occluded_crossings() {
    let mut zone_frames = 0;
    let mut triggered = 0;
    for seed in 0..300 {
        let r = common::safety_scenario(seed);
        assert!(r.violations.is_empty(), "seed {seed}: {:?}", r.violations);
        assert_eq!(r.at_fault_collisions, 0, "seed {seed}");
        zone_frames += r.in_zone_frames;
        triggered += r.triggered;
    }
    assert!(zone_frames > 1000, "the ego rarely reached a conflict zone");
    assert!(triggered > 100);
}
