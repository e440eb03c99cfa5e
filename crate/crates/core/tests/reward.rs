use proptest::prelude::*;

use ier_sim::agents::ACTIONS;
use ier_sim::reward::{compute_reward, RewardInputs, RewardParams};

fn inputs() -> impl Strategy<Value = RewardInputs> {
    (0.0f64..25.0, 0usize..6, 0usize..6, any::<bool>(), any::<bool>(), any::<bool>(), 0.0f64..=1.0).prop_map(
        |(v, ia, is, on_intersection, collision, near_collision, free)| RewardInputs {
            v,
            a_agent: ACTIONS[ia],
            a_shield: ACTIONS[is],
            on_intersection,
            collision,
            near_collision,
            d_la: 100.0,
            d_free: 100.0 * free,
        },
    )
}

proptest! {
    #[test]
    fn shield_and_distance_terms_are_exclusive(mut i in inputs()) {
        i.v = i.v.max(0.1);
        let r = compute_reward(&i, &RewardParams::default());
        let shield_branch = i.a_shield < i.a_agent;
        prop_assert_eq!(r.r_distance != 0.0 && !shield_branch, i.d_free < i.d_la && !shield_branch);
        if shield_branch {
            prop_assert_eq!(r.r_distance, 0.0);
            prop_assert!(r.r_shield <= 0.0);
        } else {
            prop_assert_eq!(r.r_shield, 0.0);
        }
    }

    #[test]
    fn acceleration_term_sign(i in inputs()) {
        let r = compute_reward(&i, &RewardParams::default());
        prop_assert!(r.r_acceleration <= 0.0);
        prop_assert_eq!(r.r_acceleration == 0.0, i.a_shield == 0.0);
    }

    #[test]
    fn velocity_term_peaks_at_limit(v in 0.0f64..40.0) {
        let p = RewardParams::default();
        let at = |v: f64| compute_reward(&RewardInputs { v, ..free(0.0) }, &p).r_velocity;
        let r = at(v);
        if v <= p.v_upper { prop_assert!(r >= 0.0) } else { prop_assert!(r <= 0.0) }
        prop_assert!(r <= at(p.v_upper));
    }

    #[test]
    fn linear_in_each_weight(i in inputs(), which in 0usize..8) {
        let p = RewardParams::default();
        let mut q = p.clone();
        let k = [&mut q.k_c, &mut q.k_c_abs, &mut q.k_v_upper, &mut q.k_v_lower, &mut q.k_a, &mut q.k_intersection, &mut q.k_shield, &mut q.k_dist];
        *k.into_iter().nth(which).unwrap() *= 2.0;
        let (a, b) = (compute_reward(&i, &p), compute_reward(&i, &q));
        let terms = |r: &ier_sim::reward::RewardBreakdown| [r.r_collision, r.r_velocity, r.r_acceleration, r.r_intersection, r.r_shield, r.r_distance];
        let mut want = terms(&a);
        let event = i.collision || i.near_collision;
        match which {
            0 if event => want[0] -= p.k_c * i.v.abs(),
            1 if event => want[0] -= p.k_c_abs,
            2 if i.v > p.v_upper => want[1] *= 2.0,
            3 if i.v <= p.v_upper => want[1] *= 2.0,
            4..=7 => want[which - 2] *= 2.0,
            _ => {}
        }
        for (x, y) in want.iter().zip(terms(&b)) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn one_second_sum_ignores_frame_rate(mut i in inputs()) {
        i.collision = false;
        i.near_collision = false;
        let p24 = RewardParams::default();
        let p48 = RewardParams { fps: 48.0, ..RewardParams::default() };
        let s24: f64 = (0..24).map(|_| compute_reward(&i, &p24).total).sum();
        let s48: f64 = (0..48).map(|_| compute_reward(&i, &p48).total).sum();
        prop_assert!((s24 - s48).abs() < 1e-9);
    }
}

fn free(v: f64) -> RewardInputs {
    RewardInputs { v, a_agent: 0.0, a_shield: 0.0, on_intersection: false, collision: false, near_collision: false, d_la: 100.0, d_free: 100.0 }
}

#[test]
fn standing_still_off_intersection_earns_nothing() {
    let r = compute_reward(&free(0.0), &RewardParams::default());
    assert_eq!(r.total, 0.0);
    let r = compute_reward(&RewardInputs { on_intersection: true, d_free: 10.0, ..free(0.0) }, &RewardParams::default());
    assert_eq!((r.r_distance, r.r_velocity), (0.0, 0.0));
    assert_eq!(r.total, -0.2 / 24.0);
}
