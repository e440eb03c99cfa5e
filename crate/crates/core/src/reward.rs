//! Per-frame reward with a per-term breakdown.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    pub k_c: f64,
    pub k_c_abs: f64,
    pub k_v_upper: f64,
    pub k_v_lower: f64,
    pub k_a: f64,
    pub k_intersection: f64,
    pub k_shield: f64,
    pub k_dist: f64,
    /// m/s
    pub v_upper: f64,
    pub fps: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            k_c: 3.0,
            k_c_abs: 25.0,
            k_v_upper: 0.06,
            k_v_lower: 0.03,
            k_a: 0.01,
            k_intersection: 0.2,
            k_shield: 0.1,
            k_dist: 0.2,
            v_upper: 50.0 / 3.6,
            fps: 24.0,
        }
    }
}

impl RewardParams {
    pub fn check(&self) -> Result<()> {
        let ks = [self.k_c, self.k_c_abs, self.k_v_upper, self.k_v_lower, self.k_a, self.k_intersection, self.k_shield, self.k_dist];
        if ks.iter().any(|k| !(*k >= 0.0)) || !(self.fps > 0.0) || !(self.v_upper > 0.0) {
            return Err(SimError::InvalidConfig("reward weights must be >= 0, fps and v_upper > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardInputs {
    pub v: f64,
    /// Acceleration chosen by the policy.
    pub a_agent: f64,
    /// Acceleration actually executed after the shield.
    pub a_shield: f64,
    pub on_intersection: bool,
    pub collision: bool,
    pub near_collision: bool,
    pub d_la: f64,
    pub d_free: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_collision: f64,
    pub r_velocity: f64,
    pub r_acceleration: f64,
    pub r_intersection: f64,
    pub r_shield: f64,
    pub r_distance: f64,
    pub total: f64,
}

pub fn compute_reward(i: &RewardInputs, p: &RewardParams) -> RewardBreakdown {
    let r_collision = if i.collision || i.near_collision { -p.k_c * i.v.abs() - p.k_c_abs } else { 0.0 };
    let r_velocity = if i.v > p.v_upper { -p.k_v_upper * (i.v - p.v_upper).abs() } else { p.k_v_lower * i.v.abs() };
    let r_acceleration = -p.k_a * (2f64.powf(i.a_shield.abs()) - 1.0);
    let r_intersection = if i.on_intersection { -p.k_intersection } else { 0.0 };
    // magnitude of the override: the literal signed form would reward braking
    let r_shield = if i.a_shield < i.a_agent { -p.k_shield * i.a_shield.abs() } else { 0.0 };
    let r_distance = if i.a_shield >= i.a_agent && i.v > 0.0 && i.d_la > 0.0 {
        p.k_dist * (i.d_la - i.d_free) / i.d_la
    } else {
        0.0
    };
    let total = r_collision + (r_velocity + r_acceleration + r_intersection + r_shield + r_distance) / p.fps;
    RewardBreakdown { r_collision, r_velocity, r_acceleration, r_intersection, r_shield, r_distance, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RewardInputs {
        RewardInputs {
            v: 10.0,
            a_agent: 0.0,
            a_shield: 0.0,
            on_intersection: false,
            collision: false,
            near_collision: false,
            d_la: 100.0,
            d_free: 100.0,
        }
    }

    #[test]
    fn cruising() {
        let r = compute_reward(&base(), &RewardParams::default());
        assert!((r.r_velocity - 0.3).abs() < 1e-12);
        assert_eq!(r.r_acceleration, 0.0);
        assert_eq!(r.r_distance, 0.0);
        assert!((r.total - 0.0125).abs() < 1e-12);
    }

    #[test]
    fn collision_under_shield() {
        let i = RewardInputs { v: 5.0, a_agent: 3.0, a_shield: -7.0, collision: true, ..base() };
        let r = compute_reward(&i, &RewardParams::default());
        assert!((r.r_collision + 40.0).abs() < 1e-12);
        assert!((r.r_shield + 0.7).abs() < 1e-12);
        assert!((r.r_acceleration + 1.27).abs() < 1e-12);
    }

    #[test]
    fn at_upper_speed_uses_lower_branch() {
        let p = RewardParams::default();
        let r = compute_reward(&RewardInputs { v: p.v_upper, ..base() }, &p);
        assert!((r.r_velocity - 0.03 * p.v_upper).abs() < 1e-12);
    }
}
