//! Intelligent Driver Model car following.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Simulation-wide deceleration bound, m/s².
pub const MAX_DECEL: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Safe time headway, s.
    pub time_headway: f64,
    pub a_max: f64,
    /// Comfortable deceleration, m/s².
    pub b: f64,
    /// Minimum standstill gap, m.
    pub s0: f64,
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { v0: 50.0 / 3.6, time_headway: 1.5, a_max: 3.0, b: 3.0, s0: 2.0, delta: 4.0 }
    }
}

impl IdmParams {
    pub fn with_v0(self, v0: f64) -> Self {
        Self { v0, ..self }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.v0 > 0.0 && self.time_headway > 0.0 && self.a_max > 0.0 && self.b > 0.0 && self.s0 > 0.0 && self.delta >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!("IDM parameters out of range: {self:?}")))
        }
    }
}

/// IDM acceleration for a follower at speed `v` behind a leader at `v_lead`
/// with bumper gap `gap`. A free road is `gap = f64::INFINITY`. The result is
/// at most `a_max` and clamped below at `-MAX_DECEL`.
pub fn idm_acceleration(v: f64, v_lead: f64, gap: f64, p: &IdmParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(SimError::NonPositiveGap(gap));
    }
    let free = 1.0 - (v / p.v0).powf(p.delta);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        let dv = v - v_lead;
        let s_star = p.s0 + (v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b).sqrt())).max(0.0);
        (s_star / gap).powi(2)
    };
    Ok((p.a_max * (free - interaction)).clamp(-MAX_DECEL, p.a_max))
}
