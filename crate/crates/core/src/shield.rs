//! Emergency-brake shield placed after the policy. It only looks at the
//! observation and the proposed acceleration, never at policy internals.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::ier::{Hazard, HazardKey, IerObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShieldConfig {
    /// Width of the braking window ahead of the latest stopping point, m.
    pub d_threshold: f64,
    pub emergency_decel: f64,
    /// Reaction time added to the stopping distance, s (one frame by default).
    pub reaction_time: f64,
    /// Also brake when a prioritized hazard's margin jumps from >= 0 to < 0 between frames.
    pub sign_change: bool,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        Self { d_threshold: 7.0, emergency_decel: 7.0, reaction_time: 1.0 / 24.0, sign_change: true }
    }
}

impl ShieldConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.d_threshold > 0.0) || !(self.emergency_decel > 0.0) || !(self.reaction_time >= 0.0) {
            return Err(SimError::InvalidConfig("shield parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Stopping distance under constant `decel` plus `reaction` seconds of travel at `v`.
pub fn braking_distance(v: f64, decel: f64, reaction: f64) -> Result<f64> {
    if v < 0.0 {
        return Err(SimError::NegativeArgument("braking_distance"));
    }
    Ok(v * v / (2.0 * decel) + v * reaction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShieldDecision {
    pub proposed_accel: f64,
    pub final_accel: f64,
    pub triggered: bool,
    /// Distance to the governing prioritized hazard, if any.
    pub d_intersection: Option<f64>,
    pub d_braking: f64,
    pub reason: String,
}

impl ShieldDecision {
    /// Decision that never overrides, still reporting the distances.
    pub fn passthrough(proposed: f64, d_intersection: Option<f64>, d_braking: f64) -> Self {
        ShieldDecision {
            proposed_accel: proposed,
            final_accel: proposed,
            triggered: false,
            d_intersection,
            d_braking,
            reason: String::new(),
        }
    }
}

/// Pure trigger predicate for one hazard.
pub fn in_window(d_intersection: f64, d_braking: f64, priority: bool, cfg: &ShieldConfig) -> bool {
    let m = d_intersection - d_braking;
    priority && (0.0..cfg.d_threshold).contains(&m)
}

/// Shield with the one frame of memory needed for the sign-change rule.
#[derive(Debug, Clone, Default)]
pub struct Shield {
    pub config: ShieldConfig,
    prev: HashMap<HazardKey, f64>,
}

impl Shield {
    pub fn new(config: ShieldConfig) -> Self {
        Self { config, prev: HashMap::new() }
    }

    pub fn reset(&mut self) {
        self.prev.clear();
    }

    /// Evaluates the trigger predicate and remembers this frame's margins.
    /// Returns the governing hazard (if any) and whether to brake.
    fn evaluate(&mut self, obs: &IerObservation, d_brake: f64) -> (Option<Hazard>, bool, &'static str) {
        let cfg = &self.config;
        let prioritized = obs.hazards.iter().filter(|h| h.priority);
        let mut trigger: Option<(Hazard, &'static str)> = None;
        let mut nearest: Option<Hazard> = None;
        let mut margins = HashMap::with_capacity(obs.hazards.len());
        for h in prioritized {
            let m = h.distance - d_brake;
            if h.distance >= 0.0 && nearest.map_or(true, |n| h.distance < n.distance) {
                nearest = Some(*h);
            }
            let hit = if in_window(h.distance, d_brake, true, cfg) {
                Some("window")
            } else if cfg.sign_change && m < 0.0 && self.prev.get(&h.key).is_some_and(|&p| p >= 0.0) {
                Some("skipped window")
            } else {
                None
            };
            if let Some(r) = hit {
                if trigger.map_or(true, |(t, _)| h.distance < t.distance) {
                    trigger = Some((*h, r));
                }
            }
            margins.insert(h.key, m);
        }
        self.prev = margins;
        match trigger {
            Some((h, r)) => (Some(h), true, r),
            None => (nearest, false, ""),
        }
    }

    /// Checks `proposed` against the observation; overrides with emergency braking when triggered.
    pub fn decide(&mut self, obs: &IerObservation, proposed: f64) -> ShieldDecision {
        let d_brake = braking_distance(obs.ego_speed.max(0.0), self.config.emergency_decel, self.config.reaction_time)
            .expect("speed is non-negative");
        let (h, triggered, reason) = self.evaluate(obs, d_brake);
        ShieldDecision {
            proposed_accel: proposed,
            final_accel: if triggered { -self.config.emergency_decel } else { proposed },
            triggered,
            d_intersection: h.map(|h| h.distance),
            d_braking: d_brake,
            reason: reason.to_string(),
        }
    }

    /// Same bookkeeping as [`Shield::decide`] but never overrides.
    pub fn monitor(&mut self, obs: &IerObservation, proposed: f64) -> ShieldDecision {
        let d = self.decide(obs, proposed);
        ShieldDecision::passthrough(proposed, d.d_intersection, d.d_braking)
    }
}
