//! Ego-centric observation: the route ahead of the agent split into equal
//! cells, each carrying time-to-occupancy, time-to-vacancy, an intersection
//! marker and a right-of-way flag. Occluded approach lanes are filled with
//! worst-case phantom vehicles.

mod encode;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::road::{Dir, IntersectionId, LaneId, MovementId, RoadNetwork, Turn};
use crate::world::{VisibilityMask, WorldState};

pub use encode::{encode, Cell, Hazard, HazardKind, HazardKey, IerObservation, Mark};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IerConfig {
    /// Encoded distance ahead of the ego front bumper, m.
    pub lookahead: f64,
    pub cell_length: f64,
    /// Normalization cap for tto/ttv, s.
    pub t_max: f64,
    /// Vehicles further than this from an intersection are not considered incoming, m.
    pub monitoring_range: f64,
    /// Vehicles expected later than this are not considered incoming, s.
    pub arrival_horizon: f64,
    /// Acceleration assumed for phantom vehicles, m/s².
    pub phantom_accel: f64,
}

impl Default for IerConfig {
    fn default() -> Self {
        Self {
            lookahead: 100.0,
            cell_length: 2.0,
            t_max: 10.0,
            monitoring_range: 50.0,
            arrival_horizon: 6.0,
            phantom_accel: 3.0,
        }
    }
}

impl IerConfig {
    pub fn check(&self) -> Result<()> {
        let all = [self.lookahead, self.cell_length, self.t_max, self.monitoring_range, self.arrival_horizon, self.phantom_accel];
        if all.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(SimError::InvalidConfig("ier parameters must be positive".into()));
        }
        let n = self.lookahead / self.cell_length;
        if (n - n.round()).abs() > 1e-9 {
            return Err(SimError::InvalidConfig("lookahead must be a multiple of cell_length".into()));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        (self.lookahead / self.cell_length).round() as usize
    }

    /// Length of the flat observation vector.
    pub fn vector_len(&self) -> usize {
        4 * self.n_cells() + 1
    }

    pub fn normalize(&self, t: f64) -> f64 {
        t.min(self.t_max) / self.t_max
    }
}

/// Time until an occupant `s_start` m away reaches a section and until its
/// far end `s_end` m away passes it, at constant speed `v`. Infinite when `v` is zero.
pub fn occupancy_times(s_start: f64, s_end: f64, v: f64) -> Result<(f64, f64)> {
    if s_start < 0.0 || s_end < 0.0 || v < 0.0 {
        return Err(SimError::NegativeArgument("occupancy_times"));
    }
    if s_start > s_end {
        return Err(SimError::InvalidConfig(format!("s_start {s_start} exceeds s_end {s_end}")));
    }
    Ok((s_start / v_div(s_start, v), s_end / v_div(s_end, v)))
}

// 0/0 is taken as 0: an occupant already at the point needs no time.
fn v_div(num: f64, v: f64) -> f64 {
    if num == 0.0 && v == 0.0 {
        1.0
    } else {
        v
    }
}

/// Time to reach an intersection `d_c` m away at speed `v`; infinite when stopped short of it.
pub fn time_to_intersection(d_c: f64, v: f64) -> Result<f64> {
    if d_c < 0.0 || v < 0.0 {
        return Err(SimError::NegativeArgument("time_to_intersection"));
    }
    Ok(d_c / v_div(d_c, v))
}

/// Worst-case arrival time of a vehicle starting at rest `d` m away.
pub fn phantom_arrival(d: f64, accel: f64) -> f64 {
    (2.0 * d.max(0.0) / accel).sqrt()
}

/// How a vehicle crosses an intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approach {
    pub intersection: IntersectionId,
    /// Travel direction on the incoming lane.
    pub heading: Dir,
    pub turn: Turn,
}

impl Approach {
    pub fn of_movement(net: &RoadNetwork, m: MovementId) -> Option<Approach> {
        let mv = net.movement(m);
        Some(Approach { intersection: mv.intersection?, heading: net.lane(mv.from).dir, turn: mv.turn })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoadUser {
    Vehicle(Approach),
    Pedestrian(IntersectionId),
}

/// Whether `other` has right of way over `ego`: traffic from the right goes
/// first, a left turn yields to oncoming traffic that is not turning left,
/// and pedestrians always go first.
pub fn has_priority_other(ego: &Approach, other: &RoadUser) -> Result<bool> {
    let o = match other {
        RoadUser::Pedestrian(i) => {
            return if *i == ego.intersection { Ok(true) } else { Err(SimError::MismatchedIntersections) };
        }
        RoadUser::Vehicle(o) => o,
    };
    if o.intersection != ego.intersection {
        return Err(SimError::MismatchedIntersections);
    }
    let e = ego.heading;
    Ok(if o.heading == e.ccw() {
        true
    } else if o.heading == e.opposite() {
        ego.turn == Turn::Left && o.turn != Turn::Left
    } else {
        false
    })
}

/// Vehicles within the monitoring range of intersection `i` and expected
/// within the arrival horizon, including those already inside it.
pub fn incoming_vehicles(world: &WorldState, i: IntersectionId) -> Vec<usize> {
    let cfg = &world.config.ier;
    let mut out: Vec<usize> = world
        .index
        .approaches_at(i)
        .iter()
        .filter(|e| is_incoming(e.d_c, world.vehicles[e.vehicle].v, cfg))
        .map(|e| e.vehicle)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub(crate) fn is_incoming(d_c: f64, v: f64, cfg: &IerConfig) -> bool {
    d_c <= cfg.monitoring_range && time_to_intersection(d_c.max(0.0), v.max(0.0)).is_ok_and(|t| t <= cfg.arrival_horizon)
}

/// Assumed stationary vehicle hidden at the start of a concealed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomVehicle {
    pub lane: LaneId,
    pub intersection: IntersectionId,
    /// Distance upstream of the lane end, m.
    pub offset: f64,
    pub velocity: f64,
    pub accel: f64,
}

/// One phantom per concealed conflicting lane, at the start of its nearest concealed interval.
pub fn inject_phantoms(mask: &VisibilityMask, cfg: &IerConfig) -> Vec<PhantomVehicle> {
    let mut out: Vec<PhantomVehicle> = Vec::new();
    for l in &mask.lanes {
        let Some(&(start, _)) = l.concealed.first() else { continue };
        if out.iter().any(|p| p.lane == l.lane) {
            continue;
        }
        out.push(PhantomVehicle { lane: l.lane, intersection: l.intersection, offset: start, velocity: 0.0, accel: cfg.phantom_accel });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_formulas() {
        assert_eq!(occupancy_times(10.0, 14.0, 5.0).unwrap(), (2.0, 2.8));
        assert_eq!(occupancy_times(0.0, 4.0, 5.0).unwrap(), (0.0, 0.8));
        let (a, b) = occupancy_times(10.0, 14.0, 0.0).unwrap();
        let c = IerConfig::default();
        assert_eq!((c.normalize(a), c.normalize(b)), (1.0, 1.0));
        assert!(occupancy_times(-1.0, 2.0, 1.0).is_err());
        assert_eq!(time_to_intersection(30.0, 10.0).unwrap(), 3.0);
        assert_eq!(time_to_intersection(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(c.normalize(time_to_intersection(30.0, 0.0).unwrap()), 1.0);
        assert!(time_to_intersection(-1.0, 1.0).is_err());
    }

    fn ap(heading: Dir, turn: Turn) -> Approach {
        Approach { intersection: IntersectionId(0), heading, turn }
    }

    #[test]
    fn priority_rules() {
        let ego = ap(Dir::N, Turn::Straight);
        assert!(has_priority_other(&ego, &RoadUser::Vehicle(ap(Dir::W, Turn::Straight))).unwrap());
        assert!(!has_priority_other(&ego, &RoadUser::Vehicle(ap(Dir::E, Turn::Straight))).unwrap());
        let left = ap(Dir::N, Turn::Left);
        assert!(has_priority_other(&left, &RoadUser::Vehicle(ap(Dir::S, Turn::Straight))).unwrap());
        assert!(!has_priority_other(&ap(Dir::S, Turn::Straight), &RoadUser::Vehicle(left)).unwrap());
        assert!(has_priority_other(&ego, &RoadUser::Pedestrian(IntersectionId(0))).unwrap());
        let elsewhere = Approach { intersection: IntersectionId(1), ..ego };
        assert!(has_priority_other(&ego, &RoadUser::Vehicle(elsewhere)).is_err());
    }
}
