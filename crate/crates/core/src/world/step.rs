use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::idm::{idm_acceleration, IdmParams, MAX_DECEL};
use crate::ier::{has_priority_other, is_incoming, phantom_arrival, Approach, RoadUser};
use crate::road::{MovementId, Piece, Segment};

use super::collision::{detect_collisions, Collision};
use super::visibility::{conflicting_lanes, first_concealed};
use super::{pedestrian, WorldState};

/// Outcome flags of one simulation step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub collision: Option<Collision>,
    pub near_collision: bool,
    /// Episode hit the time limit.
    pub timeout: bool,
    pub done: bool,
}

impl StepEvents {
    pub fn collided(&self) -> bool {
        self.collision.is_some()
    }

    pub fn agent_at_fault(&self) -> bool {
        self.collision.as_ref().is_some_and(|c| c.at_fault)
    }
}

/// Below this speed a vehicle in front of an intersection counts as waiting, m/s.
const WAIT_SPEED: f64 = 0.5;
/// Waiting only counts this close to the intersection, m.
const WAIT_DIST: f64 = 10.0;
/// Background cars look for hidden cross traffic once this close, m.
const OCCLUSION_CHECK_DIST: f64 = 40.0;
/// After waiting this long a background car accepts gaps in prioritized traffic, s.
const PATIENCE: f64 = 4.0;
/// Time a gap must leave beyond clearing the conflict, s.
const GAP_MARGIN: f64 = 1.5;
const LEADER_RANGE: f64 = 150.0;
const CROSSWALK_RANGE: f64 = 60.0;

impl WorldState {
    /// Advances the world by one frame with the agent applying `agent_accel`
    /// (already checked by the shield). Background vehicles, pedestrians and
    /// the agent move; collisions are evaluated on the new poses.
    pub fn step(&mut self, agent_accel: f64) -> Result<StepEvents> {
        if self.done {
            return Err(SimError::EpisodeDone(self.frame));
        }
        if !agent_accel.is_finite() {
            return Err(SimError::InvalidConfig(format!("agent acceleration {agent_accel} is not finite")));
        }
        let dt = self.dt();
        let mut accels = Vec::with_capacity(self.vehicles.len());
        accels.push(agent_accel);
        for vi in 1..self.vehicles.len() {
            accels.push(background_accel(self, vi));
        }
        let frame = self.frame + 1;
        for (v, a) in self.vehicles.iter_mut().zip(accels) {
            v.a = a;
            v.v = (v.v + a * dt).max(0.0);
            v.s += v.v * dt;
        }
        pedestrian::step_pedestrians(self);
        self.frame = frame;
        self.top_up_routes();
        self.refresh();
        self.update_bookkeeping();

        let (collision, near_collision) = detect_collisions(self);
        let timeout = self.frame >= self.config.max_frames();
        let done = collision.is_some() || timeout;
        self.done = done;
        Ok(StepEvents { collision, near_collision, timeout, done })
    }

    fn update_bookkeeping(&mut self) {
        let net = self.network.clone();
        for v in &mut self.vehicles {
            let p = v.piece();
            if let Segment::Movement(m) = p.seg {
                if net.movement(m).intersection.is_some() && v.entered_box.map(|(em, _)| em) != Some(m) {
                    v.entered_box = Some((m, self.frame));
                }
                v.wait_since = None;
                continue;
            }
            let near = v.path.next_movement(v.s).is_some_and(|(mp, m)| {
                net.movement(m).intersection.is_some() && mp.start - v.s < WAIT_DIST
            });
            if !near {
                v.wait_since = None;
            } else if v.v < WAIT_SPEED && v.wait_since.is_none() {
                v.wait_since = Some(self.frame);
            }
        }
    }
}

/// Steps `world` by `dt`, which must equal the configured frame time.
pub fn step_world(world: &mut WorldState, agent_accel: f64, dt: f64) -> Result<StepEvents> {
    if (dt - world.dt()).abs() > 1e-12 {
        return Err(SimError::InvalidConfig(format!("dt {dt} differs from 1/fps")));
    }
    world.step(agent_accel)
}

fn stop_accel(v: f64, gap: f64, p: &IdmParams) -> f64 {
    idm_acceleration(v, 0.0, gap.max(0.1), p).unwrap_or(-MAX_DECEL)
}

fn can_stop_within(v: f64, d: f64) -> bool {
    v * v / (2.0 * MAX_DECEL) <= d
}

fn background_accel(w: &WorldState, vi: usize) -> f64 {
    let net = &*w.network;
    let cfg = &w.config;
    let me = &w.vehicles[vi];
    let (piece, _) = me.path.piece_at(me.s);
    let limit = match piece.seg {
        Segment::Lane(l) => net.lane(l).speed_limit,
        Segment::Movement(m) => net.lane(net.movement(m).to).speed_limit,
    };
    let p = cfg.idm.with_v0(limit);
    let mut a = match w.index.leader(w, vi, LEADER_RANGE) {
        Some((li, gap)) => idm_acceleration(me.v, w.vehicles[li].v, gap.max(0.1), &p).unwrap_or(-MAX_DECEL),
        None => idm_acceleration(me.v, 0.0, f64::INFINITY, &p).unwrap_or(0.0),
    };

    let k = me.path.piece_index(me.s);
    for pc in &me.path.pieces[k..] {
        if pc.start - me.s > CROSSWALK_RANGE {
            break;
        }
        let Segment::Lane(l) = pc.seg else { continue };
        for span in &net.lane(l).crosswalks {
            let start = pc.start + span.start;
            if start >= me.s && w.index.crosswalk_blocks(w, span.crosswalk, l).is_some() {
                a = a.min(stop_accel(me.v, start - me.s, &p));
            }
        }
    }

    if cfg.traffic.yielding {
        if let Some(d) = yield_distance(w, vi) {
            a = a.min(stop_accel(me.v, d, &p));
        }
    }
    a
}

/// Distance to the point where background vehicle `vi` must stop to give
/// way at its next intersection, or `None` when it may proceed.
fn yield_distance(w: &WorldState, vi: usize) -> Option<f64> {
    let net = &*w.network;
    let cfg = &w.config;
    let me = &w.vehicles[vi];
    let (mp, m) = me.path.next_movement(me.s)?;
    let i = net.movement(m).intersection?;
    let d_c = mp.start - me.s;
    if d_c > cfg.ier.monitoring_range {
        return None;
    }
    let my_ap = Approach::of_movement(net, m)?;
    let i_wait = me.wait_since.filter(|_| me.v < WAIT_SPEED);
    let impatient = me.wait_since.is_some_and(|t| (w.frame - t) as f64 * w.dt() >= PATIENCE);
    let p = cfg.idm;
    let mut limit = f64::INFINITY;

    for e in w.index.approaches_at(i) {
        if e.vehicle == vi {
            continue;
        }
        let Some(c) = net.conflict(m, e.movement) else { continue };
        let my_zone = mp.start + c.span.0 - me.s;
        if my_zone <= 0.0 || my_zone >= limit {
            continue;
        }
        let o = &w.vehicles[e.vehicle];
        if e.pos - o.length > c.other_span.1 {
            continue;
        }
        let o_zone = c.other_span.0 - e.pos;
        let o_committed = (e.committed && e.pos > 0.0)
            || o.v * o.v / (2.0 * MAX_DECEL) + o.v * w.dt() + 1.0 >= o_zone;
        let arrives_first = || {
            if !impatient {
                return true;
            }
            let clear = mp.start + c.span.1 - me.s + me.length;
            let t_clear = (-me.v + (me.v * me.v + 2.0 * p.a_max * clear).sqrt()) / p.a_max;
            o.v > 0.0 && o_zone / o.v <= t_clear + GAP_MARGIN
        };
        let give_way = o_committed
            || (is_incoming(e.d_c, o.v, &cfg.ier)
                && Approach::of_movement(net, e.movement)
                    .is_some_and(|oa| has_priority_other(&my_ap, &RoadUser::Vehicle(oa)).unwrap_or(false))
                && arrives_first())
            || match (i_wait, o.wait_since.filter(|_| o.v < WAIT_SPEED && !e.committed)) {
                (Some(mine), Some(theirs)) => (theirs, o.id) < (mine, me.id),
                _ => false,
            };
        if give_way {
            limit = my_zone;
        }
    }

    if limit.is_infinite() && d_c <= OCCLUSION_CHECK_DIST && !w.occluders[i.0 as usize].is_empty() {
        let viewer = me.front_point(net);
        for (l, entry) in conflicting_lanes(net, m) {
            let prioritized = net.movements_from(l).any(|o| {
                net.conflict(m, o.id).is_some()
                    && Approach::of_movement(net, o.id)
                        .is_some_and(|oa| has_priority_other(&my_ap, &RoadUser::Vehicle(oa)).unwrap_or(false))
            });
            if !prioritized {
                continue;
            }
            let hidden = first_concealed(net, &w.occluders[i.0 as usize], viewer, l, cfg.ier.monitoring_range, 2.0);
            if hidden.is_some_and(|d| phantom_arrival(d, cfg.ier.phantom_accel) <= cfg.ier.arrival_horizon) {
                limit = limit.min(mp.start + entry - me.s);
            }
        }
    }

    if limit.is_infinite() {
        return None;
    }
    stop_target(w, vi, mp, m, limit)
}

/// Earliest stoppable point among the stop line, the box entry and just before the conflict.
fn stop_target(w: &WorldState, vi: usize, mp: Piece, m: MovementId, zone: f64) -> Option<f64> {
    let net = &*w.network;
    let me = &w.vehicles[vi];
    let from = net.lane(net.movement(m).from);
    let d_c = mp.start - me.s;
    let line = from.crosswalks.iter().map(|c| c.start).fold(from.length(), f64::min) - from.length() + d_c;
    [line, d_c, zone - 0.5]
        .into_iter()
        .filter(|&d| d > 0.0 && d <= zone)
        .find(|&d| can_stop_within(me.v, d))
}
