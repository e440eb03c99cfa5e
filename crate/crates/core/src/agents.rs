//! Discrete action set and the rule-based baseline policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::idm::{idm_acceleration, IdmParams, MAX_DECEL};
use crate::ier::{IerObservation, Mark};
use crate::road::Segment;
use crate::world::{is_visible, WorldState};

/// Acceleration levels, m/s², indexed by action.
pub const ACTIONS: [f64; 6] = [-7.0, -3.0, -1.5, 0.0, 1.5, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(u8);

impl Action {
    pub const EMERGENCY_BRAKE: Action = Action(0);
    pub const BRAKE: Action = Action(1);
    pub const HOLD: Action = Action(3);
    pub const ACCELERATE: Action = Action(5);

    pub fn from_index(i: i64) -> Result<Action> {
        if (0..ACTIONS.len() as i64).contains(&i) {
            Ok(Action(i as u8))
        } else {
            Err(SimError::InvalidAction(i))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn accel(self) -> f64 {
        ACTIONS[self.0 as usize]
    }

    /// Largest action whose acceleration does not exceed `a`; the emergency brake if none does.
    pub fn floor(a: f64) -> Action {
        let i = ACTIONS.iter().rposition(|&x| x <= a).unwrap_or(0);
        Action(i as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Ttc,
    TtcCreep,
    IerAcc,
    IerIdm,
    /// Actions supplied from outside, e.g. over the session protocol.
    External,
}

impl PolicyKind {
    pub const BASELINES: [PolicyKind; 4] = [PolicyKind::Ttc, PolicyKind::TtcCreep, PolicyKind::IerAcc, PolicyKind::IerIdm];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ttc => "ttc",
            PolicyKind::TtcCreep => "ttc-creep",
            PolicyKind::IerAcc => "ier-acc",
            PolicyKind::IerIdm => "ier-idm",
            PolicyKind::External => "external",
        }
    }

    /// Whether the shield may override this policy. The TTC baselines drive unshielded.
    pub fn shielded(self) -> bool {
        !matches!(self, PolicyKind::Ttc | PolicyKind::TtcCreep)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        [PolicyKind::Ttc, PolicyKind::TtcCreep, PolicyKind::IerAcc, PolicyKind::IerIdm, PolicyKind::External]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::UnknownPolicy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TtcParams {
    /// Accelerate when every time-to-collision exceeds this, s.
    pub tau_go: f64,
    /// Brake when any time-to-collision is below this, s.
    pub tau_brake: f64,
    /// Keep at least this much room to a vehicle ahead, m.
    pub min_gap: f64,
    /// Entities further away are ignored, m.
    pub range: f64,
}

impl Default for TtcParams {
    fn default() -> Self {
        Self { tau_go: 4.0, tau_brake: 2.0, min_gap: 2.0, range: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CreepParams {
    pub d_creep: f64,
    pub v_creep: f64,
}

impl Default for CreepParams {
    fn default() -> Self {
        Self { d_creep: 15.0, v_creep: 2.0 }
    }
}

/// Desired speed of the IER-IDM agent, m/s. Rounding IDM output down to the
/// action grid holds once the free-road term drops below 1.5 m/s², which
/// with these values happens just under 50 km/h.
pub const IER_IDM_V0: f64 = 55.0 / 3.6;
/// Maximum acceleration of the IER-IDM agent, m/s². Above 3 so the rounded
/// output keeps using the strongest action while well below the desired speed.
pub const IER_IDM_A_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    pub ttc: TtcParams,
    pub creep: CreepParams,
    pub ier_idm: IdmParams,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            ttc: TtcParams::default(),
            creep: CreepParams::default(),
            ier_idm: IdmParams { a_max: IER_IDM_A_MAX, ..IdmParams::default().with_v0(IER_IDM_V0) },
        }
    }
}

/// Read-only view handed to a policy each frame.
pub struct PolicyContext<'a> {
    pub world: &'a WorldState,
    pub obs: &'a IerObservation,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;
    fn act(&mut self, ctx: &PolicyContext) -> Action;
    fn reset(&mut self) {}
}

pub fn make_policy(kind: PolicyKind, params: &AgentParams, v_upper: f64) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Ttc => Box::new(TtcPolicy { params: params.ttc.clone(), v_upper }),
        PolicyKind::TtcCreep => Box::new(TtcCreepPolicy {
            ttc: TtcPolicy { params: params.ttc.clone(), v_upper },
            creep: params.creep.clone(),
        }),
        PolicyKind::IerAcc => Box::new(IerAccPolicy),
        PolicyKind::IerIdm => Box::new(IerIdmPolicy { idm: params.ier_idm.clone() }),
        PolicyKind::External => {
            return Err(SimError::UnknownPolicy("external actions come from a protocol client, not a built-in policy".into()))
        }
    })
}

/// +3 below the speed threshold, 0 at or above it.
pub fn ier_acc_action(obs: &IerObservation) -> Action {
    if obs.ego_speed_norm < 1.0 {
        Action::ACCELERATE
    } else {
        Action::HOLD
    }
}

pub struct IerAccPolicy;

impl Policy for IerAccPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::IerAcc
    }

    fn act(&mut self, ctx: &PolicyContext) -> Action {
        ier_acc_action(ctx.obs)
    }
}

/// Extra time a right-of-way user must leave before the ego may pass a cell, s.
const YIELD_MARGIN: f64 = 1.0;
/// Ego length assumed when clearing a cell, m.
const EGO_LENGTH: f64 = 4.5;
/// Acceleration assumed when estimating how fast the ego clears a cell, m/s².
const PASS_ACCEL: f64 = 3.0;

/// Gap and lead speed read off the observation: the first occupied cell or
/// the first right-of-way cell that the other user reaches before the ego
/// could be through it.
pub fn ier_lead(obs: &IerObservation, cell_length: f64, t_max: f64) -> (f64, f64) {
    let cells = &obs.cells;
    let occupied = cells.iter().position(|c| c.tto == 0.0);
    let v = obs.ego_speed.max(0.0);
    let pass_time = |k: usize| {
        let d = (k + 1) as f64 * cell_length + EGO_LENGTH;
        (-v + (v * v + 2.0 * PASS_ACCEL * d).sqrt()) / PASS_ACCEL
    };
    let yield_at = cells.iter().enumerate().position(|(k, c)| c.priority && c.tto * t_max <= pass_time(k) + YIELD_MARGIN);
    let occupied = occupied.filter(|&k| yield_at.map_or(true, |y| k <= y));
    match (occupied, yield_at) {
        (Some(k), _) => {
            let gap = k as f64 * cell_length;
            let speed = |a: f64, b: f64| (b > a && b < 1.0).then(|| cell_length / ((b - a) * t_max));
            // the occupant's own cells empty one cell_length / v apart
            let from_ttv = cells.get(k + 1).and_then(|n| speed(cells[k].ttv, n.ttv));
            // cells ahead of a moving occupant fill at the same rate
            let mut j = k;
            while j < cells.len() && cells[j].tto == 0.0 {
                j += 1;
            }
            let from_tto = match (cells.get(j), cells.get(j + 1)) {
                (Some(a), Some(b)) if a.tto > 0.0 => speed(a.tto, b.tto),
                _ => None,
            };
            (gap, from_ttv.or(from_tto).unwrap_or(0.0))
        }
        (_, Some(y)) => (y as f64 * cell_length, 0.0),
        (None, None) => (f64::INFINITY, 0.0),
    }
}

/// Continuous IDM acceleration on the observation.
pub fn ier_idm_accel(obs: &IerObservation, idm: &IdmParams, cell_length: f64, t_max: f64) -> f64 {
    let (gap, v_lead) = ier_lead(obs, cell_length, t_max);
    idm_acceleration(obs.ego_speed, v_lead, gap.max(0.1), idm).unwrap_or(-MAX_DECEL)
}

pub struct IerIdmPolicy {
    pub idm: IdmParams,
}

impl Policy for IerIdmPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::IerIdm
    }

    fn act(&mut self, ctx: &PolicyContext) -> Action {
        let c = &ctx.world.config.ier;
        Action::floor(ier_idm_accel(ctx.obs, &self.idm, c.cell_length, c.t_max))
    }
}

/// What the time-to-collision baselines react to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcView {
    /// Smallest time-to-collision over visible entities, s.
    pub ttc: f64,
    /// Bumper gap to the visible leader, m.
    pub gap_ahead: f64,
    /// Ego speed minus leader speed, m/s.
    pub closing: f64,
}

impl TtcView {
    pub const CLEAR: TtcView = TtcView { ttc: f64::INFINITY, gap_ahead: f64::INFINITY, closing: 0.0 };
}

/// Smallest time-to-collision against entities the agent can see.
pub fn min_visible_ttc(w: &WorldState, params: &TtcParams) -> TtcView {
    let net = &*w.network;
    let ego = w.agent();
    let eye = ego.front_point(net);
    let sees = |p: crate::geometry::Vec2| is_visible(&net.buildings, eye, p);
    let mut ttc = f64::INFINITY;
    let mut gap_ahead = f64::INFINITY;
    let mut closing = 0.0;

    if let Some((li, gap)) = w.index.leader(w, 0, params.range) {
        let l = &w.vehicles[li];
        if sees(l.point_at(net, l.rear())) || sees(w.index.footprints[li].center) {
            gap_ahead = gap;
            closing = ego.v - l.v;
            if closing > 0.0 {
                ttc = ttc.min(gap.max(0.0) / closing);
            }
        }
    }

    let k = ego.path.piece_index(ego.s);
    for p in &ego.path.pieces[k..] {
        if p.start - ego.s > params.range {
            break;
        }
        match p.seg {
            Segment::Movement(m) => {
                let Some(i) = net.movement(m).intersection else { continue };
                for e in w.index.approaches_at(i) {
                    if e.vehicle == 0 {
                        continue;
                    }
                    let Some(c) = net.conflict(m, e.movement) else { continue };
                    let o = &w.vehicles[e.vehicle];
                    let (z0, z1) = (p.start + c.span.0, p.start + c.span.1);
                    if z1 + ego.length <= ego.s || e.pos - o.length > c.other_span.1 {
                        continue;
                    }
                    if !(sees(w.index.footprints[e.vehicle].center) || sees(o.front_point(net))) {
                        continue;
                    }
                    let t = |d: f64, v: f64| if d <= 0.0 { 0.0 } else if v > 0.0 { d / v } else { f64::INFINITY };
                    let (e_in, e_out) = (t(z0 - ego.s, ego.v), t(z1 + ego.length - ego.s, ego.v));
                    let (o_in, o_out) = (t(c.other_span.0 - e.pos, o.v), t(c.other_span.1 + o.length - e.pos, o.v));
                    if e_in.is_finite() && o_in.is_finite() && e_in <= o_out && o_in <= e_out {
                        ttc = ttc.min(e_in.max(o_in));
                    }
                }
            }
            Segment::Lane(l) => {
                for span in &net.lane(l).crosswalks {
                    let z0 = p.start + span.start;
                    if z0 < ego.s {
                        continue;
                    }
                    let seen = w.index.crosswalk_blockers(w, span.crosswalk, l).any(|(q, _)| sees(w.pedestrians[q].position(net)));
                    if seen && ego.v > 0.0 {
                        ttc = ttc.min((z0 - ego.s) / ego.v);
                    }
                }
            }
        }
    }
    TtcView { ttc, gap_ahead, closing }
}

pub struct TtcPolicy {
    pub params: TtcParams,
    pub v_upper: f64,
}

impl TtcPolicy {
    pub fn action_for(&self, view: TtcView, v: f64) -> Action {
        let TtcView { ttc, gap_ahead, closing } = view;
        // deceleration needed to keep min_gap to the leader
        let room = gap_ahead - self.params.min_gap;
        let needed = if closing > 0.0 { closing * closing / (2.0 * room.max(0.01)) } else { 0.0 };
        if needed > -Action::BRAKE.accel() {
            Action::EMERGENCY_BRAKE
        } else if ttc < self.params.tau_brake || gap_ahead < self.params.min_gap {
            Action::BRAKE
        } else if ttc <= self.params.tau_go {
            Action::HOLD
        } else if v < self.v_upper {
            Action::ACCELERATE
        } else {
            Action::HOLD
        }
    }
}

impl Policy for TtcPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ttc
    }

    fn act(&mut self, ctx: &PolicyContext) -> Action {
        self.action_for(min_visible_ttc(ctx.world, &self.params), ctx.world.agent().v)
    }
}

/// Deceleration the creep agent plans with when closing in on an occluded intersection, m/s².
pub const CREEP_APPROACH_DECEL: f64 = 3.0;

pub struct TtcCreepPolicy {
    pub ttc: TtcPolicy,
    pub creep: CreepParams,
}

impl Policy for TtcCreepPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::TtcCreep
    }

    fn act(&mut self, ctx: &PolicyContext) -> Action {
        let base = self.ttc.act(ctx);
        let Some((i, d)) = ctx.obs.next_intersection else { return base };
        let occluded = ctx.obs.phantoms.iter().any(|p| p.intersection == i);
        if !occluded {
            return base;
        }
        let v = ctx.world.agent().v;
        let dt = ctx.world.dt();
        // Outside the creep zone, follow a braking profile that reaches v_creep at its edge.
        let room = (d - v * dt - self.creep.d_creep).max(0.0);
        let v_allow = (self.creep.v_creep.powi(2) + 2.0 * CREEP_APPROACH_DECEL * room).sqrt();
        let cap = (0..ACTIONS.len()).rev().map(|k| Action(k as u8)).find(|a| v + a.accel() * dt <= v_allow).unwrap_or(Action::EMERGENCY_BRAKE);
        if cap.accel() < base.accel() {
            cap
        } else {
            base
        }
    }
}

/// Marks the route cells of the next intersection in the observation, if any.
pub fn intersection_cells(obs: &IerObservation) -> Option<(usize, usize)> {
    let s = obs.cells.iter().position(|c| c.mark == Mark::Start)?;
    let e = obs.cells[s..].iter().position(|c| c.mark == Mark::End).map_or(obs.cells.len() - 1, |e| s + e);
    Some((s, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ier::{Cell, IerConfig};

    fn free_obs(v: f64) -> IerObservation {
        IerObservation {
            cells: vec![Cell::default(); IerConfig::default().n_cells()],
            ego_speed_norm: v / (50.0 / 3.6),
            ego_speed: v,
            hazards: vec![],
            phantoms: vec![],
            next_intersection: None,
        }
    }

    #[test]
    fn action_mapping() {
        for i in 0..6 {
            assert_eq!(Action::from_index(i).unwrap().index(), i as usize);
        }
        assert!(Action::from_index(6).is_err());
        assert!(Action::from_index(-1).is_err());
        assert_eq!(Action::EMERGENCY_BRAKE.accel(), -7.0);
        assert_eq!(Action::floor(2.9).accel(), 1.5);
        assert_eq!(Action::floor(-9.0).accel(), -7.0);
        assert_eq!(Action::floor(3.0).accel(), 3.0);
    }

    #[test]
    fn acc_threshold() {
        assert_eq!(ier_acc_action(&free_obs(0.0)), Action::ACCELERATE);
        assert_eq!(ier_acc_action(&free_obs(55.0 / 3.6)), Action::HOLD);
        assert_eq!(ier_acc_action(&free_obs(50.0 / 3.6)), Action::HOLD);
    }

    #[test]
    fn idm_on_observation() {
        let p = AgentParams::default().ier_idm;
        let a = ier_idm_accel(&free_obs(0.0), &p, 2.0, 10.0);
        assert_eq!(Action::floor(a), Action::ACCELERATE);
        let mut o = free_obs(5.0);
        o.cells[1].tto = 0.0;
        let a = ier_idm_accel(&o, &p, 2.0, 10.0);
        assert!(Action::floor(a).accel() <= -3.0);
    }

    #[test]
    fn lead_speed_from_gradient() {
        let mut o = free_obs(5.0);
        o.cells[5].tto = 0.0;
        // occupant front at 12 m moving at 4 m/s: next cells reach at 0, 0.5, 1.0 s
        o.cells[6].tto = 0.0;
        o.cells[7].tto = 0.05;
        o.cells[8].tto = 0.1;
        let (gap, v) = ier_lead(&o, 2.0, 10.0);
        assert_eq!(gap, 10.0);
        assert!((v - 4.0).abs() < 1e-9);
        // rear cells vacate 0.5 s apart: 4 m/s even with a queue right ahead
        o.cells[5].ttv = 0.02;
        o.cells[6].ttv = 0.07;
        o.cells[7].tto = 0.0;
        o.cells[8].tto = 0.0;
        let (_, v) = ier_lead(&o, 2.0, 10.0);
        assert!((v - 4.0).abs() < 1e-9);
    }

    fn ttc_policy() -> TtcPolicy {
        TtcPolicy { params: TtcParams::default(), v_upper: 50.0 / 3.6 }
    }

    #[test]
    fn ttc_thresholds() {
        let p = ttc_policy();
        let at = |ttc| TtcView { ttc, ..TtcView::CLEAR };
        assert_eq!(p.action_for(TtcView::CLEAR, 5.0), Action::ACCELERATE);
        assert_eq!(p.action_for(at(3.0), 5.0), Action::HOLD);
        assert_eq!(p.action_for(at(1.0), 5.0), Action::BRAKE);
        assert_eq!(p.action_for(TtcView::CLEAR, 50.0 / 3.6), Action::HOLD);
    }

    #[test]
    fn ttc_follows_with_hard_braking() {
        let p = ttc_policy();
        // closing at 14 m/s with 28 m of room needs 3.5 m/s²
        let v = TtcView { ttc: 2.0, gap_ahead: 30.0, closing: 14.0 };
        assert_eq!(p.action_for(v, 14.0), Action::EMERGENCY_BRAKE);
        let v = TtcView { ttc: 10.0, gap_ahead: 52.0, closing: 5.0 };
        assert_eq!(p.action_for(v, 14.0), Action::HOLD);
    }

    #[test]
    fn names_roundtrip() {
        for k in PolicyKind::BASELINES {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("nope".parse::<PolicyKind>().is_err());
    }
}
