use serde::{Deserialize, Serialize};

use crate::idm::MAX_DECEL;
use crate::road::{CrosswalkId, IntersectionId, LaneId, MovementId, Segment};
use crate::world::{visible_region, WorldState};

use super::{has_priority_other, inject_phantoms, is_incoming, phantom_arrival, Approach, PhantomVehicle, RoadUser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    #[default]
    None,
    End,
    Start,
}

impl Mark {
    pub fn value(self) -> f64 {
        match self {
            Mark::None => 0.0,
            Mark::End => 0.5,
            Mark::Start => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub tto: f64,
    pub ttv: f64,
    pub mark: Mark,
    pub priority: bool,
}

impl Default for Cell {
    fn default() -> Self {
        Cell { tto: 1.0, ttv: 1.0, mark: Mark::None, priority: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Leader,
    ConflictZone,
    Crosswalk,
}

/// Stable identity of a hazard across frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HazardKey {
    Leader,
    Vehicle { movement: MovementId, other: u32 },
    Phantom { movement: MovementId, lane: LaneId },
    Crosswalk(CrosswalkId),
}

/// A point on the ego route where another road user crosses or blocks it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub key: HazardKey,
    pub kind: HazardKind,
    /// Route distance from the ego front bumper, m. For a leader this
    /// includes the leader's own stopping distance.
    pub distance: f64,
    /// The other road user has right of way.
    pub priority: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IerObservation {
    pub cells: Vec<Cell>,
    /// Ego speed over the upper reference speed, clamped to [0, 2].
    pub ego_speed_norm: f64,
    /// Raw ego speed, m/s.
    pub ego_speed: f64,
    pub hazards: Vec<Hazard>,
    pub phantoms: Vec<PhantomVehicle>,
    /// Route distance to the next intersection not yet entered, if within the look-ahead.
    pub next_intersection: Option<(IntersectionId, f64)>,
}

impl IerObservation {
    /// Channel-major flat vector: tto, ttv, mark, priority per cell, then ego speed.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.cells.len() + 1);
        out.extend(self.cells.iter().map(|c| c.tto));
        out.extend(self.cells.iter().map(|c| c.ttv));
        out.extend(self.cells.iter().map(|c| c.mark.value()));
        out.extend(self.cells.iter().map(|c| if c.priority { 1.0 } else { 0.0 }));
        out.push(self.ego_speed_norm);
        out
    }
}

struct Grid {
    s0: f64,
    cell: f64,
    tto: Vec<f64>,
    ttv: Vec<f64>,
}

impl Grid {
    fn cells(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let n = self.tto.len();
        let lo = ((a - self.s0) / self.cell).floor().max(0.0) as usize;
        let hi = (((b - self.s0) / self.cell).ceil().max(0.0) as usize).min(n);
        lo.min(n)..hi
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        (self.s0 + k as f64 * self.cell, self.s0 + (k + 1) as f64 * self.cell)
    }

    fn put(&mut self, k: usize, tto: f64, ttv: f64) {
        self.tto[k] = self.tto[k].min(tto);
        self.ttv[k] = self.ttv[k].min(ttv);
    }
}

fn div(d: f64, v: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if v <= 0.0 {
        f64::INFINITY
    } else {
        d / v
    }
}

/// Encodes the agent's route ahead. Requires an up-to-date world index.
pub fn encode(world: &WorldState) -> IerObservation {
    let net = &*world.network;
    let cfg = &world.config.ier;
    let ego = world.agent();
    let s_e = ego.s;
    let n = cfg.n_cells();
    let horizon = s_e + cfg.lookahead;
    let mut g = Grid { s0: s_e, cell: cfg.cell_length, tto: vec![f64::INFINITY; n], ttv: vec![f64::INFINITY; n] };
    let mut hazards = Vec::new();
    let mut marks = vec![Mark::None; n];
    let mut prio = vec![false; n];
    let mut next_intersection = None;

    let k0 = ego.path.piece_index(s_e);
    let pieces = &ego.path.pieces;
    let ahead = || pieces[k0..].iter().enumerate().map(move |(j, p)| (k0 + j, p)).take_while(move |(_, p)| p.start < horizon);

    // vehicles travelling along the ego route
    let mut seen = vec![false; world.vehicles.len()];
    seen[0] = true;
    for (ki, p) in ahead() {
        for o in &world.index.occupancy[net.segment_index(p.seg)] {
            if seen[o.vehicle] {
                continue;
            }
            let (rear, front) = (p.start + o.rear, p.start + o.front);
            if front <= s_e {
                continue;
            }
            seen[o.vehicle] = true;
            let occ = &world.vehicles[o.vehicle];
            let cover_end = shared_route_end(world, ki, o.vehicle, p.seg);
            for k in g.cells(rear, cover_end.min(horizon)) {
                let (c0, c1) = g.bounds(k);
                let (tto, ttv) = if c0 < front { (0.0, div(c1 - rear, occ.v)) } else { (div(c0 - front, occ.v), div(c1 - rear, occ.v)) };
                if tto.is_finite() || c0 < front {
                    g.put(k, tto, ttv);
                }
            }
        }
    }
    if let Some((li, gap)) = world.index.leader(world, 0, cfg.lookahead) {
        let vl = world.vehicles[li].v;
        hazards.push(Hazard {
            key: HazardKey::Leader,
            kind: HazardKind::Leader,
            distance: gap + vl * vl / (2.0 * MAX_DECEL),
            priority: true,
        });
    }

    let mask = visible_region(world);
    let phantoms = inject_phantoms(&mask, cfg);

    for (_, p) in ahead() {
        match p.seg {
            Segment::Movement(m) => {
                let Some(ego_ap) = Approach::of_movement(net, m) else { continue };
                let i = ego_ap.intersection;
                let entered = p.start < s_e;
                if !entered && next_intersection.is_none() {
                    next_intersection = Some((i, p.start - s_e));
                }
                let mut flag = false;
                for e in world.index.approaches_at(i) {
                    if e.vehicle == 0 {
                        continue;
                    }
                    let Some(c) = net.conflict(m, e.movement) else { continue };
                    let o = &world.vehicles[e.vehicle];
                    if (!e.committed && e.d_c > cfg.monitoring_range) || e.pos - o.length > c.other_span.1 {
                        continue;
                    }
                    let (z0, z1) = (p.start + c.span.0, p.start + c.span.1);
                    if z1 <= s_e {
                        continue;
                    }
                    let d_in = c.other_span.0 - e.pos;
                    let d_out = c.other_span.1 + o.length - e.pos;
                    let tto = div(d_in, o.v);
                    let ttv = div(d_out, o.v);
                    for k in g.cells(z0, z1) {
                        g.put(k, tto, ttv);
                    }
                    let inside = e.committed && e.pos > 0.0;
                    if inside || is_incoming(e.d_c, o.v, cfg) {
                        let committed = inside || o.v * o.v / (2.0 * MAX_DECEL) + o.v * world.dt() + 1.0 >= d_in;
                        let pr = committed
                            || Approach::of_movement(net, e.movement)
                                .is_some_and(|oa| has_priority_other(&ego_ap, &RoadUser::Vehicle(oa)).unwrap_or(false));
                        flag |= pr;
                        hazards.push(Hazard {
                            key: HazardKey::Vehicle { movement: m, other: o.id },
                            kind: HazardKind::ConflictZone,
                            distance: z0 - s_e,
                            priority: pr,
                        });
                    }
                }
                if !entered {
                    for ph in phantoms.iter().filter(|ph| ph.intersection == i) {
                        for om in net.movements_from(ph.lane) {
                            let Some(c) = net.conflict(m, om.id) else { continue };
                            let (z0, z1) = (p.start + c.span.0, p.start + c.span.1);
                            let len = world.config.traffic.vehicle_length;
                            let tto = phantom_arrival(ph.offset + c.other_span.0, ph.accel);
                            let ttv = phantom_arrival(ph.offset + c.other_span.1 + len, ph.accel);
                            for k in g.cells(z0, z1) {
                                g.put(k, tto, ttv);
                            }
                            if ph.offset <= cfg.monitoring_range && phantom_arrival(ph.offset, ph.accel) <= cfg.arrival_horizon {
                                let oa = Approach::of_movement(net, om.id).expect("conflicting movement is at an intersection");
                                let pr = has_priority_other(&ego_ap, &RoadUser::Vehicle(oa)).unwrap_or(false);
                                flag |= pr;
                                hazards.push(Hazard {
                                    key: HazardKey::Phantom { movement: m, lane: ph.lane },
                                    kind: HazardKind::ConflictZone,
                                    distance: z0 - s_e,
                                    priority: pr,
                                });
                            }
                        }
                    }
                    for &cw in &net.intersection(i).crosswalks {
                        if route_blocked(world, k0, cw) {
                            flag = true;
                        }
                    }
                }
                let cells = g.cells(p.start, p.end());
                if !entered && !cells.is_empty() {
                    marks[cells.start] = Mark::Start;
                }
                if p.end() < horizon && !cells.is_empty() && marks[cells.end - 1] == Mark::None {
                    marks[cells.end - 1] = Mark::End;
                }
                if flag && !entered {
                    for k in cells {
                        prio[k] = true;
                    }
                }
            }
            Segment::Lane(l) => {
                for span in &net.lane(l).crosswalks {
                    let cw = span.crosswalk;
                    let (z0, z1) = (p.start + span.start, p.start + span.end);
                    if z1 <= s_e {
                        continue;
                    }
                    let Some(remaining) = world.index.crosswalk_blocks(world, cw, l) else { continue };
                    for k in g.cells(z0, z1) {
                        g.put(k, 0.0, remaining);
                    }
                    hazards.push(Hazard { key: HazardKey::Crosswalk(cw), kind: HazardKind::Crosswalk, distance: z0 - s_e, priority: true });
                }
            }
        }
    }

    let cells = (0..n)
        .map(|k| Cell { tto: cfg.normalize(g.tto[k]), ttv: cfg.normalize(g.ttv[k]), mark: marks[k], priority: prio[k] })
        .collect();
    let v_upper = world.config.reward.v_upper;
    IerObservation {
        cells,
        ego_speed_norm: (ego.v / v_upper).clamp(0.0, 2.0),
        ego_speed: ego.v,
        hazards,
        phantoms,
        next_intersection,
    }
}

/// Whether the ego route ahead (from piece `k0`) crosses crosswalk `cw`
/// on a lane a pedestrian still has to pass.
fn route_blocked(world: &WorldState, k0: usize, cw: CrosswalkId) -> bool {
    let net = &*world.network;
    let ego = world.agent();
    ego.path.pieces[k0..].iter().take(4).any(|p| match p.seg {
        Segment::Lane(l) => net.lane(l).crosswalks.iter().any(|c| {
            c.crosswalk == cw && p.start + c.end > ego.s && world.index.crosswalk_blocks(world, cw, l).is_some()
        }),
        Segment::Movement(_) => false,
    })
}

/// Ego route coordinate up to which vehicle `vi`, found on ego piece `ki`,
/// follows the same segments as the ego.
fn shared_route_end(world: &WorldState, ki: usize, vi: usize, seg: Segment) -> f64 {
    let ego = &world.agent().path.pieces;
    let other = &world.vehicles[vi].path;
    let from = other.piece_index(world.vehicles[vi].rear());
    let Some(j0) = other.pieces[from..].iter().position(|p| p.seg == seg).map(|j| from + j) else {
        return ego[ki].end();
    };
    let mut end = ego[ki].end();
    let mut j = 1;
    while ki + j < ego.len() && j0 + j < other.pieces.len() && ego[ki + j].seg == other.pieces[j0 + j].seg {
        end = ego[ki + j].end();
        j += 1;
    }
    end
}
