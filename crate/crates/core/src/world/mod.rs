//! Traffic world: background cars following IDM with right-of-way yielding,
//! pedestrians on crosswalks, and one externally controlled agent vehicle.
//! All positions are map-local; vehicles move along their route only.

mod collision;
mod index;
mod pedestrian;
mod step;
mod visibility;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::geometry::{OrientedRect, Rect, Vec2};
use crate::road::{sample_route, CrosswalkId, MovementId, Piece, RoadNetwork, RoutePath, Segment, SpawnPoint};

pub use collision::{detect_collisions, Collision, CollisionKind};
pub use index::{ApproachEntry, Occupant, TrafficIndex};
pub use step::{step_world, StepEvents};
pub use visibility::{first_concealed_patch, is_visible, lane_visibility, visible_region, LaneVisibility, VisibilityMask};

/// Side length of the square used as a pedestrian footprint, m.
pub const PEDESTRIAN_SIZE: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub path: RoutePath,
    /// Route coordinate of the front bumper.
    pub s: f64,
    pub v: f64,
    /// Acceleration applied in the last step.
    pub a: f64,
    pub length: f64,
    pub width: f64,
    pub is_agent: bool,
    /// Frame at which the vehicle came to a halt in front of its next intersection.
    pub wait_since: Option<u64>,
    /// Frame at which the front entered the current or most recent intersection movement.
    pub entered_box: Option<(MovementId, u64)>,
}

impl VehicleState {
    pub fn rear(&self) -> f64 {
        self.s - self.length
    }

    /// Route piece holding the front bumper.
    pub fn piece(&self) -> Piece {
        self.path.piece_at(self.s).0
    }

    pub fn segment(&self) -> Segment {
        self.piece().seg
    }

    pub fn point_at(&self, net: &RoadNetwork, s: f64) -> Vec2 {
        let (p, off) = self.path.piece_at(s);
        net.segment_polyline(p.seg).point_at(off)
    }

    pub fn front_point(&self, net: &RoadNetwork) -> Vec2 {
        self.point_at(net, self.s)
    }

    /// Footprint with its axis along the chord from rear to front bumper.
    pub fn footprint(&self, net: &RoadNetwork) -> OrientedRect {
        let f = self.front_point(net);
        let r = self.point_at(net, self.rear());
        let chord = f - r;
        let axis = if chord.norm() > 1e-9 {
            chord.normalized()
        } else {
            let (p, off) = self.path.piece_at(self.s);
            net.segment_polyline(p.seg).direction_at(off)
        };
        OrientedRect { center: (f + r) * 0.5, axis, half_length: self.length * 0.5, half_width: self.width * 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PedPhase {
    /// Standing at a crosswalk end until `until` (world time, s).
    Waiting { until: f64 },
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub id: u32,
    pub crosswalk: CrosswalkId,
    /// Fraction of the crosswalk covered, in [0, 1].
    pub progress: f64,
    /// Walking from `ends.0` to `ends.1` when true.
    pub forward: bool,
    pub speed: f64,
    pub phase: PedPhase,
}

impl PedestrianState {
    pub fn position(&self, net: &RoadNetwork) -> Vec2 {
        let c = net.crosswalk(self.crosswalk);
        let (a, b) = if self.forward { c.ends } else { (c.ends.1, c.ends.0) };
        a + (b - a) * self.progress
    }

    pub fn heading(&self, net: &RoadNetwork) -> Vec2 {
        let c = net.crosswalk(self.crosswalk);
        let d = (c.ends.1 - c.ends.0).normalized();
        if self.forward {
            d
        } else {
            d * -1.0
        }
    }

    pub fn is_crossing(&self) -> bool {
        matches!(self.phase, PedPhase::Crossing)
    }

    /// Remaining time on the crosswalk, zero when not crossing.
    pub fn remaining_time(&self, net: &RoadNetwork) -> f64 {
        if !self.is_crossing() {
            return 0.0;
        }
        (1.0 - self.progress) * net.crosswalk(self.crosswalk).length() / self.speed
    }

    pub fn footprint(&self, net: &RoadNetwork) -> OrientedRect {
        OrientedRect {
            center: self.position(net),
            axis: self.heading(net),
            half_length: PEDESTRIAN_SIZE * 0.5,
            half_width: PEDESTRIAN_SIZE * 0.5,
        }
    }
}

/// Complete, clonable simulation state. Index 0 of `vehicles` is the agent.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub network: Arc<RoadNetwork>,
    pub config: Arc<SimConfig>,
    pub vehicles: Vec<VehicleState>,
    pub pedestrians: Vec<PedestrianState>,
    pub frame: u64,
    pub rng: ChaCha8Rng,
    /// Set once a collision or the time limit has been reported.
    pub done: bool,
    /// Lookup tables for the current state; call [`WorldState::refresh`] after editing vehicles by hand.
    pub index: TrafficIndex,
    /// Per intersection: buildings that can hide its approach lanes.
    pub occluders: Vec<Vec<Rect>>,
}

impl WorldState {
    pub fn time(&self) -> f64 {
        self.frame as f64 / self.config.fps
    }

    pub fn agent(&self) -> &VehicleState {
        &self.vehicles[0]
    }

    pub fn agent_mut(&mut self) -> &mut VehicleState {
        &mut self.vehicles[0]
    }

    pub fn dt(&self) -> f64 {
        self.config.dt()
    }

    /// Rebuilds the lookup tables from the current vehicle and pedestrian state.
    pub fn refresh(&mut self) {
        self.index = TrafficIndex::build(self, index_lookahead(&self.config));
    }

    /// Route length each vehicle is given: enough to drive the whole episode at the speed limit.
    pub fn route_horizon(config: &SimConfig, net: &RoadNetwork) -> f64 {
        let vmax = net.lanes.iter().map(|l| l.speed_limit).fold(0.0, f64::max);
        config.episode_seconds * vmax.max(config.reward.v_upper) * 1.1 + 100.0
    }

    /// Extends routes that are running short.
    pub(crate) fn top_up_routes(&mut self) {
        let horizon = 300.0;
        for v in &mut self.vehicles {
            if v.path.length() - v.s < horizon {
                v.path.extend(&self.network, &mut self.rng, v.s, 2.0 * horizon);
            }
        }
    }
}

/// Places the agent at a random agent spawn and samples car and pedestrian
/// counts uniformly from the configured inclusive ranges. All vehicles start
/// at rest. Fails when the map has too few free spawn points.
pub fn spawn_traffic(network: Arc<RoadNetwork>, config: Arc<SimConfig>, seed: u64) -> Result<WorldState> {
    config.validate()?;
    let net = &*network;
    if net.agent_spawns.is_empty() {
        return Err(SimError::InvalidNetwork("map has no agent spawn points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [c0, c1] = config.traffic.cars;
    let [p0, p1] = config.traffic.pedestrians;
    let n_cars = rng.gen_range(c0..=c1) as usize;
    let n_peds = rng.gen_range(p0..=p1) as usize;
    let horizon = WorldState::route_horizon(&config, net);
    let (len, width) = (config.traffic.vehicle_length, config.traffic.vehicle_width);

    let agent_spawn = net.agent_spawns[rng.gen_range(0..net.agent_spawns.len())];
    let mut vehicles = vec![make_vehicle(net, 0, agent_spawn, true, len, width, &mut rng, horizon)];

    let clearance = len + 4.0;
    let mut free: Vec<SpawnPoint> = net
        .spawn_points
        .iter()
        .copied()
        .filter(|sp| sp.offset >= len && !(sp.lane == agent_spawn.lane && (sp.offset - agent_spawn.offset).abs() < clearance))
        .collect();
    if free.len() < n_cars {
        return Err(SimError::SpawnOverflow { requested: n_cars, available: free.len() });
    }
    free.shuffle(&mut rng);
    for (i, sp) in free.into_iter().take(n_cars).enumerate() {
        vehicles.push(make_vehicle(net, i as u32 + 1, sp, false, len, width, &mut rng, horizon));
    }

    let mut pedestrians = Vec::with_capacity(n_peds);
    if !net.crosswalks.is_empty() {
        let [d0, d1] = config.pedestrians.dwell;
        for i in 0..n_peds {
            let crosswalk = CrosswalkId(rng.gen_range(0..net.crosswalks.len()) as u32);
            let forward = rng.gen_bool(0.5);
            let until = rng.gen_range(0.0..=d1.max(d0));
            pedestrians.push(PedestrianState {
                id: i as u32,
                crosswalk,
                progress: 0.0,
                forward,
                speed: config.pedestrians.speed,
                phase: PedPhase::Waiting { until },
            });
        }
    }

    let occluders = occluders(net, config.ier.monitoring_range);
    let mut w = WorldState { network, config, vehicles, pedestrians, frame: 0, rng, done: false, index: TrafficIndex::default(), occluders };
    w.refresh();
    Ok(w)
}

fn index_lookahead(config: &SimConfig) -> f64 {
    config.ier.lookahead.max(config.ier.monitoring_range) + 2.0 * config.traffic.vehicle_length
}

fn occluders(net: &RoadNetwork, range: f64) -> Vec<Vec<Rect>> {
    net.intersections
        .iter()
        .map(|i| {
            let area = Rect::new(i.center - Vec2::new(range, range), i.center + Vec2::new(range, range)).expanded(10.0);
            net.buildings.iter().copied().filter(|b| b.overlaps(&area)).collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn make_vehicle(
    net: &RoadNetwork,
    id: u32,
    sp: SpawnPoint,
    is_agent: bool,
    length: f64,
    width: f64,
    rng: &mut ChaCha8Rng,
    horizon: f64,
) -> VehicleState {
    let route = sample_route(net, sp, rng, horizon);
    VehicleState {
        id,
        path: RoutePath::new(net, route),
        s: sp.offset,
        v: 0.0,
        a: 0.0,
        length,
        width,
        is_agent,
        wait_since: None,
        entered_box: None,
    }
}
