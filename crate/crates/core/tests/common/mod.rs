#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ier_sim::agents::ACTIONS;
use ier_sim::config::SimConfig;
use ier_sim::geometry::{Isometry, Rect, Vec2};
use ier_sim::ier::{encode, incoming_vehicles, time_to_intersection};
use ier_sim::road::{generate_map, minimal_map_with_buildings, IntersectionId, MapGenParams, RoadNetwork, Segment};
use ier_sim::world::{spawn_traffic, CollisionKind, WorldState};

const GRID_MAPS: u64 = 6;
const MINIMAL_MAPS: u64 = 4;

fn maps() -> &'static Vec<Arc<RoadNetwork>> {
    static MAPS: OnceLock<Vec<Arc<RoadNetwork>>> = OnceLock::new();
    MAPS.get_or_init(|| {
        let mut out = Vec::new();
        for s in 0..GRID_MAPS {
            let p = MapGenParams { building_density: 0.3 + 0.1 * s as f64, ..MapGenParams::default() };
            out.push(Arc::new(generate_map(1000 + s, &p).unwrap()));
        }
        for s in 0..MINIMAL_MAPS {
            out.push(Arc::new(minimal_map_with_buildings(s, 0.5 + 0.15 * s as f64)));
        }
        out
    })
}

pub fn grid_config() -> Arc<SimConfig> {
    static CFG: OnceLock<Arc<SimConfig>> = OnceLock::new();
    CFG.get_or_init(|| Arc::new(SimConfig::default())).clone()
}

pub fn minimal_config() -> Arc<SimConfig> {
    static CFG: OnceLock<Arc<SimConfig>> = OnceLock::new();
    CFG.get_or_init(|| Arc::new(SimConfig::minimal())).clone()
}

/// A world from one of a few fixed maps, advanced a random number of frames
/// with random agent actions. Deterministic in `seed`.
pub fn fuzz_world(seed: u64) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = maps();
    let mi = rng.gen_range(0..maps.len());
    let cfg = if mi < GRID_MAPS as usize { grid_config() } else { minimal_config() };
    let mut w = spawn_traffic(maps[mi].clone(), cfg, rng.gen()).unwrap();
    let frames = rng.gen_range(0..240);
    for _ in 0..frames {
        let a = ACTIONS[rng.gen_range(0..ACTIONS.len())];
        if w.step(a).unwrap().done {
            break;
        }
    }
    w
}

/// Every cell is occupied no later than it is vacated.
pub fn check_tto_le_ttv(w: &WorldState) -> Result<(), String> {
    let obs = encode(w);
    match obs.cells.iter().position(|c| c.tto > c.ttv) {
        Some(k) => Err(format!("cell {k}: tto {} > ttv {}", obs.cells[k].tto, obs.cells[k].ttv)),
        None => Ok(()),
    }
}

/// Moving the whole map and everything on it changes no bit of the observation.
pub fn check_rigid_invariance(w: &WorldState, angle: f64, dx: f64, dy: f64) -> Result<(), String> {
    let base = encode(w);
    let mut moved = w.clone();
    moved.network = Arc::new(w.network.transformed(Isometry::new(angle, Vec2::new(dx, dy))));
    moved.refresh();
    let other = encode(&moved);
    let (a, b) = (base.to_vector(), other.to_vector());
    if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) || base != other {
        return Err("observation changed under a rigid transform".into());
    }
    Ok(())
}

/// Incoming vehicles by direct inspection of every route: inside a movement
/// of the intersection, or heading for it next within the monitoring range
/// and the arrival horizon.
pub fn brute_force_incoming(w: &WorldState, i: IntersectionId) -> Vec<usize> {
    let net = &*w.network;
    let cfg = &w.config.ier;
    let at_i = |seg: Segment| matches!(seg, Segment::Movement(m) if net.movement(m).intersection == Some(i));
    let is_box = |seg: Segment| matches!(seg, Segment::Movement(m) if net.movement(m).intersection.is_some());
    let mut out = Vec::new();
    for (vi, v) in w.vehicles.iter().enumerate() {
        let rear = v.s - v.length;
        let inside = v.path.pieces.iter().any(|p| at_i(p.seg) && p.start <= v.s && p.end() > rear);
        let next = v.path.pieces.iter().find(|p| p.start > v.s && is_box(p.seg));
        let approaching = next.is_some_and(|p| {
            let d = p.start - v.s;
            at_i(p.seg) && d <= cfg.monitoring_range && time_to_intersection(d, v.v).unwrap() <= cfg.arrival_horizon
        });
        if inside || approaching {
            out.push(vi);
        }
    }
    out
}

pub fn check_incoming(w: &WorldState) -> Result<(), String> {
    for i in 0..w.network.intersections.len() {
        let i = IntersectionId(i as u32);
        let (got, want) = (incoming_vehicles(w, i), brute_force_incoming(w, i));
        if got != want {
            return Err(format!("intersection {i:?}: got {got:?}, want {want:?}"));
        }
    }
    Ok(())
}

/// Adds a building near the agent's next intersection; no cell may become later-occupied.
pub fn check_building_pessimism(w: &WorldState, ox: f64, oy: f64, sx: f64, sy: f64) -> Result<(), String> {
    let base = encode(w);
    let net = &*w.network;
    let center = base.next_intersection.map_or(w.agent().front_point(net), |(i, _)| net.intersection(i).center);
    let c = center + Vec2::new(ox, oy);
    let b = Rect::new(c, c + Vec2::new(sx, sy));
    let mut more = w.clone();
    let mut n = (*w.network).clone();
    n.buildings.push(b);
    more.network = Arc::new(n);
    more.refresh();
    let after = encode(&more);
    for (k, (x, y)) in base.cells.iter().zip(&after.cells).enumerate() {
        if y.tto > x.tto {
            return Err(format!("cell {k}: tto rose from {} to {} after adding {b:?}", x.tto, y.tto));
        }
    }
    Ok(())
}

use ier_sim::agents::Action;
use ier_sim::config::{MapConfig, TrafficConfig};
use ier_sim::env::{traffic_seed_for, Env};
use ier_sim::ier::{has_priority_other, Approach, RoadUser};

#[derive(Debug, Default)]
pub struct SafetyRun {
    pub frames: u64,
    pub triggered: u64,
    /// Frames where the ego sat in a conflict zone or crosswalk band at all.
    pub in_zone_frames: u64,
    pub violations: Vec<String>,
    /// At-fault crossing and pedestrian collisions.
    pub at_fault_collisions: u64,
    /// The ego ran into its leader after the braking window was already
    /// missed, so the trigger no longer fired.
    pub rear_ends: u64,
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Conflict zones and crosswalk bands the ego shares with an entity that has right of way.
pub fn priority_violations(w: &WorldState) -> (bool, Vec<String>) {
    let net = &*w.network;
    let ego = w.agent();
    let body = (ego.s - ego.length, ego.s);
    let mut in_zone = false;
    let mut out = Vec::new();
    for p in &ego.path.pieces {
        if p.start >= body.1 || p.end() <= body.0 {
            continue;
        }
        let local = (body.0 - p.start, body.1 - p.start);
        match p.seg {
            Segment::Movement(m) => {
                let Some(ego_ap) = Approach::of_movement(net, m) else { continue };
                for c in &net.movement(m).conflicts {
                    if !overlaps(local, c.span) {
                        continue;
                    }
                    in_zone = true;
                    for e in w.index.approaches_at(ego_ap.intersection) {
                        if e.vehicle == 0 || e.movement != c.other || !e.committed {
                            continue;
                        }
                        let o = &w.vehicles[e.vehicle];
                        if !overlaps((e.pos - o.length, e.pos), c.other_span) {
                            continue;
                        }
                        let oa = Approach::of_movement(net, e.movement).unwrap();
                        if has_priority_other(&ego_ap, &RoadUser::Vehicle(oa)).unwrap() {
                            out.push(format!("frame {}: zone of {:?} shared with vehicle {}", w.frame, m, o.id));
                        }
                    }
                }
            }
            Segment::Lane(l) => {
                let lane = net.lane(l);
                for span in &lane.crosswalks {
                    if !overlaps(local, (span.start, span.end)) {
                        continue;
                    }
                    in_zone = true;
                    let mid = lane.centerline.point_at(0.5 * (span.start + span.end));
                    for q in w.pedestrians.iter().filter(|q| q.crosswalk == span.crosswalk && q.is_crossing()) {
                        if (q.position(net) - mid).norm() <= lane.width / 2.0 {
                            out.push(format!("frame {}: crosswalk {:?} shared with pedestrian {}", w.frame, span.crosswalk, q.id));
                        }
                    }
                }
            }
        }
    }
    (in_zone, out)
}

pub fn safety_config(density: f64) -> SimConfig {
    SimConfig {
        map: MapConfig::Minimal { building_density: density },
        traffic: TrafficConfig { cars: [6, 16], pedestrians: [2, 10], ..TrafficConfig::default() },
        ..SimConfig::minimal()
    }
}

const THROTTLE_FRAMES: u64 = 20 * 24;

/// Occluded single crossing; the ego waits a random time, then floors it
/// with the shield on.
pub fn safety_scenario(seed: u64) -> SafetyRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5AFE);
    let density = rng.gen_range(0.4..=1.0);
    let mut env = Env::new(safety_config(density)).unwrap();
    env.reset(seed, traffic_seed_for(seed), true).unwrap();
    let warmup = rng.gen_range(0..240);
    let mut run = SafetyRun::default();
    for f in 0..(warmup + THROTTLE_FRAMES) {
        if env.is_done() {
            break;
        }
        let a = if f < warmup { Action::EMERGENCY_BRAKE } else { Action::ACCELERATE };
        let out = env.step(a).unwrap();
        let w = env.world().unwrap();
        run.frames += 1;
        run.triggered += out.info.shield.triggered as u64;
        match &out.info.events.collision {
            Some(c) if c.kind == CollisionKind::RearEnd => run.rear_ends += 1,
            Some(c) if c.at_fault => run.at_fault_collisions += 1,
            _ => {}
        }
        let (in_zone, v) = priority_violations(w);
        run.in_zone_frames += in_zone as u64;
        run.violations.extend(v);
    }
    run
}
