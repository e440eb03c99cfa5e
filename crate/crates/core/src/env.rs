//! Reset/step environment: observe, act, shield, simulate, reward. Both the
//! batch harness and the session server drive episodes through this type.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{Action, PolicyKind};
use crate::config::{MapConfig, SimConfig};
use crate::error::{Result, SimError};
use crate::ier::{encode, IerObservation};
use crate::reward::{compute_reward, RewardBreakdown, RewardInputs};
use crate::road::{generate_map, minimal_map, minimal_map_with_buildings, RoadNetwork, Segment};
use crate::shield::{Shield, ShieldDecision};
use crate::world::{spawn_traffic, StepEvents, WorldState};

/// Stopped vehicles this close to an intersection count as being at it, m.
const AT_INTERSECTION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Collision,
    Timeout,
}

/// Everything that happened in one frame besides the new observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Frame number after the step.
    pub frame: u64,
    pub action: usize,
    pub shield: ShieldDecision,
    pub events: StepEvents,
    pub on_intersection: bool,
    pub d_free: f64,
    pub reward: RewardBreakdown,
    pub done_reason: Option<DoneReason>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: IerObservation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Builds the map an episode runs on.
pub fn build_network(config: &SimConfig, map_seed: u64) -> Result<RoadNetwork> {
    match &config.map {
        MapConfig::Grid(p) => generate_map(map_seed, p),
        MapConfig::Minimal { building_density } if *building_density > 0.0 => {
            Ok(minimal_map_with_buildings(map_seed, *building_density))
        }
        MapConfig::Minimal { .. } => Ok(minimal_map()),
    }
}

/// Traffic seed derived from an episode seed so map and traffic draw from unrelated streams.
pub fn traffic_seed_for(episode_seed: u64) -> u64 {
    let mut z = episode_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Env {
    config: Arc<SimConfig>,
    shielded: bool,
    shield: Shield,
    world: Option<WorldState>,
    obs: Option<IerObservation>,
    map_cache: Option<(u64, Arc<RoadNetwork>)>,
}

impl Env {
    pub fn new(config: SimConfig) -> Result<Env> {
        config.validate()?;
        let shield = Shield::new(config.shield.clone());
        Ok(Env { config: Arc::new(config), shielded: true, shield, world: None, obs: None, map_cache: None })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Replaces the configuration; the current episode, if any, is dropped.
    pub fn reconfigure(&mut self, config: SimConfig) -> Result<()> {
        *self = Env::new(config)?;
        Ok(())
    }

    pub fn network(&mut self, map_seed: u64) -> Result<Arc<RoadNetwork>> {
        if let Some((s, n)) = &self.map_cache {
            if *s == map_seed {
                return Ok(n.clone());
            }
        }
        let n = Arc::new(build_network(&self.config, map_seed)?);
        self.map_cache = Some((map_seed, n.clone()));
        Ok(n)
    }

    /// Starts an episode. With `shielded` false the shield is evaluated and logged but never overrides.
    pub fn reset(&mut self, map_seed: u64, traffic_seed: u64, shielded: bool) -> Result<&IerObservation> {
        let net = self.network(map_seed)?;
        self.reset_on(net, traffic_seed, shielded)
    }

    pub fn reset_on(&mut self, net: Arc<RoadNetwork>, traffic_seed: u64, shielded: bool) -> Result<&IerObservation> {
        let world = spawn_traffic(net, self.config.clone(), traffic_seed)?;
        self.start(world, shielded)
    }

    /// Starts an episode from a prepared world (e.g. a hand-built scenario).
    pub fn start(&mut self, mut world: WorldState, shielded: bool) -> Result<&IerObservation> {
        world.config = self.config.clone();
        world.refresh();
        self.shield.reset();
        self.shielded = shielded;
        self.obs = Some(encode(&world));
        self.world = Some(world);
        Ok(self.obs.as_ref().expect("just set"))
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    pub fn observation(&self) -> Option<&IerObservation> {
        self.obs.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.world.as_ref().map_or(true, |w| w.done)
    }

    /// One frame: shield the action against the current observation, simulate, reward, observe.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let world = self.world.as_mut().ok_or(SimError::NoEpisode)?;
        if world.done {
            return Err(SimError::EpisodeDone(world.frame));
        }
        let obs = self.obs.as_ref().expect("observation exists while an episode is active");
        let proposed = action.accel();
        let shield = if self.shielded { self.shield.decide(obs, proposed) } else { self.shield.monitor(obs, proposed) };
        let events = world.step(shield.final_accel)?;
        let obs = encode(world);

        let cfg = &self.config;
        let d_free = obs.cells.iter().position(|c| c.tto == 0.0).map_or(cfg.ier.lookahead, |k| k as f64 * cfg.ier.cell_length);
        let on_intersection = on_intersection(world);
        let inputs = RewardInputs {
            v: world.agent().v,
            a_agent: proposed,
            a_shield: shield.final_accel,
            on_intersection,
            collision: events.collided(),
            near_collision: events.near_collision,
            d_la: cfg.ier.lookahead,
            d_free,
        };
        let reward = compute_reward(&inputs, &cfg.reward);
        let done_reason = if events.collided() {
            Some(DoneReason::Collision)
        } else if events.timeout {
            Some(DoneReason::Timeout)
        } else {
            None
        };
        let info = StepInfo {
            frame: world.frame,
            action: action.index(),
            shield,
            events: events.clone(),
            on_intersection,
            d_free,
            reward,
            done_reason,
        };
        self.obs = Some(obs.clone());
        Ok(StepOutcome { obs, reward: reward.total, done: events.done, info })
    }
}

/// Agent footprint overlaps an intersection box, or the agent is stopped right in front of one.
pub fn on_intersection(w: &WorldState) -> bool {
    let net = &*w.network;
    let ego = w.agent();
    let fp = w.index.footprints[0];
    let inside = net.intersections.iter().any(|i| {
        let area = i.area();
        area.contains(fp.center) || fp.corners().iter().any(|&c| area.contains(c))
    });
    if inside {
        return true;
    }
    if ego.v < 0.5 {
        if let Some((p, m)) = ego.path.next_movement(ego.s) {
            let at_box = net.movement(m).intersection.is_some() && p.start - ego.s <= AT_INTERSECTION;
            return at_box && !matches!(ego.segment(), Segment::Movement(_));
        }
    }
    false
}

/// Short digest of the full dynamic state, for replay checks.
pub fn state_digest(w: &WorldState) -> String {
    let mut h = Sha256::new();
    h.update(w.frame.to_le_bytes());
    for v in &w.vehicles {
        h.update(v.s.to_bits().to_le_bytes());
        h.update(v.v.to_bits().to_le_bytes());
        h.update(v.a.to_bits().to_le_bytes());
        h.update((v.path.pieces.len() as u64).to_le_bytes());
    }
    for p in &w.pedestrians {
        h.update(p.progress.to_bits().to_le_bytes());
        h.update([p.forward as u8, p.is_crossing() as u8]);
    }
    hex::encode(&h.finalize()[..8])
}

/// Which built-in policies get the shield.
pub fn shielded_by_default(kind: PolicyKind) -> bool {
    kind.shielded()
}
