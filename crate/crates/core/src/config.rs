//! Simulation configuration, loadable from JSON. Every field has a default so
//! partial files are accepted.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::AgentParams;
use crate::error::{Result, SimError};
use crate::idm::IdmParams;
use crate::ier::IerConfig;
use crate::reward::RewardParams;
use crate::road::MapGenParams;
use crate::shield::ShieldConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapConfig {
    /// Random perturbed grid generated from the episode's map seed.
    Grid(MapGenParams),
    /// The fixed single crossing, optionally with random corner buildings.
    Minimal { building_density: f64 },
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig::Grid(MapGenParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    /// Inclusive range for the number of background cars.
    pub cars: [u32; 2],
    /// Inclusive range for the number of pedestrians.
    pub pedestrians: [u32; 2],
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Background cars give way according to right-of-way rules; disable only for testing.
    pub yielding: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { cars: [30, 120], pedestrians: [30, 120], vehicle_length: 4.5, vehicle_width: 1.8, yielding: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NearCollision {
    /// Footprint distance below which a frame counts as a near collision, m.
    pub gap: f64,
    /// Time-to-collision below which a frame counts as a near collision, s.
    pub ttc: f64,
}

impl Default for NearCollision {
    fn default() -> Self {
        Self { gap: 0.5, ttc: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PedestrianParams {
    pub speed: f64,
    /// A pedestrian only steps out when every approaching vehicle is further than this in time, s.
    pub clear_ttc: f64,
    /// Inclusive range of the pause between crossings, s.
    pub dwell: [f64; 2],
}

impl Default for PedestrianParams {
    fn default() -> Self {
        Self { speed: 1.4, clear_ttc: 3.0, dwell: [2.0, 20.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub fps: f64,
    pub episode_seconds: f64,
    pub map: MapConfig,
    pub traffic: TrafficConfig,
    pub near_collision: NearCollision,
    /// Car-following parameters of background traffic; `v0` is replaced by the lane speed limit.
    pub idm: IdmParams,
    pub pedestrians: PedestrianParams,
    pub ier: IerConfig,
    pub shield: ShieldConfig,
    pub reward: RewardParams,
    pub agents: AgentParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            fps: 24.0,
            episode_seconds: 120.0,
            map: MapConfig::default(),
            traffic: TrafficConfig::default(),
            near_collision: NearCollision::default(),
            idm: IdmParams::default(),
            pedestrians: PedestrianParams::default(),
            ier: IerConfig::default(),
            shield: ShieldConfig::default(),
            reward: RewardParams::default(),
            agents: AgentParams::default(),
        }
    }
}

impl SimConfig {
    /// Training setup on the minimal crossing: fewer participants, no buildings.
    pub fn minimal() -> Self {
        Self {
            map: MapConfig::Minimal { building_density: 0.0 },
            traffic: TrafficConfig { cars: [4, 12], pedestrians: [2, 8], ..TrafficConfig::default() },
            ..Self::default()
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn max_frames(&self) -> u64 {
        (self.episode_seconds * self.fps).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.fps > 0.0) || !(self.episode_seconds > 0.0) {
            return bad("fps and episode_seconds must be positive".into());
        }
        for (name, r) in [("cars", self.traffic.cars), ("pedestrians", self.traffic.pedestrians)] {
            if r[0] > r[1] {
                return bad(format!("{name} range [{}, {}] is empty", r[0], r[1]));
            }
        }
        if self.pedestrians.dwell[0] > self.pedestrians.dwell[1] || self.pedestrians.dwell[0] < 0.0 {
            return bad("pedestrian dwell range is invalid".into());
        }
        self.idm.check()?;
        self.agents.ier_idm.check()?;
        self.ier.check()?;
        self.shield.check()?;
        self.reward.check()?;
        if (self.reward.fps - self.fps).abs() > 0.0 {
            return bad("reward.fps must equal fps".into());
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a JSON object of overrides (merged recursively) on top of this config.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overrides);
        let cfg: SimConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

fn merge(base: &mut serde_json::Value, over: &serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}
