//! Batch evaluation: run episodes for a policy, aggregate metrics, write CSV,
//! and replay logs.

mod log;

pub use log::{EpisodeLog, FrameRecord, LogHeader, Outcome, LOG_SCHEMA};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{make_policy, Action, PolicyContext, PolicyKind};
use crate::config::SimConfig;
use crate::env::{state_digest, traffic_seed_for, DoneReason, Env};
use crate::error::{Result, SimError};

/// Per-episode numbers that the summary is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub seed: u64,
    pub frames: u64,
    pub sum_speed: f64,
    pub sum_pos_accel: f64,
    pub collision: bool,
    pub agent_at_fault: bool,
    pub shield_interventions: u64,
}

impl EpisodeStats {
    pub fn from_log(seed: u64, log: &EpisodeLog) -> EpisodeStats {
        EpisodeStats {
            seed,
            frames: log.frames.len() as u64,
            sum_speed: log.frames.iter().map(|f| f.agent_v).sum(),
            sum_pos_accel: log.frames.iter().map(|f| f.agent_a.max(0.0)).sum(),
            collision: log.outcome.collision,
            agent_at_fault: log.outcome.agent_at_fault,
            shield_interventions: log.outcome.shield_interventions,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub policy: String,
    pub episodes: u64,
    pub avg_velocity_kmh: f64,
    /// Collisions per 100 episodes divided by average speed in km/h.
    pub collision_rate: f64,
    /// Mean positive acceleration over mean speed; empty when the agent never moved.
    pub energy_eff_rate: Option<f64>,
    pub collisions: u64,
    pub agent_at_fault: u64,
    pub shield_interventions_per_episode: f64,
}

impl MetricsSummary {
    /// Aggregates episode stats; the result does not depend on their order.
    pub fn from_stats(policy: &str, stats: &[EpisodeStats]) -> MetricsSummary {
        let mut sorted: Vec<&EpisodeStats> = stats.iter().collect();
        sorted.sort_by_key(|s| s.seed);
        let episodes = sorted.len() as u64;
        let frames: u64 = sorted.iter().map(|s| s.frames).sum();
        let sum_v: f64 = sorted.iter().map(|s| s.sum_speed).sum();
        let sum_a: f64 = sorted.iter().map(|s| s.sum_pos_accel).sum();
        let collisions = sorted.iter().filter(|s| s.collision).count() as u64;
        let at_fault = sorted.iter().filter(|s| s.agent_at_fault).count() as u64;
        let interventions: u64 = sorted.iter().map(|s| s.shield_interventions).sum();

        let mean_v = if frames > 0 { sum_v / frames as f64 } else { 0.0 };
        let mean_a = if frames > 0 { sum_a / frames as f64 } else { 0.0 };
        let avg_kmh = mean_v * 3.6;
        let per_100 = if episodes > 0 { collisions as f64 * 100.0 / episodes as f64 } else { 0.0 };
        let collision_rate = if collisions == 0 {
            0.0
        } else if avg_kmh > 0.0 {
            per_100 / avg_kmh
        } else {
            f64::INFINITY
        };
        MetricsSummary {
            policy: policy.to_string(),
            episodes,
            avg_velocity_kmh: avg_kmh,
            collision_rate,
            energy_eff_rate: (mean_v > 0.0).then(|| mean_a / mean_v),
            collisions,
            agent_at_fault: at_fault,
            shield_interventions_per_episode: if episodes > 0 { interventions as f64 / episodes as f64 } else { 0.0 },
        }
    }
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| SimError::Log(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| SimError::Log(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SimError::Log(e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| SimError::Log(e.to_string()))).collect()
}

/// Plain-text comparison table.
pub fn format_table(rows: &[MetricsSummary]) -> String {
    let mut out = format!(
        "{:<10} {:>8} {:>10} {:>10} {:>10} {:>6} {:>6} {:>8}\n",
        "policy", "episodes", "v [km/h]", "coll.rate", "energy", "coll", "fault", "shield/ep"
    );
    for r in rows {
        let energy = r.energy_eff_rate.map_or("-".to_string(), |e| format!("{e:.4}"));
        out += &format!(
            "{:<10} {:>8} {:>10.2} {:>10.4} {:>10} {:>6} {:>6} {:>8.2}\n",
            r.policy, r.episodes, r.avg_velocity_kmh, r.collision_rate, energy, r.collisions, r.agent_at_fault,
            r.shield_interventions_per_episode
        );
    }
    out
}

/// Where each frame's action comes from.
enum Driver<'a> {
    Policy(Box<dyn crate::agents::Policy>),
    Scripted(&'a [usize]),
}

fn drive(env: &mut Env, map_seed: u64, traffic_seed: u64, label: &str, shielded: bool, mut driver: Driver) -> Result<EpisodeLog> {
    env.reset(map_seed, traffic_seed, shielded)?;
    let config = env.config().clone();
    let header = LogHeader {
        schema: LOG_SCHEMA,
        map_seed,
        traffic_seed,
        policy: label.to_string(),
        shielded,
        config_digest: config.digest(),
        config,
    };
    if let Driver::Policy(p) = &mut driver {
        p.reset();
    }
    let mut frames = Vec::new();
    let mut total_reward = 0.0;
    let mut interventions = 0;
    let mut near = 0;
    let mut last = None;
    while !env.is_done() {
        let action = match &mut driver {
            Driver::Policy(p) => {
                let ctx = PolicyContext { world: env.world().expect("active"), obs: env.observation().expect("active") };
                p.act(&ctx)
            }
            Driver::Scripted(actions) => match actions.get(frames.len()) {
                Some(&a) => Action::from_index(a as i64)?,
                None => return Err(SimError::Log(format!("log ends after {} actions but the episode continues", actions.len()))),
            },
        };
        let out = env.step(action)?;
        let w = env.world().expect("active");
        let ego = w.agent();
        total_reward += out.reward;
        interventions += out.info.shield.triggered as u64;
        near += out.info.events.near_collision as u64;
        frames.push(FrameRecord {
            frame: out.info.frame,
            agent_s: ego.s,
            agent_v: ego.v,
            agent_a: ego.a,
            action: out.info.action,
            proposed_accel: out.info.shield.proposed_accel,
            shield_triggered: out.info.shield.triggered,
            d_intersection: out.info.shield.d_intersection,
            d_braking: out.info.shield.d_braking,
            reward: out.info.reward,
            events: out.info.events.clone(),
            digest: state_digest(w),
        });
        last = Some(out.info);
    }
    let last = last.ok_or_else(|| SimError::InvalidConfig("episode ended before the first frame".into()))?;
    let outcome = Outcome {
        done_reason: last.done_reason.unwrap_or(DoneReason::Timeout),
        frames: frames.len() as u64,
        collision: last.events.collided(),
        agent_at_fault: last.events.agent_at_fault(),
        near_collision_frames: near,
        shield_interventions: interventions,
        total_reward,
    };
    Ok(EpisodeLog { header, frames, outcome })
}

/// Runs one episode of a built-in policy, shielded according to the policy kind.
pub fn run_episode(env: &mut Env, kind: PolicyKind, map_seed: u64, traffic_seed: u64) -> Result<EpisodeLog> {
    let policy = make_policy(kind, &env.config().agents, env.config().reward.v_upper)?;
    drive(env, map_seed, traffic_seed, kind.name(), kind.shielded(), Driver::Policy(policy))
}

/// Re-executes the logged actions from the header's seeds and configuration.
pub fn replay_actions(log: &EpisodeLog) -> Result<EpisodeLog> {
    let mut env = Env::new(log.header.config.clone())?;
    let actions: Vec<usize> = log.frames.iter().map(|f| f.action).collect();
    let h = &log.header;
    drive(&mut env, h.map_seed, h.traffic_seed, &h.policy, h.shielded, Driver::Scripted(&actions))
}

/// Re-runs the header's policy from scratch.
pub fn rerun(header: &LogHeader) -> Result<EpisodeLog> {
    let kind: PolicyKind = header.policy.parse()?;
    let mut env = Env::new(header.config.clone())?;
    let policy = make_policy(kind, &header.config.agents, header.config.reward.v_upper)?;
    drive(&mut env, header.map_seed, header.traffic_seed, &header.policy, header.shielded, Driver::Policy(policy))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub frames: usize,
    pub first_mismatch: Option<u64>,
    pub outcome_matches: bool,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.first_mismatch.is_none() && self.outcome_matches
    }
}

/// Replays the log's actions and compares every frame record and the outcome.
pub fn verify(log: &EpisodeLog) -> Result<ReplayReport> {
    if log.header.config_digest != log.header.config.digest() {
        return Err(SimError::Log("config digest does not match the embedded configuration".into()));
    }
    let again = replay_actions(log)?;
    let first_mismatch = log
        .frames
        .iter()
        .zip(&again.frames)
        .find(|(a, b)| a != b)
        .map(|(a, _)| a.frame)
        .or_else(|| (log.frames.len() != again.frames.len()).then(|| log.frames.len().min(again.frames.len()) as u64));
    Ok(ReplayReport { frames: again.frames.len(), first_mismatch, outcome_matches: again.outcome == log.outcome })
}

/// Episode `i` of an evaluation uses seed `base_seed + i` for the map and a derived traffic seed.
pub fn episode_seeds(base_seed: u64, i: u64) -> (u64, u64) {
    let s = base_seed.wrapping_add(i);
    (s, traffic_seed_for(s))
}

pub struct Evaluation {
    pub summary: MetricsSummary,
    pub stats: Vec<EpisodeStats>,
    /// Only filled when logs were requested.
    pub logs: Vec<EpisodeLog>,
}

/// Runs `episodes` episodes of one policy.
pub fn evaluate(config: &SimConfig, kind: PolicyKind, episodes: u64, base_seed: u64, keep_logs: bool) -> Result<Evaluation> {
    let mut env = Env::new(config.clone())?;
    let mut stats = Vec::with_capacity(episodes as usize);
    let mut logs = Vec::new();
    for i in 0..episodes {
        let (ms, ts) = episode_seeds(base_seed, i);
        let log = run_episode(&mut env, kind, ms, ts)?;
        stats.push(EpisodeStats::from_log(ms, &log));
        if keep_logs {
            logs.push(log);
        }
    }
    Ok(Evaluation { summary: MetricsSummary::from_stats(kind.name(), &stats), stats, logs })
}

/// Same seeds for every policy.
pub fn compare(config: &SimConfig, kinds: &[PolicyKind], episodes: u64, base_seed: u64) -> Result<Vec<MetricsSummary>> {
    kinds.iter().map(|&k| evaluate(config, k, episodes, base_seed, false).map(|e| e.summary)).collect()
}
