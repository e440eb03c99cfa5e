//! Saves an episode log, reloads it, replays it frame by frame, then shows
//! how a single edited action is caught.
//!
//!     cargo run --release --example replay_log

use anyhow::{ensure, Result};

use ier_sim::agents::PolicyKind;
use ier_sim::config::SimConfig;
use ier_sim::env::Env;
use ier_sim::harness::{episode_seeds, rerun, run_episode, verify, EpisodeLog};

fn main() -> Result<()> {
    let mut env = Env::new(SimConfig::default())?;
    let (map_seed, traffic_seed) = episode_seeds(0, 5);
    let log = run_episode(&mut env, PolicyKind::TtcCreep, map_seed, traffic_seed)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("episode.jsonl");
    log.save(&path)?;
    let loaded = EpisodeLog::load(&path)?;
    println!(
        "{} records, {} bytes, config digest {}",
        loaded.frames.len() + 2,
        std::fs::metadata(&path)?.len(),
        &loaded.header.config_digest[..16]
    );

    let report = verify(&loaded)?;
    println!("replaying the logged actions: {report:?}");
    ensure!(report.ok());

    // the policy itself is deterministic too
    ensure!(rerun(&loaded.header)?.to_jsonl() == loaded.to_jsonl());
    println!("re-running the policy from the header: byte-identical");

    let mut edited = loaded.clone();
    let k = edited.frames.len() / 3;
    edited.frames[k].action = if edited.frames[k].action == 0 { 5 } else { 0 };
    let report = verify(&edited)?;
    println!("after editing the action of frame {}: {report:?}", edited.frames[k].frame);
    ensure!(!report.ok());
    Ok(())
}
