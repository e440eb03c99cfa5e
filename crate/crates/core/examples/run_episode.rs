//! Drives one episode with a built-in policy and prints a once-per-second
//! trace. Optionally writes the episode log.
//!
//!     cargo run --release --example run_episode -- ier-idm 3 /tmp/ep.jsonl

use anyhow::Result;

use ier_sim::agents::{PolicyKind, ACTIONS};
use ier_sim::config::SimConfig;
use ier_sim::env::{traffic_seed_for, Env};
use ier_sim::harness::run_episode;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: PolicyKind = args.next().as_deref().unwrap_or("ier-idm").parse()?;
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let log_path = args.next();

    let cfg = SimConfig::default();
    let fps = cfg.fps as usize;
    let mut env = Env::new(cfg)?;
    let log = run_episode(&mut env, kind, seed, traffic_seed_for(seed))?;

    println!("{kind} on map {seed}, shielded = {}", log.header.shielded);
    println!("{:>5} {:>8} {:>7} {:>7} {:>7} {:>9}", "t [s]", "s [m]", "v km/h", "action", "shield", "reward");
    for f in log.frames.iter().step_by(fps) {
        println!(
            "{:>5} {:>8.1} {:>7.1} {:>7} {:>7} {:>9.4}",
            f.frame / fps as u64,
            f.agent_s,
            f.agent_v * 3.6,
            ACTIONS[f.action],
            if f.shield_triggered { "brake" } else { "" },
            f.reward.total
        );
    }
    let o = &log.outcome;
    println!(
        "{:?} after {} frames: collision = {}, at fault = {}, near misses = {}, shield frames = {}, return = {:.3}",
        o.done_reason, o.frames, o.collision, o.agent_at_fault, o.near_collision_frames, o.shield_interventions, o.total_reward
    );
    if let Some(c) = log.frames.last().and_then(|f| f.events.collision.as_ref()) {
        println!("collision: {c:?}");
    }
    if let Some(p) = log_path {
        log.save(&p)?;
        println!("log written to {p}");
    }
    Ok(())
}
