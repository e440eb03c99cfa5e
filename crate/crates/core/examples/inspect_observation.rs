//! Renders the ego-centric observation as text while the ego approaches an
//! occluded crossing: one row per cell, bars for tto and ttv.
//!
//!     cargo run --release --example inspect_observation -- 4

use anyhow::Result;

use ier_sim::agents::Action;
use ier_sim::config::{MapConfig, SimConfig};
use ier_sim::env::{traffic_seed_for, Env};
use ier_sim::ier::{IerObservation, Mark};

fn bar(x: f64, width: usize) -> String {
    let n = (x.clamp(0.0, 1.0) * width as f64).round() as usize;
    format!("{:<width$}", "#".repeat(n))
}

fn show(obs: &IerObservation, cell_length: f64) {
    println!("ego {:.1} km/h, next intersection {:?}", obs.ego_speed * 3.6, obs.next_intersection.map(|(i, d)| (i.0, d)));
    for p in &obs.phantoms {
        println!("  phantom on lane {} at {:.1} m before the box, {:.1} m/s", p.lane.0, p.offset, p.velocity);
    }
    for h in &obs.hazards {
        println!("  hazard {:?} at {:.1} m, other has priority: {}", h.kind, h.distance, h.priority);
    }
    println!("{:>6}  {:<20}  {:<20}  mark   prio", "d [m]", "tto", "ttv");
    for (k, c) in obs.cells.iter().enumerate().step_by(2) {
        let mark = match c.mark {
            Mark::Start => "start",
            Mark::End => "end",
            Mark::None => "",
        };
        println!("{:>6.0}  {}  {}  {:<5}  {}", k as f64 * cell_length, bar(c.tto, 20), bar(c.ttv, 20), mark, if c.priority { "*" } else { "" });
    }
}

fn main() -> Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let cfg = SimConfig { map: MapConfig::Minimal { building_density: 0.9 }, ..SimConfig::minimal() };
    let cell_length = cfg.ier.cell_length;
    let mut env = Env::new(cfg)?;
    env.reset(seed, traffic_seed_for(seed), true)?;
    show(env.observation().unwrap(), cell_length);

    // drive until the intersection is close, then look again
    while !env.is_done() {
        let out = env.step(Action::ACCELERATE)?;
        if out.obs.next_intersection.is_some_and(|(_, d)| d < 25.0) {
            println!("\nframe {}, shield triggered: {}", out.info.frame, out.info.shield.triggered);
            show(&out.obs, cell_length);
            break;
        }
    }
    Ok(())
}
