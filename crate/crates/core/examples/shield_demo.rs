//! The same full-throttle driver on occluded crossings with and without the
//! shield. Unshielded, it eventually hits crossing traffic; shielded, every
//! right-of-way conflict ends in an emergency stop instead.
//!
//!     cargo run --release --example shield_demo -- 50

use anyhow::Result;

use ier_sim::agents::Action;
use ier_sim::config::{MapConfig, SimConfig, TrafficConfig};
use ier_sim::env::{traffic_seed_for, Env};
use ier_sim::world::CollisionKind;

#[derive(Default)]
struct Tally {
    crossing: u32,
    rear_end: u32,
    other: u32,
    brake_frames: u64,
}

fn run(shielded: bool, episodes: u64) -> Result<Tally> {
    let cfg = SimConfig {
        map: MapConfig::Minimal { building_density: 0.8 },
        traffic: TrafficConfig { cars: [8, 16], pedestrians: [4, 10], ..TrafficConfig::default() },
        ..SimConfig::minimal()
    };
    let mut env = Env::new(cfg)?;
    let mut t = Tally::default();
    for seed in 0..episodes {
        env.reset(seed, traffic_seed_for(seed), shielded)?;
        // 20 s of throttle is enough to cross the map
        for _ in 0..480 {
            let out = env.step(Action::ACCELERATE)?;
            t.brake_frames += out.info.shield.triggered as u64;
            match out.info.events.collision {
                Some(c) if c.kind == CollisionKind::RearEnd => t.rear_end += 1,
                Some(c) if matches!(c.kind, CollisionKind::Crossing | CollisionKind::Pedestrian) => t.crossing += 1,
                Some(_) => t.other += 1,
                None => {}
            }
            if out.done {
                break;
            }
        }
    }
    Ok(t)
}

fn main() -> Result<()> {
    let episodes: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(30);
    for shielded in [false, true] {
        let t = run(shielded, episodes)?;
        println!(
            "shield {:<3}: {} crossing/pedestrian crashes, {} rear-ends, {} hit from behind, {} emergency-brake frames",
            if shielded { "on" } else { "off" },
            t.crossing,
            t.rear_end,
            t.other,
            t.brake_frames
        );
    }
    Ok(())
}
