//! A hand-written policy plugged into the environment loop. It reads only
//! the encoded observation: brake when the first few cells fill up soon,
//! slow down near an intersection with phantoms, otherwise speed up.
//!
//!     cargo run --release --example custom_policy -- 10

use anyhow::Result;

use ier_sim::agents::{Action, Policy, PolicyContext, PolicyKind};
use ier_sim::config::SimConfig;
use ier_sim::env::Env;
use ier_sim::harness::episode_seeds;

struct Cautious {
    look: usize,
}

impl Cautious {
    fn decide(&self, ctx: &PolicyContext) -> Action {
        let obs = ctx.obs;
        let soonest = obs.cells.iter().take(self.look).map(|c| c.tto).fold(f64::INFINITY, f64::min);
        let near_phantom = obs
            .next_intersection
            .is_some_and(|(i, d)| d < 30.0 && obs.phantoms.iter().any(|p| p.intersection == i));
        if soonest < 0.05 {
            Action::EMERGENCY_BRAKE
        } else if soonest < 0.2 || (near_phantom && obs.ego_speed > 4.0) {
            Action::BRAKE
        } else if obs.ego_speed_norm < 0.9 {
            Action::ACCELERATE
        } else {
            Action::HOLD
        }
    }
}

impl Policy for Cautious {
    fn kind(&self) -> PolicyKind {
        // closest built-in; only used for labelling
        PolicyKind::IerIdm
    }

    fn act(&mut self, ctx: &PolicyContext) -> Action {
        self.decide(ctx)
    }
}

fn main() -> Result<()> {
    let episodes: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let mut env = Env::new(SimConfig::default())?;
    let mut policy = Cautious { look: 6 };
    let (mut crashes, mut speed, mut frames) = (0, 0.0, 0u64);
    for i in 0..episodes {
        let (map_seed, traffic_seed) = episode_seeds(0, i);
        env.reset(map_seed, traffic_seed, true)?;
        policy.reset();
        let mut last = None;
        while !env.is_done() {
            let (w, obs) = (env.world().unwrap(), env.observation().unwrap());
            let a = policy.act(&PolicyContext { world: w, obs });
            let out = env.step(a)?;
            speed += out.obs.ego_speed;
            frames += 1;
            crashes += out.info.events.collided() as u32;
            last = out.info.done_reason;
        }
        println!("episode {i}: {last:?}");
    }
    println!("{episodes} episodes, {crashes} collisions, mean speed {:.1} km/h", 3.6 * speed / frames.max(1) as f64);
    Ok(())
}
