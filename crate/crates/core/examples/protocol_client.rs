//! Starts a session server on a free local port and talks to it the way an
//! external learner would: one raw JSON line first, then the typed client.
//!
//!     cargo run --release --example protocol_client -- 7

use anyhow::{bail, Result};

use ier_sim::config::SimConfig;
use ier_sim::protocol::{Client, Server};

fn main() -> Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let addr = Server::bind("127.0.0.1:0", SimConfig::minimal())?.spawn()?;
    println!("server on {addr}");
    let mut c = Client::connect(addr)?;

    let r = c.send_line(r#"{"v":1,"cmd":"config","overrides":{"traffic":{"cars":[4,8]}}}"#)?;
    println!("config ok = {}, cars = {:?}", r.ok, r.config.map(|c| c.traffic.cars));
    let r = c.send_line(r#"{"cmd":"step","action_index":3}"#)?;
    println!("step before reset -> {:?}", r.error);

    let r = c.reset(seed)?;
    let obs = r.obs.unwrap_or_default();
    println!("session {:?}, episode {:?}, observation of {} floats", r.session, r.episode, obs.len());

    // always ask for full throttle and let the server-side shield veto it
    let (mut ret, mut vetoed) = (0.0, 0);
    loop {
        let r = c.step(5)?;
        if !r.ok {
            bail!("step failed: {:?}", r.error);
        }
        let info = r.info.unwrap();
        ret += r.reward.unwrap();
        vetoed += info.shield_triggered as u32;
        if r.done == Some(true) {
            println!(
                "{:?} at frame {}: return {ret:.3}, {vetoed} frames overridden, collision = {}",
                info.done_reason, info.frame, info.collision
            );
            break;
        }
    }
    println!("close -> ok = {}", c.send_line(r#"{"cmd":"close"}"#)?.ok);
    Ok(())
}
