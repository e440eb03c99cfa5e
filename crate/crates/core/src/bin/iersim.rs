use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ier_sim::agents::PolicyKind;
use ier_sim::config::SimConfig;
use ier_sim::env::{build_network, traffic_seed_for, Env};
use ier_sim::harness::{self, EpisodeLog};
use ier_sim::protocol::Server;
use ier_sim::road::{save_map, validate};

#[derive(Parser)]
#[command(name = "iersim", version, about = "Urban intersection simulator with shielded baseline drivers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a road network and write it as JSON.
    GenerateMap {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// The single-crossing training map instead of a random grid.
        #[arg(long)]
        minimal: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one episode and write its log.
    Run {
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long)]
        map_seed: u64,
        /// Defaults to a value derived from the map seed.
        #[arg(long)]
        traffic_seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Evaluate one policy over several episodes and write a metrics CSV.
    Evaluate {
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write every episode log into this directory.
        #[arg(long)]
        logs: Option<PathBuf>,
    },
    /// Evaluate several policies on the same seeds.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "ttc,ttc-creep,ier-acc,ier-idm")]
        policies: Vec<PolicyKind>,
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Summarize an episode log, or re-simulate it and compare.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Serve reset/step sessions over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::GenerateMap { seed, out, minimal, config } => {
            let mut cfg = load_config(config.as_ref())?;
            if minimal {
                cfg.map = SimConfig::minimal().map;
            }
            let net = build_network(&cfg, seed)?;
            let report = validate(&net);
            save_map(&net, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{} lanes, {} intersections, {} crosswalks, {} buildings -> {}",
                net.lanes.len(),
                net.intersections.len(),
                net.crosswalks.len(),
                net.buildings.len(),
                out.display()
            );
            if !report.is_valid() {
                bail!("generated network failed validation: {:?}", report.errors);
            }
        }
        Cmd::Run { policy, map_seed, traffic_seed, config, log } => {
            let cfg = load_config(config.as_ref())?;
            let mut env = Env::new(cfg)?;
            let ts = traffic_seed.unwrap_or_else(|| traffic_seed_for(map_seed));
            let ep = harness::run_episode(&mut env, policy, map_seed, ts)?;
            let o = &ep.outcome;
            println!(
                "{}: {} frames, {:?}, collision={} at_fault={} shield={} reward={:.3}",
                policy, o.frames, o.done_reason, o.collision, o.agent_at_fault, o.shield_interventions, o.total_reward
            );
            if let Some(p) = log {
                ep.save(&p).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Cmd::Evaluate { policy, episodes, seed, out, config, logs } => {
            let cfg = load_config(config.as_ref())?;
            let ev = harness::evaluate(&cfg, policy, episodes, seed, logs.is_some())?;
            if let Some(dir) = logs {
                std::fs::create_dir_all(&dir)?;
                for (s, l) in ev.stats.iter().zip(&ev.logs) {
                    l.save(dir.join(format!("{}-{}.jsonl", policy, s.seed)))?;
                }
            }
            let rows = [ev.summary];
            print!("{}", harness::format_table(&rows));
            if let Some(p) = out {
                harness::write_metrics_csv(&p, &rows)?;
            }
        }
        Cmd::Compare { policies, episodes, seed, out, config } => {
            let cfg = load_config(config.as_ref())?;
            let rows = harness::compare(&cfg, &policies, episodes, seed)?;
            print!("{}", harness::format_table(&rows));
            if let Some(p) = out {
                harness::write_metrics_csv(&p, &rows)?;
            }
        }
        Cmd::Replay { log, verify } => {
            let ep = EpisodeLog::load(&log).with_context(|| format!("reading {}", log.display()))?;
            let h = &ep.header;
            let o = &ep.outcome;
            println!(
                "{} map_seed={} traffic_seed={} shielded={}: {} frames, {:?}, shield={}",
                h.policy, h.map_seed, h.traffic_seed, h.shielded, o.frames, o.done_reason, o.shield_interventions
            );
            if verify {
                let report = harness::verify(&ep)?;
                match report.first_mismatch {
                    None if report.outcome_matches => println!("replay ok: {} frames identical", report.frames),
                    None => println!("replay mismatch: outcome differs"),
                    Some(f) => println!("replay mismatch at frame {f}"),
                }
                if !report.ok() {
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Cmd::Serve { bind, config } => {
            let cfg = load_config(config.as_ref())?;
            let server = Server::bind(&bind, cfg)?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
