//! Evaluates every baseline on the same seeds, prints the comparison
//! table and writes it as CSV.
//!
//!     cargo run --release --example compare_policies -- 20 metrics.csv

use anyhow::Result;

use ier_sim::agents::PolicyKind;
use ier_sim::config::SimConfig;
use ier_sim::harness::{evaluate, format_table, write_metrics_csv};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let out = args.next();

    let cfg = SimConfig::default();
    let mut rows = Vec::new();
    for kind in PolicyKind::BASELINES {
        let t = std::time::Instant::now();
        let ev = evaluate(&cfg, kind, episodes, 0, false)?;
        let crashed: Vec<u64> = ev.stats.iter().filter(|s| s.collision).map(|s| s.seed).collect();
        eprintln!("{kind}: {:.1} s, crashed on seeds {crashed:?}", t.elapsed().as_secs_f64());
        rows.push(ev.summary);
    }
    print!("{}", format_table(&rows));

    let ttc = &rows[0];
    let idm = &rows[3];
    println!(
        "IER-IDM keeps {:.0}% of the TTC speed with {} vs {} collisions",
        100.0 * idm.avg_velocity_kmh / ttc.avg_velocity_kmh,
        idm.collisions,
        ttc.collisions
    );
    if let Some(p) = out {
        write_metrics_csv(&p, &rows)?;
        println!("written to {p}");
    }
    Ok(())
}
