//! Generates a random grid city and the single-crossing training map,
//! validates both, and round-trips one through a JSON file.
//!
//!     cargo run --example generate_map -- 42

use anyhow::{ensure, Result};

use ier_sim::road::{generate_map, load_map, minimal_map_with_buildings, save_map, validate, MapGenParams, RoadNetwork};

fn describe(name: &str, net: &RoadNetwork) {
    let degrees = net.intersections.iter().fold([0; 5], |mut d, i| {
        d[i.degree().min(4)] += 1;
        d
    });
    let conflicts: usize = net.movements.iter().map(|m| m.conflicts.len()).sum::<usize>() / 2;
    let lane_km: f64 = net.lanes.iter().map(|l| l.length()).sum::<f64>() / 1000.0;
    println!(
        "{name}: {} lanes ({lane_km:.1} km), {} intersections (T {} / cross {}), {} movements, {conflicts} conflict pairs, {} crosswalks, {} buildings",
        net.lanes.len(),
        net.intersections.len(),
        degrees[3],
        degrees[4],
        net.movements.len(),
        net.crosswalks.len(),
        net.buildings.len(),
    );
}

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);

    let city = generate_map(seed, &MapGenParams::default())?;
    let report = validate(&city);
    ensure!(report.is_valid(), "seed {seed}: {:?}", report.errors);
    describe(&format!("grid seed {seed}"), &city);

    // denser blocks hide more of the cross streets
    for density in [0.0, 0.5, 1.0] {
        describe(&format!("minimal density {density}"), &minimal_map_with_buildings(seed, density));
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("city.json");
    save_map(&city, &path)?;
    let back = load_map(&path)?;
    ensure!(back == city, "map changed on the way through {}", path.display());
    println!("round trip through {} bytes of JSON: identical", std::fs::metadata(&path)?.len());
    Ok(())
}
