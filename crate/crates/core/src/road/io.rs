use std::fs;
use std::path::Path;

use super::RoadNetwork;
use crate::error::Result;

/// Writes the network as pretty-printed `map.json`.
pub fn save_map(net: &RoadNetwork, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(net)?)?;
    Ok(())
}

pub fn load_map(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    let mut net: RoadNetwork = serde_json::from_str(&fs::read_to_string(path)?)?;
    net.reindex();
    Ok(net)
}
