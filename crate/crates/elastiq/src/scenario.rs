//! Scenario file loading (JSON serialization of [`SimScenario`]).

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use elastiq_core::sim::SimScenario;

pub fn load_scenario(path: &Path) -> anyhow::Result<SimScenario> {
    let file = File::open(path)
        .with_context(|| format!("scenario file not found: {}", path.display()))?;
    let scenario: SimScenario = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    if scenario.days == 0 {
        anyhow::bail!("scenario must cover at least one day");
    }
    Ok(scenario)
}

pub fn save_scenario(scenario: &SimScenario, path: &Path) -> anyhow::Result<()> {
    let file = File::create(path)
        .with_context(|| format!("creating scenario {}", path.display()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), scenario)?;
    Ok(())
}
