//! Trained estimator bundles on disk: a directory with `stage1.json`,
//! `stage2.json` (checkpoint format), `scaler.json`, and `config.json`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::Context;
use elastiq_core::data::Scaler;
use elastiq_core::estimator::{EstimatorConfig, SiameseBundle};

use crate::checkpoint::{load_params, save_params};

pub const STAGE1_FILE: &str = "stage1.json";
pub const STAGE2_FILE: &str = "stage2.json";
pub const SCALER_FILE: &str = "scaler.json";
pub const CONFIG_FILE: &str = "config.json";

pub fn save_bundle(bundle: &SiameseBundle, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_params(&bundle.params_p, &dir.join(STAGE1_FILE))?;
    save_params(&bundle.params_e, &dir.join(STAGE2_FILE))?;
    let scaler = File::create(dir.join(SCALER_FILE))
        .with_context(|| format!("creating {}", dir.join(SCALER_FILE).display()))?;
    serde_json::to_writer_pretty(BufWriter::new(scaler), &bundle.scaler)?;
    let config = File::create(dir.join(CONFIG_FILE))
        .with_context(|| format!("creating {}", dir.join(CONFIG_FILE).display()))?;
    serde_json::to_writer_pretty(BufWriter::new(config), &bundle.config)?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> anyhow::Result<SiameseBundle> {
    let params_p = load_params(&dir.join(STAGE1_FILE))?;
    let params_e = load_params(&dir.join(STAGE2_FILE))?;
    let scaler_file = File::open(dir.join(SCALER_FILE))
        .with_context(|| format!("opening {}", dir.join(SCALER_FILE).display()))?;
    let scaler: Scaler = serde_json::from_reader(BufReader::new(scaler_file))
        .with_context(|| "parsing scaler.json")?;
    let config_file = File::open(dir.join(CONFIG_FILE))
        .with_context(|| format!("opening {}", dir.join(CONFIG_FILE).display()))?;
    let config: EstimatorConfig = serde_json::from_reader(BufReader::new(config_file))
        .with_context(|| "parsing config.json")?;
    if params_e.cell != params_p.cell {
        anyhow::bail!("bundle invariant violated: stage-2 cell differs from stage-1 cell");
    }
    Ok(SiameseBundle {
        params_p,
        params_e,
        scaler,
        config,
    })
}
