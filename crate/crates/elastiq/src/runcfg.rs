//! Run configuration files for the CLI subcommands.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use elastiq_core::baselines::{KfaConfig, LlrConfig, Snn2Config};
use elastiq_core::data::SplitSpec;
use elastiq_core::estimator::EstimatorConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "smlstm")]
    SmLstm,
    #[serde(rename = "2snn")]
    Snn2,
    #[serde(rename = "llr")]
    Llr,
    #[serde(rename = "kfa")]
    Kfa,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SmLstm => "smlstm",
            Method::Snn2 => "2snn",
            Method::Llr => "llr",
            Method::Kfa => "kfa",
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::SmLstm, Method::Snn2, Method::Llr, Method::Kfa]
}

fn default_split() -> SplitSpec {
    SplitSpec::TestFraction(0.2)
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// All-in-one pipeline configuration. The master seed derives every
/// component seed, so one value pins the whole run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub llr: LlrConfig,
    #[serde(default)]
    pub kfa: KfaConfig,
    #[serde(default)]
    pub snn2: Snn2Config,
}

/// Configuration for the standalone `train` subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainCmdConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
}

/// Configuration for the standalone `estimate` subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateCmdConfig {
    pub dataset: PathBuf,
    pub bundle: PathBuf,
    /// When given, only anchors from the test side are estimated.
    #[serde(default)]
    pub split: Option<SplitSpec>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

/// Configuration for the standalone `evaluate` subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateCmdConfig {
    /// Estimate CSVs produced by `estimate` (one per method).
    pub estimates: Vec<PathBuf>,
    pub oracle: PathBuf,
    /// Dataset used for anchor prices and the spike threshold.
    pub dataset: PathBuf,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let file =
        File::open(path).with_context(|| format!("config file not found: {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
}

/// Splitmix-style mixer for deriving component seeds from the master seed.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
