//! The end-to-end run: simulate, split, train both stages, estimate with
//! every configured method, compare against the oracle, and emit reports.
//!
//! Every artifact lands under the output directory. On failure a `FAILED`
//! marker file records the stage and error; partial outputs are retained.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use elastiq_core::baselines::{clock_means, kfa_estimate, llr_estimate, snn2_estimate, snn2_fit};
use elastiq_core::data::{
    build_samples, partition_samples, split_index, Sample, Scaler, SeriesDataset,
};
use elastiq_core::estimator::{build_synthetic_set, estimate, fit_bundle};
use elastiq_core::metrics::{breakdown, percentile, ElasticityVector, MetricReport};
use elastiq_core::sim::{oracle_all, simulate_scenario, OracleResult, SimScenario, SimTrace};

use crate::csvio::{write_dataset, write_estimates, write_oracle, write_synthetic};
use crate::report::{emit_report, SeriesBlock};
use crate::runcfg::{derive_seed, Method, RunConfig};
use crate::scenario::load_scenario;
use crate::{bundle, runcfg};

/// Seed salts for the pipeline components.
const SALT_PRICE: u64 = 1;
const SALT_WEATHER: u64 = 2;
const SALT_STAGE1: u64 = 3;
const SALT_STAGE2: u64 = 4;
const SALT_SNN2_STAGE1: u64 = 5;
const SALT_SNN2_STAGE2: u64 = 6;

#[derive(Debug)]
pub struct PipelineArtifacts {
    pub out_dir: PathBuf,
    pub reports: Vec<MetricReport>,
}

/// Applies the master seed to every seeded component.
pub fn apply_master_seed(cfg: &mut RunConfig, scenario: &mut SimScenario) {
    let seed = cfg.seed;
    scenario.price.seed = derive_seed(seed, SALT_PRICE);
    scenario.weather.seed = derive_seed(seed, SALT_WEATHER);
    cfg.estimator.stage1.seed = derive_seed(seed, SALT_STAGE1);
    cfg.estimator.stage2.seed = derive_seed(seed, SALT_STAGE2);
    cfg.snn2.stage1.seed = derive_seed(seed, SALT_SNN2_STAGE1);
    cfg.snn2.stage2.seed = derive_seed(seed, SALT_SNN2_STAGE2);
}

fn stage<T, E: Into<anyhow::Error>>(name: &str, r: Result<T, E>) -> anyhow::Result<T> {
    r.map_err(|e| e.into()).with_context(|| format!("stage {name} failed"))
}

/// Everything the evaluation needs from one simulated, split, and trained
/// scenario run.
pub struct PreparedRun {
    pub trace: SimTrace,
    pub dataset: SeriesDataset,
    pub boundary: usize,
    pub scaler: Scaler,
    pub train_samples: Vec<Sample>,
    pub test_samples: Vec<Sample>,
    pub oracle: Vec<OracleResult>,
    pub truth: Vec<ElasticityVector>,
    pub anchor_prices: Vec<f64>,
    pub spike_threshold: f64,
}

/// Simulates the scenario, splits it, and computes the oracle at the test
/// anchors. Shared by the pipeline and by callers that train variants.
pub fn prepare_run(
    scenario: &SimScenario,
    split: &elastiq_core::data::SplitSpec,
    estimator: &elastiq_core::estimator::EstimatorConfig,
) -> anyhow::Result<PreparedRun> {
    let trace = stage("simulate", simulate_scenario(scenario))?;
    let dataset = stage("simulate", trace.to_dataset())?;
    let boundary = stage("split", split_index(&dataset, split))?;
    let train_ds = stage(
        "split",
        SeriesDataset::new(dataset.records()[..boundary].to_vec()),
    )?;
    let scaler = stage("scale", Scaler::fit(&train_ds))?;
    let samples = stage(
        "windowing",
        build_samples(&dataset, &scaler, estimator.t_in, 9),
    )?;
    let (train_samples, test_samples) = partition_samples(samples, boundary);
    if train_samples.is_empty() || test_samples.is_empty() {
        anyhow::bail!("stage windowing failed: a split side has no samples");
    }
    let anchors: Vec<usize> = test_samples.iter().map(|s| s.anchor).collect();
    let oracle = stage("oracle", oracle_all(&trace, &anchors, estimator.d_lambda))?;
    let truth: Vec<ElasticityVector> = oracle.iter().map(|o| o.to_vector()).collect();
    let anchor_prices: Vec<f64> = test_samples.iter().map(|s| s.anchor_price).collect();
    let train_prices: Vec<f64> = train_ds.prices().collect();
    let spike_threshold = percentile(&train_prices, 0.95);
    Ok(PreparedRun {
        trace,
        dataset,
        boundary,
        scaler,
        train_samples,
        test_samples,
        oracle,
        truth,
        anchor_prices,
        spike_threshold,
    })
}

fn run_inner(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<Vec<MetricReport>> {
    let mut cfg = cfg.clone();
    let mut scenario = stage("load-scenario", load_scenario(&cfg.scenario))?;
    apply_master_seed(&mut cfg, &mut scenario);
    let config_echo = serde_json::to_string(&cfg).expect("serializable config");

    if cfg.methods.is_empty() {
        anyhow::bail!("no methods evaluated");
    }
    let run = prepare_run(&scenario, &cfg.split, &cfg.estimator)?;
    write_dataset(&run.dataset, &out_dir.join("dataset.csv"))?;
    let anchors: Vec<usize> = run.test_samples.iter().map(|s| s.anchor).collect();
    write_oracle(&run.oracle, &out_dir.join("oracle.csv"))?;

    let mut reports = Vec::new();
    let mut all_estimates: Vec<(Method, Vec<ElasticityVector>)> = Vec::new();
    for method in &cfg.methods {
        let estimates = match method {
            Method::SmLstm => {
                let (bundle_trained, _, _) = stage(
                    "train-smlstm",
                    fit_bundle(&run.train_samples, None, &run.scaler, &cfg.estimator),
                )?;
                stage(
                    "train-smlstm",
                    bundle::save_bundle(&bundle_trained, &out_dir.join("bundle")),
                )?;
                let synthetic = stage(
                    "train-smlstm",
                    build_synthetic_set(
                        &run.train_samples,
                        &bundle_trained.params_p,
                        &run.scaler,
                        &cfg.estimator,
                    ),
                )?;
                write_synthetic(&synthetic, &out_dir.join("synthetic.csv"))?;
                let est: Result<Vec<_>, _> = run
                    .test_samples
                    .iter()
                    .map(|s| estimate(s, &bundle_trained))
                    .collect();
                stage("estimate-smlstm", est)?
            }
            Method::Snn2 => {
                let mut snn2_cfg = cfg.snn2.clone();
                snn2_cfg.d_lambda = cfg.estimator.d_lambda;
                snn2_cfg.eta_th = cfg.estimator.eta_th;
                snn2_cfg.alpha = cfg.estimator.alpha;
                let trained = stage(
                    "train-2snn",
                    snn2_fit(&run.train_samples, &run.scaler, &snn2_cfg),
                )?;
                stage("estimate-2snn", snn2_estimate(&run.test_samples, &trained))?
            }
            Method::Llr => {
                let out = stage("estimate-llr", llr_estimate(&run.dataset, &anchors, &cfg.llr))?;
                out.vectors
            }
            Method::Kfa => {
                let train_ds = SeriesDataset::new(
                    run.dataset.records()[..run.boundary].to_vec(),
                )?;
                let means = clock_means(&train_ds);
                stage(
                    "estimate-kfa",
                    kfa_estimate(&run.dataset, &anchors, &means, &cfg.kfa),
                )?
            }
        };
        write_estimates(
            method.name(),
            &estimates,
            &out_dir.join(format!("estimates_{}.csv", method.name())),
        )?;
        let report = stage(
            "evaluate",
            breakdown(
                method.name(),
                &estimates,
                &run.truth,
                &run.anchor_prices,
                run.spike_threshold,
                cfg.seed,
                config_echo.clone(),
            ),
        )?;
        reports.push(report);
        all_estimates.push((*method, estimates));
    }

    let series: Vec<SeriesBlock<'_>> = all_estimates
        .iter()
        .map(|(m, e)| SeriesBlock {
            method: m.name(),
            estimates: e,
        })
        .collect();
    stage("report", emit_report(&reports, &run.truth, &series, out_dir))?;
    Ok(reports)
}

/// Runs the full pipeline; on error a `FAILED` marker with the message is
/// left in the output directory.
pub fn run_pipeline(cfg: &RunConfig) -> anyhow::Result<PipelineArtifacts> {
    let out_dir = resolve_out_dir(&cfg.out_dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    match run_inner(cfg, &out_dir) {
        Ok(reports) => {
            let _ = fs::remove_file(out_dir.join("FAILED"));
            Ok(PipelineArtifacts { out_dir, reports })
        }
        Err(e) => {
            let _ = fs::write(out_dir.join("FAILED"), format!("{e:#}\n"));
            Err(e)
        }
    }
}

/// `ELASTIQ_OUT` overrides the configured output directory.
pub fn resolve_out_dir(configured: &Path) -> PathBuf {
    match std::env::var_os("ELASTIQ_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

/// Loads, seeds, and runs a pipeline config file.
pub fn run_pipeline_file(path: &Path, seed_override: Option<u64>, out_override: Option<PathBuf>) -> anyhow::Result<PipelineArtifacts> {
    let mut cfg: RunConfig = runcfg::load_config(path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(out) = out_override {
        cfg.out_dir = out;
    }
    run_pipeline(&cfg)
}
