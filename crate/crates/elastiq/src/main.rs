use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use elastiq_core::data::{
    build_samples, partition_samples, split_index, Scaler, SeriesDataset, ANCHOR_FIRST_PERIOD,
    ANCHOR_LAST_PERIOD,
};
use elastiq_core::estimator::{build_synthetic_set, estimate, fit_bundle};
use elastiq_core::metrics::{breakdown, percentile};
use elastiq_core::sim::{oracle_all, simulate_scenario, T_RW};

use elastiq::csvio::{
    parse_dataset, read_estimates, read_oracle, write_dataset, write_estimates, write_oracle,
    write_synthetic,
};
use elastiq::pipeline::{resolve_out_dir, run_pipeline_file};
use elastiq::report::{emit_report, SeriesBlock};
use elastiq::runcfg::{
    derive_seed, load_config, EstimateCmdConfig, EvaluateCmdConfig, TrainCmdConfig,
};
use elastiq::{bundle, scenario};

/// Time-varying electricity demand elasticity workbench.
#[derive(Parser)]
#[command(name = "elastiq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and the ELASTIQ_OUT variable.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario: dataset.csv plus ground-truth oracle.csv.
    Simulate(Common),
    /// Train the two-stage estimator on a dataset; writes a bundle.
    Train(Common),
    /// Estimate elasticities with a trained bundle.
    Estimate(Common),
    /// Compare estimate files against an oracle file.
    Evaluate(Common),
    /// Simulate, train, estimate with all methods, and report.
    Pipeline(Common),
}

fn out_dir_for(common: &Common, configured: &std::path::Path) -> PathBuf {
    match &common.out {
        Some(dir) => dir.clone(),
        None => resolve_out_dir(configured),
    }
}

fn cmd_simulate(common: &Common) -> anyhow::Result<()> {
    let mut sc = scenario::load_scenario(&common.config)?;
    if let Some(seed) = common.seed {
        sc.price.seed = derive_seed(seed, 1);
        sc.weather.seed = derive_seed(seed, 2);
    }
    let out_dir = out_dir_for(common, &PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)?;
    let trace = simulate_scenario(&sc)?;
    let dataset = trace.to_dataset()?;
    write_dataset(&dataset, &out_dir.join("dataset.csv"))?;
    // oracle at every anchor with a full horizon inside the series
    let anchors: Vec<usize> = (0..trace.len().saturating_sub(T_RW))
        .filter(|t| {
            let q = (t % 96) as u32 + 1;
            (ANCHOR_FIRST_PERIOD..=ANCHOR_LAST_PERIOD).contains(&q)
        })
        .collect();
    let oracle = oracle_all(&trace, &anchors, 3.0)?;
    write_oracle(&oracle, &out_dir.join("oracle.csv"))?;
    println!(
        "simulated {} days -> {} ({} oracle anchors)",
        sc.days,
        out_dir.display(),
        anchors.len()
    );
    Ok(())
}

fn cmd_train(common: &Common) -> anyhow::Result<()> {
    let mut cfg: TrainCmdConfig = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.estimator.stage1.seed = derive_seed(cfg.seed, 3);
    cfg.estimator.stage2.seed = derive_seed(cfg.seed, 4);
    let out_dir = out_dir_for(common, &cfg.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let dataset = parse_dataset(&cfg.dataset)?;
    let boundary = split_index(&dataset, &cfg.split)?;
    let train_ds = SeriesDataset::new(dataset.records()[..boundary].to_vec())?;
    let scaler = Scaler::fit(&train_ds)?;
    let samples = build_samples(&dataset, &scaler, cfg.estimator.t_in, 9)?;
    let (train_samples, _) = partition_samples(samples, boundary);
    anyhow::ensure!(!train_samples.is_empty(), "no training samples");
    let (trained, r1, r2) = fit_bundle(&train_samples, None, &scaler, &cfg.estimator)?;
    bundle::save_bundle(&trained, &out_dir.join("bundle"))?;
    let synthetic =
        build_synthetic_set(&train_samples, &trained.params_p, &scaler, &cfg.estimator)?;
    write_synthetic(&synthetic, &out_dir.join("synthetic.csv"))?;
    println!(
        "trained on {} samples (stage-1 loss {:.6}, stage-2 loss {:.6}) -> {}",
        train_samples.len(),
        r1.final_train_loss,
        r2.final_train_loss,
        out_dir.join("bundle").display()
    );
    Ok(())
}

fn cmd_estimate(common: &Common) -> anyhow::Result<()> {
    let cfg: EstimateCmdConfig = load_config(&common.config)?;
    let out_dir = out_dir_for(common, &cfg.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let dataset = parse_dataset(&cfg.dataset)?;
    let trained = bundle::load_bundle(&cfg.bundle)?;
    let samples = build_samples(&dataset, &trained.scaler, trained.config.t_in, 9)?;
    let selected = match &cfg.split {
        Some(split) => {
            let boundary = split_index(&dataset, split)?;
            partition_samples(samples, boundary).1
        }
        None => samples,
    };
    anyhow::ensure!(!selected.is_empty(), "no admissible anchors to estimate");
    let estimates: Result<Vec<_>, _> = selected.iter().map(|s| estimate(s, &trained)).collect();
    let estimates = estimates?;
    let path = out_dir.join("estimates_smlstm.csv");
    write_estimates("smlstm", &estimates, &path)?;
    println!("estimated {} anchors -> {}", estimates.len(), path.display());
    Ok(())
}

fn cmd_evaluate(common: &Common) -> anyhow::Result<()> {
    let mut cfg: EvaluateCmdConfig = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out_dir = out_dir_for(common, &cfg.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let truth = read_oracle(&cfg.oracle)?;
    let dataset = parse_dataset(&cfg.dataset)?;
    let boundary = split_index(&dataset, &cfg.split)?;
    let train_prices: Vec<f64> = dataset.records()[..boundary]
        .iter()
        .map(|r| r.price)
        .collect();
    let threshold = percentile(&train_prices, 0.95);
    let price_at = |ts: chrono::NaiveDateTime| -> anyhow::Result<f64> {
        dataset
            .records()
            .iter()
            .find(|r| r.timestamp == ts)
            .map(|r| r.price)
            .with_context(|| format!("anchor {ts} not present in the dataset"))
    };
    let config_echo = serde_json::to_string(&cfg).expect("serializable config");
    let mut reports = Vec::new();
    let mut blocks = Vec::new();
    for path in &cfg.estimates {
        let (method, estimates) = read_estimates(path)?;
        anyhow::ensure!(!method.is_empty(), "{}: no method column", path.display());
        // restrict the truth to the estimated anchors, in order
        let mut aligned_truth = Vec::with_capacity(estimates.len());
        let mut prices = Vec::with_capacity(estimates.len());
        for e in &estimates {
            let t = truth
                .iter()
                .find(|t| t.anchor_timestamp == e.anchor_timestamp)
                .with_context(|| {
                    format!("no oracle vector at anchor {}", e.anchor_timestamp)
                })?;
            aligned_truth.push(t.clone());
            prices.push(price_at(e.anchor_timestamp)?);
        }
        let report = breakdown(
            &method,
            &estimates,
            &aligned_truth,
            &prices,
            threshold,
            cfg.seed,
            config_echo.clone(),
        )?;
        reports.push(report);
        blocks.push((method, estimates, aligned_truth));
    }
    // one shared truth set for the series file
    let full_truth: Vec<_> = blocks
        .first()
        .map(|(_, _, t)| t.clone())
        .unwrap_or_default();
    let series: Vec<SeriesBlock<'_>> = blocks
        .iter()
        .map(|(m, e, _)| SeriesBlock {
            method: m,
            estimates: e,
        })
        .collect();
    emit_report(&reports, &full_truth, &series, &out_dir)?;
    println!("evaluated {} methods -> {}", reports.len(), out_dir.display());
    Ok(())
}

fn cmd_pipeline(common: &Common) -> anyhow::Result<()> {
    let artifacts = run_pipeline_file(&common.config, common.seed, common.out.clone())?;
    for r in &artifacts.reports {
        println!(
            "{}: rmse {:.4} mae {:.4} (own {:.4}, cross {:.4})",
            r.method, r.rmse, r.mae, r.own_rmse, r.cross_rmse
        );
    }
    println!("artifacts in {}", artifacts.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => cmd_simulate(c),
        Command::Train(c) => cmd_train(c),
        Command::Estimate(c) => cmd_estimate(c),
        Command::Evaluate(c) => cmd_evaluate(c),
        Command::Pipeline(c) => cmd_pipeline(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
