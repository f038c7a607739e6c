//! Report emission: `metrics.json` (full reports), `metrics.csv` (one row
//! per method), and `elasticity_series.csv` (per-anchor estimate vs truth,
//! plot-ready).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use chrono::NaiveDateTime;
use elastiq_core::metrics::{ElasticityVector, MetricReport};

use crate::csvio::format_timestamp;

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const SERIES_CSV: &str = "elasticity_series.csv";

/// One per-method estimate series paired with the shared truth.
pub struct SeriesBlock<'a> {
    pub method: &'a str,
    pub estimates: &'a [ElasticityVector],
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes all three report files. Fails when no methods were evaluated.
pub fn emit_report(
    reports: &[MetricReport],
    truth: &[ElasticityVector],
    series: &[SeriesBlock<'_>],
    dir: &Path,
) -> anyhow::Result<()> {
    if reports.is_empty() {
        anyhow::bail!("no methods evaluated");
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let json_path = dir.join(METRICS_JSON);
    let json = File::create(&json_path)
        .with_context(|| format!("creating {}", json_path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(json), reports)?;

    let csv_path = dir.join(METRICS_CSV);
    let mut csv = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?,
    );
    writeln!(
        csv,
        "method,rmse,mae,own_rmse,cross_rmse,spike_rmse,normal_rmse"
    )?;
    for r in reports {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.method,
            r.rmse,
            r.mae,
            r.own_rmse,
            r.cross_rmse,
            opt(r.spike_rmse),
            opt(r.normal_rmse),
        )?;
    }

    let series_path = dir.join(SERIES_CSV);
    let mut out = BufWriter::new(
        File::create(&series_path)
            .with_context(|| format!("creating {}", series_path.display()))?,
    );
    writeln!(out, "anchor_timestamp,method,tau,estimate,truth")?;
    let truth_at = |ts: NaiveDateTime| truth.iter().find(|t| t.anchor_timestamp == ts);
    for block in series {
        for est in block.estimates {
            let Some(t) = truth_at(est.anchor_timestamp) else {
                anyhow::bail!(
                    "estimate anchor {} has no matching truth vector",
                    est.anchor_timestamp
                );
            };
            for tau in 0..9 {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    format_timestamp(est.anchor_timestamp),
                    block.method,
                    tau,
                    est.values[tau],
                    t.values[tau],
                )?;
            }
        }
    }
    Ok(())
}
