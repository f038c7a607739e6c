//! Dataset, oracle, and estimate CSV formats.
//!
//! Dataset header (exact): `timestamp,price_usd_mwh,load_mw,temp_c,rh_pct,
//! dewpoint_c,holiday`; timestamps are ISO-8601 local time on the
//! 15-minute grid, holiday is 0 or 1. Values are written with Rust's
//! shortest round-trip float formatting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDateTime, TimeDelta};
use elastiq_core::data::{DataError, PeriodRecord, SeriesDataset};
use elastiq_core::metrics::ElasticityVector;
use elastiq_core::sim::OracleResult;

pub const DATASET_HEADER: [&str; 7] = [
    "timestamp",
    "price_usd_mwh",
    "load_mw",
    "temp_c",
    "rh_pct",
    "dewpoint_c",
    "holiday",
];

pub const ORACLE_HEADER: [&str; 11] = [
    "anchor_timestamp",
    "e0",
    "e1",
    "e2",
    "e3",
    "e4",
    "e5",
    "e6",
    "e7",
    "e8",
    "dlambda",
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column {column:?} (header must be {expected:?})")]
    MissingColumn {
        path: String,
        column: String,
        expected: String,
    },
    #[error("{path} row {row}: non-numeric {column}: {value:?}")]
    NonNumeric {
        path: String,
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("{path} row {row}: bad timestamp {value:?} (expected ISO-8601 like 2024-01-01T00:15)")]
    BadTimestamp {
        path: String,
        row: usize,
        value: String,
    },
    #[error("{path} row {row}: holiday must be 0 or 1, found {value:?}")]
    BadHoliday {
        path: String,
        row: usize,
        value: String,
    },
    #[error("{path}: {source}")]
    Data { path: String, source: DataError },
}

fn io_err(path: &Path, source: std::io::Error) -> CsvError {
    CsvError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn parse_timestamp(value: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M"))
        .ok()
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Reads and validates a dataset file. Leading records before the first
/// midnight and a trailing partial day are trimmed; everything else must
/// validate. Row numbers in errors count data rows from 1.
pub fn parse_dataset(path: &Path) -> Result<SeriesDataset, CsvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let p = path.display().to_string();
    let headers = reader
        .headers()
        .map_err(|e| CsvError::Csv {
            path: p.clone(),
            source: e,
        })?
        .clone();
    for expected in DATASET_HEADER {
        if !headers.iter().any(|h| h == expected) {
            return Err(CsvError::MissingColumn {
                path: p,
                column: expected.to_string(),
                expected: DATASET_HEADER.join(","),
            });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked");
    let idx = [
        col("timestamp"),
        col("price_usd_mwh"),
        col("load_mw"),
        col("temp_c"),
        col("rh_pct"),
        col("dewpoint_c"),
        col("holiday"),
    ];
    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CsvError::Csv {
            path: p.clone(),
            source: e,
        })?;
        let rownum = k + 1;
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let timestamp =
            parse_timestamp(field(0)).ok_or_else(|| CsvError::BadTimestamp {
                path: p.clone(),
                row: rownum,
                value: field(0).to_string(),
            })?;
        let numeric = |i: usize, column: &'static str| -> Result<f64, CsvError> {
            field(i).parse::<f64>().map_err(|_| CsvError::NonNumeric {
                path: p.clone(),
                row: rownum,
                column,
                value: field(i).to_string(),
            })
        };
        let holiday = match field(6) {
            "0" => false,
            "1" => true,
            other => {
                return Err(CsvError::BadHoliday {
                    path: p.clone(),
                    row: rownum,
                    value: other.to_string(),
                })
            }
        };
        records.push(PeriodRecord {
            timestamp,
            price: numeric(1, "price_usd_mwh")?,
            load: numeric(2, "load_mw")?,
            temp_c: numeric(3, "temp_c")?,
            rh_pct: numeric(4, "rh_pct")?,
            dewpoint_c: numeric(5, "dewpoint_c")?,
            holiday,
        });
    }
    let (ds, _trimmed) = SeriesDataset::from_records_trimmed(records)
        .map_err(|source| CsvError::Data { path: p, source })?;
    Ok(ds)
}

pub fn write_dataset(ds: &SeriesDataset, path: &Path) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", DATASET_HEADER.join(",")).map_err(|e| io_err(path, e))?;
    for r in ds.records() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_timestamp(r.timestamp),
            r.price,
            r.load,
            r.temp_c,
            r.rh_pct,
            r.dewpoint_c,
            if r.holiday { 1 } else { 0 },
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn write_oracle(results: &[OracleResult], path: &Path) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", ORACLE_HEADER.join(",")).map_err(|e| io_err(path, e))?;
    for r in results {
        let values: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{},{},{}",
            format_timestamp(r.anchor_timestamp),
            values.join(","),
            r.d_lambda,
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Reads an oracle file back into elasticity vectors.
pub fn read_oracle(path: &Path) -> Result<Vec<ElasticityVector>, CsvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let p = path.display().to_string();
    let mut out = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CsvError::Csv {
            path: p.clone(),
            source: e,
        })?;
        let rownum = k + 1;
        let ts_field = row.get(0).unwrap_or("");
        let anchor_timestamp =
            parse_timestamp(ts_field).ok_or_else(|| CsvError::BadTimestamp {
                path: p.clone(),
                row: rownum,
                value: ts_field.to_string(),
            })?;
        let mut values = [0.0; 9];
        for (i, v) in values.iter_mut().enumerate() {
            let cell = row.get(i + 1).unwrap_or("");
            *v = cell.parse::<f64>().map_err(|_| CsvError::NonNumeric {
                path: p.clone(),
                row: rownum,
                column: "e",
                value: cell.to_string(),
            })?;
        }
        out.push(ElasticityVector {
            anchor_timestamp,
            values,
        });
    }
    Ok(out)
}

/// Per-method estimate rows: `anchor_timestamp,method,tau,estimate`.
pub fn write_estimates(
    method: &str,
    estimates: &[ElasticityVector],
    path: &Path,
) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "anchor_timestamp,method,tau,estimate").map_err(|e| io_err(path, e))?;
    for e in estimates {
        for (tau, v) in e.values.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                format_timestamp(e.anchor_timestamp),
                method,
                tau,
                v
            )
            .map_err(|e| io_err(path, e))?;
        }
    }
    Ok(())
}

pub fn read_estimates(path: &Path) -> Result<(String, Vec<ElasticityVector>), CsvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let p = path.display().to_string();
    let mut method = String::new();
    let mut out: Vec<ElasticityVector> = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CsvError::Csv {
            path: p.clone(),
            source: e,
        })?;
        let rownum = k + 1;
        let ts_field = row.get(0).unwrap_or("");
        let ts = parse_timestamp(ts_field).ok_or_else(|| CsvError::BadTimestamp {
            path: p.clone(),
            row: rownum,
            value: ts_field.to_string(),
        })?;
        method = row.get(1).unwrap_or("").to_string();
        let tau: usize = row
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| CsvError::NonNumeric {
                path: p.clone(),
                row: rownum,
                column: "tau",
                value: row.get(2).unwrap_or("").to_string(),
            })?;
        let est: f64 = row
            .get(3)
            .unwrap_or("")
            .parse()
            .map_err(|_| CsvError::NonNumeric {
                path: p.clone(),
                row: rownum,
                column: "estimate",
                value: row.get(3).unwrap_or("").to_string(),
            })?;
        if out.last().map(|e| e.anchor_timestamp) != Some(ts) {
            out.push(ElasticityVector {
                anchor_timestamp: ts,
                values: [0.0; 9],
            });
        }
        if let Some(last) = out.last_mut() {
            if tau < 9 {
                last.values[tau] = est;
            }
        }
    }
    Ok((method, out))
}

/// Synthetic-data dump: `anchor_timestamp,e0..e8,eta,wf`.
pub fn write_synthetic(
    synthetic: &[elastiq_core::estimator::SyntheticSample],
    path: &Path,
) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(
        out,
        "anchor_timestamp,e0,e1,e2,e3,e4,e5,e6,e7,e8,eta,wf"
    )
    .map_err(|e| io_err(path, e))?;
    for s in synthetic {
        let values: Vec<String> = s.targets.iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{}",
            format_timestamp(s.base.anchor_timestamp),
            values.join(","),
            s.eta,
            s.wf,
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Fifteen-minute step helper for callers assembling timestamps.
pub fn period_offset(start: NaiveDateTime, periods: usize) -> NaiveDateTime {
    start + TimeDelta::minutes(15 * periods as i64)
}
