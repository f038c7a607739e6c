//! 15-minute period records, chronological splitting, min-max scaling, and
//! construction of windowed training samples.
//!
//! A day has 96 periods; the within-day period index is 1-based. Feature
//! windows are built so that every feature is observable at the anchor
//! period: the load column is lagged by `t_out` periods, while price,
//! weather, and calendar columns carry the values recorded at each window
//! step (the realized path).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate, NaiveDateTime, TimeDelta, Timelike};

use crate::linalg::Mat;

pub const PERIODS_PER_DAY: usize = 96;
pub const N_FEATURES: usize = 9;

/// Earliest within-day period index (1-based) at which elasticity vectors
/// are anchored.
pub const ANCHOR_FIRST_PERIOD: u32 = 24;
/// Latest anchored within-day period index.
pub const ANCHOR_LAST_PERIOD: u32 = 80;

/// Feature column order inside a window.
pub const FEAT_PRICE: usize = 0;
pub const FEAT_LOAD: usize = 1;
pub const FEAT_TEMP: usize = 2;
pub const FEAT_RH: usize = 3;
pub const FEAT_DEWPOINT: usize = 4;
pub const FEAT_PERIOD: usize = 5;
pub const FEAT_WEEKDAY: usize = 6;
pub const FEAT_MONTH: usize = 7;
pub const FEAT_HOLIDAY: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: timestamps must advance in strict 15-minute steps")]
    TimestampStep { row: usize },
    #[error("row {row}: timestamp is not aligned to the 15-minute grid")]
    TimestampAlignment { row: usize },
    #[error("dataset must start at midnight and cover whole days (found start {start}, {len} records)")]
    NotDayAligned { start: String, len: usize },
    #[error("row {row}: load must be positive (elasticity denominator)")]
    NonPositiveLoad { row: usize },
    #[error("row {row}: non-finite {field}")]
    NonFinite { row: usize, field: &'static str },
    #[error("split boundary outside the dataset: {0}")]
    BoundaryOutOfRange(String),
    #[error("window shape invalid: t_out ({t_out}) must be in 1..=t_in ({t_in})")]
    BadWindowShape { t_in: usize, t_out: usize },
}

/// One 15-minute observation.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodRecord {
    pub timestamp: NaiveDateTime,
    /// USD/MWh; may be negative.
    pub price: f64,
    /// MW; strictly positive.
    pub load: f64,
    pub temp_c: f64,
    pub rh_pct: f64,
    pub dewpoint_c: f64,
    pub holiday: bool,
}

impl PeriodRecord {
    /// Within-day period index, 1..=96.
    pub fn period_index(&self) -> u32 {
        self.timestamp.hour() * 4 + self.timestamp.minute() / 15 + 1
    }

    /// Weekday 1 (Monday) ..= 7 (Sunday).
    pub fn weekday(&self) -> u32 {
        self.timestamp.weekday().number_from_monday()
    }

    /// Month 1..=12.
    pub fn month(&self) -> u32 {
        self.timestamp.month()
    }

    /// The nine raw features at this period, with the load column replaced
    /// by the caller-provided lagged load.
    pub fn raw_features(&self, lagged_load: f64) -> [f64; N_FEATURES] {
        [
            self.price,
            lagged_load,
            self.temp_c,
            self.rh_pct,
            self.dewpoint_c,
            self.period_index() as f64,
            self.weekday() as f64,
            self.month() as f64,
            if self.holiday { 1.0 } else { 0.0 },
        ]
    }
}

/// A validated, day-aligned series of period records.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesDataset {
    records: Vec<PeriodRecord>,
}

impl SeriesDataset {
    /// Validates monotone 15-minute timestamps, positive finite loads,
    /// finite fields, and whole-day alignment starting at midnight.
    /// Row numbers in errors are 1-based record positions.
    pub fn new(records: Vec<PeriodRecord>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        for (k, rec) in records.iter().enumerate() {
            let row = k + 1;
            if rec.timestamp.minute() % 15 != 0 || rec.timestamp.second() != 0 {
                return Err(DataError::TimestampAlignment { row });
            }
            if k > 0 {
                let expected = records[k - 1].timestamp + TimeDelta::minutes(15);
                if rec.timestamp != expected {
                    return Err(DataError::TimestampStep { row });
                }
            }
            if !(rec.load > 0.0) {
                return Err(DataError::NonPositiveLoad { row });
            }
            for (v, field) in [
                (rec.price, "price"),
                (rec.load, "load"),
                (rec.temp_c, "temp_c"),
                (rec.rh_pct, "rh_pct"),
                (rec.dewpoint_c, "dewpoint_c"),
            ] {
                if !v.is_finite() {
                    return Err(DataError::NonFinite { row, field });
                }
            }
        }
        let first = records[0].timestamp;
        if first.hour() != 0 || first.minute() != 0 || records.len() % PERIODS_PER_DAY != 0 {
            return Err(DataError::NotDayAligned {
                start: format!("{first}"),
                len: records.len(),
            });
        }
        Ok(Self { records })
    }

    /// Drops leading records before the first midnight and trailing records
    /// past the last complete day, then validates. Returns the dataset and
    /// the number of records trimmed.
    pub fn from_records_trimmed(
        mut records: Vec<PeriodRecord>,
    ) -> Result<(Self, usize), DataError> {
        let original = records.len();
        let start = records
            .iter()
            .position(|r| r.timestamp.hour() == 0 && r.timestamp.minute() == 0)
            .ok_or(DataError::Empty)?;
        records.drain(..start);
        let whole = records.len() - records.len() % PERIODS_PER_DAY;
        records.truncate(whole);
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        let trimmed = original - records.len();
        Ok((Self::new(records)?, trimmed))
    }

    pub fn records(&self) -> &[PeriodRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn days(&self) -> usize {
        self.records.len() / PERIODS_PER_DAY
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.price)
    }

    pub fn loads(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.load)
    }
}

/// Chronological split specification.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SplitSpec {
    /// Fraction of days assigned to the test split (rounded to whole days).
    TestFraction(f64),
    /// Number of leading days assigned to the training split.
    TrainDays(usize),
    /// First day of the test split.
    BoundaryDate(NaiveDate),
}

/// Record index of the first test period (always day-aligned).
pub fn split_index(ds: &SeriesDataset, spec: &SplitSpec) -> Result<usize, DataError> {
    let days = ds.days();
    let train_days = match spec {
        SplitSpec::TestFraction(f) => {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(DataError::BoundaryOutOfRange(format!(
                    "test fraction {f} must be in (0, 1)"
                )));
            }
            let test_days = crate::numeric::round((days as f64) * f) as usize;
            if test_days == 0 || test_days >= days {
                return Err(DataError::BoundaryOutOfRange(format!(
                    "test fraction {f} leaves an empty split on a {days}-day dataset"
                )));
            }
            days - test_days
        }
        SplitSpec::TrainDays(d) => {
            if *d == 0 || *d >= days {
                return Err(DataError::BoundaryOutOfRange(format!(
                    "train days {d} outside 1..{days}"
                )));
            }
            *d
        }
        SplitSpec::BoundaryDate(date) => {
            let first = ds.records[0].timestamp.date();
            let offset = date.signed_duration_since(first).num_days();
            if offset <= 0 || offset as usize >= days {
                return Err(DataError::BoundaryOutOfRange(format!(
                    "boundary date {date} outside the dataset"
                )));
            }
            offset as usize
        }
    };
    Ok(train_days * PERIODS_PER_DAY)
}

/// Splits the records chronologically into two datasets.
pub fn split_dataset(
    ds: &SeriesDataset,
    spec: &SplitSpec,
) -> Result<(SeriesDataset, SeriesDataset), DataError> {
    let boundary = split_index(ds, spec)?;
    let train = SeriesDataset::new(ds.records[..boundary].to_vec())?;
    let test = SeriesDataset::new(ds.records[boundary..].to_vec())?;
    Ok((train, test))
}

/// Per-feature min-max statistics fit on a training split.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaler {
    pub mins: [f64; N_FEATURES],
    pub maxs: [f64; N_FEATURES],
}

const DEGENERATE_SPAN: f64 = 1e-9;

impl Scaler {
    /// Fits on the training split only.
    pub fn fit(train: &SeriesDataset) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::Empty);
        }
        let mut mins = [f64::INFINITY; N_FEATURES];
        let mut maxs = [f64::NEG_INFINITY; N_FEATURES];
        for rec in train.records() {
            let feats = rec.raw_features(rec.load);
            for (k, v) in feats.iter().enumerate() {
                mins[k] = mins[k].min(*v);
                maxs[k] = maxs[k].max(*v);
            }
        }
        Ok(Self { mins, maxs })
    }

    /// `(x - min) / (max - min)`; a degenerate feature maps to 0.5.
    #[inline]
    pub fn scale(&self, feature: usize, x: f64) -> f64 {
        let span = self.maxs[feature] - self.mins[feature];
        if span < DEGENERATE_SPAN {
            0.5
        } else {
            (x - self.mins[feature]) / span
        }
    }

    /// Inverse transform; a degenerate feature returns the fitted constant.
    #[inline]
    pub fn unscale(&self, feature: usize, y: f64) -> f64 {
        let span = self.maxs[feature] - self.mins[feature];
        if span < DEGENERATE_SPAN {
            self.mins[feature]
        } else {
            self.mins[feature] + y * span
        }
    }

    pub fn scale_price(&self, x: f64) -> f64 {
        self.scale(FEAT_PRICE, x)
    }

    pub fn scale_load(&self, x: f64) -> f64 {
        self.scale(FEAT_LOAD, x)
    }

    pub fn unscale_load(&self, y: f64) -> f64 {
        self.unscale(FEAT_LOAD, y)
    }
}

/// One feature window anchored at period `anchor` (a global record index),
/// with raw-scale target loads for the `t_out` tail periods.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub anchor: usize,
    pub anchor_timestamp: NaiveDateTime,
    /// USD/MWh at the anchor period, raw scale.
    pub anchor_price: f64,
    /// `t_in x 9`, min-max scaled.
    pub window: Mat,
    /// MW at periods `anchor .. anchor + t_out`, raw scale.
    pub target_loads: Vec<f64>,
}

impl Sample {
    pub fn t_in(&self) -> usize {
        self.window.rows()
    }

    pub fn t_out(&self) -> usize {
        self.target_loads.len()
    }

    /// Window row corresponding to the anchor period.
    pub fn anchor_step(&self) -> usize {
        self.t_in() - self.t_out()
    }
}

/// Global record index covered by window row `step`.
#[inline]
pub fn window_period(anchor: usize, t_in: usize, t_out: usize, step: usize) -> isize {
    anchor as isize + t_out as isize - t_in as isize + step as isize
}

/// Builds one sample per admissible anchor: within-day period index in
/// 24..=80, enough history for the window and the lagged load column, and
/// a full `t_out` tail inside the dataset. Returns an empty vector when the
/// dataset is too short for a single window.
pub fn build_samples(
    ds: &SeriesDataset,
    scaler: &Scaler,
    t_in: usize,
    t_out: usize,
) -> Result<Vec<Sample>, DataError> {
    if t_out == 0 || t_out > t_in {
        return Err(DataError::BadWindowShape { t_in, t_out });
    }
    let records = ds.records();
    let n = records.len();
    let mut samples = Vec::new();
    for anchor in 0..n {
        let q = records[anchor].period_index();
        if !(ANCHOR_FIRST_PERIOD..=ANCHOR_LAST_PERIOD).contains(&q) {
            continue;
        }
        // earliest referenced index is the lagged load of the first row
        if anchor < t_in || anchor + t_out > n {
            continue;
        }
        let mut window = Mat::zeros(t_in, N_FEATURES);
        for step in 0..t_in {
            let r = window_period(anchor, t_in, t_out, step) as usize;
            let rec = &records[r];
            let feats = rec.raw_features(records[r - t_out].load);
            for (k, v) in feats.iter().enumerate() {
                window.set(step, k, scaler.scale(k, *v));
            }
        }
        let target_loads: Vec<f64> = records[anchor..anchor + t_out]
            .iter()
            .map(|r| r.load)
            .collect();
        samples.push(Sample {
            anchor,
            anchor_timestamp: records[anchor].timestamp,
            anchor_price: records[anchor].price,
            window,
            target_loads,
        });
    }
    Ok(samples)
}

/// Assigns each sample to the training or test side of a chronological
/// boundary. A sample belongs to the training split only when its whole
/// window (including the target tail) lies before the boundary; samples
/// whose window straddles the boundary become test samples that may read
/// history from training periods.
pub fn partition_samples(samples: Vec<Sample>, boundary: usize) -> (Vec<Sample>, Vec<Sample>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in samples {
        if s.anchor + s.t_out() <= boundary {
            train.push(s);
        } else {
            test.push(s);
        }
    }
    (train, test)
}
