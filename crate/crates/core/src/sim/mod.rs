//! Rolling-decision market simulator.
//!
//! A scenario couples a synthetic price process, a weather process, a price
//! forecaster with a spike-elevation regime, and one price-responsive
//! consumer. Each period the consumer re-forecasts the next eight prices,
//! re-optimizes its plan, and commits only the first period. The trace
//! keeps per-period state snapshots so a ground-truth elasticity oracle can
//! re-run the decision process under a perturbed anchor price.

mod consumer;
mod engine;
mod forecast;
mod price;
mod weather;

pub use consumer::{consumer_decide, ConsumerSpec, ConsumerState, ShiftableJob};
pub use engine::{
    oracle_all, oracle_elasticity, simulate, simulate_scenario, OracleResult, SimScenario,
    SimTrace, Snapshot,
};
pub use forecast::{rolling_forecast, FittedForecaster, ForecasterSpec, ForecasterState};
pub use price::{synth_prices, DayShape, PriceProcessSpec};
pub use weather::{synth_weather, WeatherSeries, WeatherSpec};

use alloc::string::String;

/// Forecast horizon: the number of periods ahead of the current one.
pub const T_RW: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario field: {0}")]
    InvalidSpec(String),
    #[error("insufficient history: need {needed} periods, have {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("job {index}: deadline period {deadline} precedes release period {release}")]
    InfeasibleJob {
        index: usize,
        release: u32,
        deadline: u32,
    },
    #[error("no snapshot available at period {t}")]
    SnapshotUnavailable { t: usize },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}
