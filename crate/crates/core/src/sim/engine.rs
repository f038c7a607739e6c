//! The rolling simulation loop and the ground-truth elasticity oracle.
//!
//! Each period the engine observes the realized price, refreshes the
//! forecaster state, asks the consumer for a plan over the horizon, and
//! commits only the first plan slot as the realized load. Per-period state
//! snapshots let the oracle re-run the decision process from any anchor
//! with the anchor price shifted by +/- d_lambda, both the forecaster and
//! the consumer reacting, which yields the central-difference elasticity of
//! the true system.

use alloc::vec::Vec;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use super::consumer::{Consumer, ConsumerSpec, ConsumerState, Plan, PLAN_LEN};
use super::forecast::{FittedForecaster, ForecasterSpec, ForecasterState};
use super::price::{synth_prices, PriceProcessSpec};
use super::weather::{synth_weather, WeatherSeries, WeatherSpec};
use super::{SimError, T_RW};
use crate::data::{PeriodRecord, SeriesDataset, PERIODS_PER_DAY};
use crate::metrics::ElasticityVector;

/// Full scenario specification for one simulated consumer.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimScenario {
    pub start: NaiveDateTime,
    pub days: usize,
    pub price: PriceProcessSpec,
    pub weather: WeatherSpec,
    pub forecaster: ForecasterSpec,
    pub consumer: ConsumerSpec,
    #[cfg_attr(feature = "serde", serde(default))]
    pub holidays: Vec<NaiveDate>,
}

/// Pre-decision state of period `t`, sufficient to re-run the process.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub forecaster: ForecasterState,
    pub consumer: ConsumerState,
}

/// Everything a simulation run produced.
#[derive(Clone, Debug)]
pub struct SimTrace {
    pub start: NaiveDateTime,
    pub prices: Vec<f64>,
    pub weather: WeatherSeries,
    pub loads: Vec<f64>,
    /// Elevated forecast for periods `t+1 ..= t+8`, logged at each `t`.
    pub forecasts: Vec<[f64; T_RW]>,
    pub snapshots: Vec<Snapshot>,
    pub model: FittedForecaster,
    pub holidays: Vec<NaiveDate>,
    consumer: Consumer,
    /// Outdoor temperature padded past the series end.
    outdoor: Vec<f64>,
}

/// Ground-truth elasticity vector at one anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub anchor: usize,
    pub anchor_timestamp: NaiveDateTime,
    pub values: [f64; PLAN_LEN],
    pub d_lambda: f64,
}

impl OracleResult {
    pub fn to_vector(&self) -> ElasticityVector {
        ElasticityVector {
            anchor_timestamp: self.anchor_timestamp,
            values: self.values,
        }
    }
}

fn step(
    model: &FittedForecaster,
    consumer: &Consumer,
    fstate: &mut ForecasterState,
    cstate: &mut ConsumerState,
    t: usize,
    lambda: f64,
    outdoor: &[f64],
) -> (f64, [f64; T_RW], Plan) {
    if t % PERIODS_PER_DAY == 0 {
        consumer.start_of_day(cstate);
    }
    fstate.observe(lambda, model.spike_threshold);
    let ahead = model.forecast(fstate);
    let mut fvec = [0.0; PLAN_LEN];
    fvec[0] = lambda;
    fvec[1..].copy_from_slice(&ahead);
    let plan = consumer.decide(&fvec, cstate, t, &outdoor[t..t + PLAN_LEN]);
    consumer.commit(cstate, &plan, outdoor[t]);
    (plan.total_mw[0], ahead, plan)
}

/// Runs the rolling decision process over aligned price and weather series.
pub fn simulate(
    prices: Vec<f64>,
    weather: WeatherSeries,
    consumer_spec: &ConsumerSpec,
    forecaster_spec: &ForecasterSpec,
    start: NaiveDateTime,
    holidays: Vec<NaiveDate>,
) -> Result<SimTrace, SimError> {
    let n = prices.len();
    if n == 0 || n % PERIODS_PER_DAY != 0 || weather.temp_c.len() != n {
        return Err(SimError::InvalidSpec(
            "price and weather series must be non-empty, aligned, and whole days".into(),
        ));
    }
    let model = FittedForecaster::fit(&prices, forecaster_spec)?;
    let consumer = consumer_spec.resolve()?;
    let mut outdoor = weather.temp_c.clone();
    let last = *outdoor.last().expect("non-empty");
    outdoor.extend(core::iter::repeat(last).take(PLAN_LEN));

    let mut fstate = ForecasterState::new(model.ar_order(), prices[0]);
    let mut cstate = consumer.initial_state();
    let mut loads = Vec::with_capacity(n);
    let mut forecasts = Vec::with_capacity(n);
    let mut snapshots = Vec::with_capacity(n);
    for t in 0..n {
        snapshots.push(Snapshot {
            forecaster: fstate.clone(),
            consumer: cstate.clone(),
        });
        let (load, ahead, _) = step(
            &model, &consumer, &mut fstate, &mut cstate, t, prices[t], &outdoor,
        );
        loads.push(load);
        forecasts.push(ahead);
    }
    Ok(SimTrace {
        start,
        prices,
        weather,
        loads,
        forecasts,
        snapshots,
        model,
        holidays,
        consumer,
        outdoor,
    })
}

/// Generates the price and weather series for a scenario and simulates it.
pub fn simulate_scenario(sc: &SimScenario) -> Result<SimTrace, SimError> {
    let prices = synth_prices(&sc.price, sc.days)?;
    let weather = synth_weather(&sc.weather, sc.days)?;
    simulate(
        prices,
        weather,
        &sc.consumer,
        &sc.forecaster,
        sc.start,
        sc.holidays.clone(),
    )
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + TimeDelta::minutes(15 * t as i64)
    }

    /// Emits the run as a dataset in the standard record schema.
    pub fn to_dataset(&self) -> Result<SeriesDataset, crate::data::DataError> {
        let records: Vec<PeriodRecord> = (0..self.len())
            .map(|t| {
                let ts = self.timestamp(t);
                PeriodRecord {
                    timestamp: ts,
                    price: self.prices[t],
                    load: self.loads[t],
                    temp_c: self.weather.temp_c[t],
                    rh_pct: self.weather.rh_pct[t],
                    dewpoint_c: self.weather.dewpoint_c[t],
                    holiday: self.holidays.contains(&ts.date()),
                }
            })
            .collect();
        SeriesDataset::new(records)
    }

    /// Re-runs periods `t_c ..= t_c + 8` from the stored snapshot with the
    /// anchor price replaced by `prices[t_c] + delta`.
    fn replay(&self, t_c: usize, delta: f64) -> [f64; PLAN_LEN] {
        let snap = &self.snapshots[t_c];
        let mut fstate = snap.forecaster.clone();
        let mut cstate = snap.consumer.clone();
        let mut loads = [0.0; PLAN_LEN];
        for k in 0..PLAN_LEN {
            let t = t_c + k;
            let lambda = if k == 0 {
                self.prices[t] + delta
            } else {
                self.prices[t]
            };
            let (load, _, _) = step(
                &self.model,
                &self.consumer,
                &mut fstate,
                &mut cstate,
                t,
                lambda,
                &self.outdoor,
            );
            loads[k] = load;
        }
        loads
    }
}

/// Central-difference ground-truth elasticities at `t_c`: the simulation is
/// re-run with the anchor price at `lambda +/- d_lambda` and
/// `e_tau = (p+ - p-) / (2 d_lambda) * lambda / p_(tc+tau)`.
pub fn oracle_elasticity(
    trace: &SimTrace,
    t_c: usize,
    d_lambda: f64,
) -> Result<OracleResult, SimError> {
    if !(d_lambda > 0.0) {
        return Err(SimError::InvalidSpec("d_lambda must be positive".into()));
    }
    if t_c + T_RW >= trace.len() || t_c >= trace.snapshots.len() {
        return Err(SimError::SnapshotUnavailable { t: t_c });
    }
    let plus = trace.replay(t_c, d_lambda);
    let minus = trace.replay(t_c, -d_lambda);
    let lambda = trace.prices[t_c];
    let mut values = [0.0; PLAN_LEN];
    for (tau, v) in values.iter_mut().enumerate() {
        let p = trace.loads[t_c + tau];
        *v = (plus[tau] - minus[tau]) / (2.0 * d_lambda) * lambda / p;
    }
    Ok(OracleResult {
        anchor: t_c,
        anchor_timestamp: trace.timestamp(t_c),
        values,
        d_lambda,
    })
}

/// Oracle vectors for a set of anchors, in the given order.
pub fn oracle_all(
    trace: &SimTrace,
    anchors: &[usize],
    d_lambda: f64,
) -> Result<Vec<OracleResult>, SimError> {
    anchors
        .iter()
        .map(|t| oracle_elasticity(trace, *t, d_lambda))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::price::DayShape;
    use alloc::vec;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2024, 6, 3)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn base_price_spec(seed: u64) -> PriceProcessSpec {
        PriceProcessSpec {
            mean_level: 40.0,
            reversion: 0.25,
            volatility: 0.05,
            spike_intensity: 0.004,
            spike_ln_mean: 1.0,
            spike_ln_sd: 0.3,
            diurnal: DayShape::Sine {
                level: 1.0,
                amplitude: 0.25,
                peak_period: 68,
            },
            seed,
        }
    }

    fn base_weather_spec(seed: u64) -> WeatherSpec {
        WeatherSpec {
            temp_mean_c: 29.0,
            temp_daily_amp_c: 4.0,
            temp_seasonal_amp_c: 2.0,
            temp_noise_sd_c: 0.8,
            rh_mean_pct: 55.0,
            rh_daily_amp_pct: 12.0,
            dewpoint_offset_c: 9.0,
            seed,
        }
    }

    fn scenario(consumer: ConsumerSpec) -> SimScenario {
        SimScenario {
            start: start(),
            days: 12,
            price: base_price_spec(5),
            weather: base_weather_spec(6),
            forecaster: ForecasterSpec {
                ar_order: 4,
                elevation_factor: 2.0,
                half_life: 5.0,
            },
            consumer,
            holidays: vec![],
        }
    }

    #[test]
    fn insensitive_consumer_reproduces_baseline_and_zero_oracle() {
        let sc = scenario(ConsumerSpec::Insensitive {
            baseline: DayShape::Sine {
                level: 10.0,
                amplitude: 2.0,
                peak_period: 60,
            },
        });
        let trace = simulate_scenario(&sc).unwrap();
        let baseline = sc.consumer.resolve().unwrap().baseline().to_vec();
        for (t, load) in trace.loads.iter().enumerate() {
            assert_eq!(*load, baseline[t % 96]);
        }
        for t_c in [120usize, 400, 700] {
            let oracle = oracle_elasticity(&trace, t_c, 3.0).unwrap();
            assert_eq!(oracle.values, [0.0; 9]);
        }
    }

    #[test]
    fn same_seeds_give_identical_traces() {
        let sc = scenario(ConsumerSpec::Linear {
            baseline: DayShape::Flat { level: 30.0 },
            coeffs: vec![-0.2, -0.05, -0.05, -0.02, -0.02, -0.01, -0.01, -0.01, -0.01],
            p_min: 1.0,
            p_max: 80.0,
        });
        let a = simulate_scenario(&sc).unwrap();
        let b = simulate_scenario(&sc).unwrap();
        assert_eq!(a.loads, b.loads);
        assert_eq!(a.prices, b.prices);
        assert_eq!(a.to_dataset().unwrap(), b.to_dataset().unwrap());
    }

    #[test]
    fn linear_oracle_matches_analytic_value() {
        // c0 = -0.5, remaining coefficients zero, no elevation: at an
        // anchor with price lambda and load p, e0 = -0.5 * lambda / p.
        let mut sc = scenario(ConsumerSpec::Linear {
            baseline: DayShape::Flat { level: 30.0 },
            coeffs: vec![-0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            p_min: 0.5,
            p_max: 200.0,
        });
        sc.forecaster.elevation_factor = 1.0;
        let trace = simulate_scenario(&sc).unwrap();
        for t_c in [200usize, 500, 900] {
            let oracle = oracle_elasticity(&trace, t_c, 3.0).unwrap();
            let lambda = trace.prices[t_c];
            let p = trace.loads[t_c];
            let expected = -0.5 * lambda / p;
            assert!(
                (oracle.values[0] - expected).abs() < 1e-9,
                "e0 {} vs {expected}",
                oracle.values[0]
            );
            for tau in 1..9 {
                assert!(oracle.values[tau].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spec_example_linear_elasticity_is_minus_two() {
        // Constructed so the anchor has lambda = 40 and p = 10:
        // baseline 30, c0 = -0.5 -> p = 30 - 20 = 10, e0 = -2.
        let sc = SimScenario {
            start: start(),
            days: 3,
            price: PriceProcessSpec {
                mean_level: 40.0,
                reversion: 0.2,
                volatility: 0.0,
                spike_intensity: 0.0,
                spike_ln_mean: 0.0,
                spike_ln_sd: 0.0,
                diurnal: DayShape::Flat { level: 1.0 },
                seed: 1,
            },
            weather: base_weather_spec(2),
            forecaster: ForecasterSpec {
                ar_order: 2,
                elevation_factor: 1.0,
                half_life: 4.0,
            },
            consumer: ConsumerSpec::Linear {
                baseline: DayShape::Flat { level: 30.0 },
                coeffs: vec![-0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                p_min: 0.5,
                p_max: 200.0,
            },
            holidays: vec![],
        };
        let trace = simulate_scenario(&sc).unwrap();
        let t_c = 120;
        assert!((trace.prices[t_c] - 40.0).abs() < 1e-9);
        assert!((trace.loads[t_c] - 10.0).abs() < 1e-9);
        let oracle = oracle_elasticity(&trace, t_c, 3.0).unwrap();
        assert!((oracle.values[0] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn linear_negative_own_elasticity_everywhere_interior() {
        let sc = scenario(ConsumerSpec::Linear {
            baseline: DayShape::Flat { level: 30.0 },
            coeffs: vec![-0.25, -0.04, -0.03, -0.02, -0.02, -0.01, -0.01, -0.01, -0.01],
            p_min: 0.5,
            p_max: 200.0,
        });
        let trace = simulate_scenario(&sc).unwrap();
        let mut checked = 0;
        for t_c in (200..trace.len() - 9).step_by(37) {
            let o = oracle_elasticity(&trace, t_c, 3.0).unwrap();
            // interior anchors only: the load never hits its bounds here
            assert!(
                o.values[0] <= 1e-12,
                "own elasticity positive at {t_c}: {}",
                o.values[0]
            );
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn offline_recompute_from_logged_forecasts_matches_loads() {
        // Zero elevation: realized loads must equal the linear decision
        // rule applied to the logged forecast vectors.
        let mut sc = scenario(ConsumerSpec::Linear {
            baseline: DayShape::Flat { level: 30.0 },
            coeffs: vec![-0.2, -0.05, -0.04, -0.03, -0.03, -0.02, -0.02, -0.01, -0.01],
            p_min: 0.5,
            p_max: 200.0,
        });
        sc.forecaster.elevation_factor = 1.0;
        let trace = simulate_scenario(&sc).unwrap();
        let coeffs = [-0.2, -0.05, -0.04, -0.03, -0.03, -0.02, -0.02, -0.01, -0.01];
        for t in 0..trace.len() {
            let mut p = 30.0 + coeffs[0] * trace.prices[t];
            for k in 0..8 {
                p += coeffs[k + 1] * trace.forecasts[t][k];
            }
            let p = p.clamp(0.5, 200.0);
            assert!(
                (p - trace.loads[t]).abs() < 1e-9,
                "t={t}: {p} vs {}",
                trace.loads[t]
            );
        }
    }

    #[test]
    fn thermal_oracle_richardson_consistency() {
        // Smooth settings (no comfort-band kink): halving d_lambda should
        // shrink the central-difference discrepancy roughly fourfold.
        let sc = SimScenario {
            start: start(),
            days: 10,
            price: base_price_spec(9),
            weather: base_weather_spec(10),
            forecaster: ForecasterSpec {
                ar_order: 4,
                elevation_factor: 1.0,
                half_life: 4.0,
            },
            consumer: ConsumerSpec::Thermal {
                baseline: DayShape::Flat { level: 5.0 },
                r_thermal: 2.0,
                c_thermal: 1.6,
                comfort_center_c: 23.0,
                comfort_halfband_c: 0.0,
                discomfort_weight: 40.0,
                hvac_max_mw: 9.0,
                init_indoor_c: 24.0,
            },
            holidays: vec![],
        };
        let trace = simulate_scenario(&sc).unwrap();
        // average over anchors to smooth out solver noise
        let anchors: Vec<usize> = (300..800).step_by(97).collect();
        let mut d_big = 0.0;
        let mut d_small = 0.0;
        for &t_c in &anchors {
            let e6 = oracle_elasticity(&trace, t_c, 6.0).unwrap().values;
            let e3 = oracle_elasticity(&trace, t_c, 3.0).unwrap().values;
            let e15 = oracle_elasticity(&trace, t_c, 1.5).unwrap().values;
            for tau in 0..9 {
                d_big += (e6[tau] - e3[tau]).abs();
                d_small += (e3[tau] - e15[tau]).abs();
            }
        }
        assert!(d_big > 0.0 && d_small > 0.0);
        let ratio = d_big / d_small;
        assert!(
            (2.0..8.0).contains(&ratio),
            "second-order decay ratio {ratio}"
        );
    }

    #[test]
    fn oracle_validates_inputs() {
        let sc = scenario(ConsumerSpec::Insensitive {
            baseline: DayShape::Flat { level: 10.0 },
        });
        let trace = simulate_scenario(&sc).unwrap();
        assert!(oracle_elasticity(&trace, 5, 0.0).is_err());
        assert!(matches!(
            oracle_elasticity(&trace, trace.len() - 4, 3.0),
            Err(SimError::SnapshotUnavailable { .. })
        ));
    }
}
