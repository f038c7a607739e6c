//! Rolling price forecaster: an autoregression fit on spike-capped history,
//! plus a post-spike elevation regime that decays geometrically.
//!
//! Right after observing a spike the forecaster multiplies its predictions
//! by an elevation factor, which halves (in log space) every `half_life`
//! periods. This reproduces the overestimation of upcoming prices that
//! suppresses observable demand response after spikes.

use alloc::vec;
use alloc::vec::Vec;

use super::{SimError, T_RW};
use crate::linalg::solve_dense;
use crate::metrics::percentile;
use crate::numeric::powf;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecasterSpec {
    /// Autoregression order (number of price lags).
    pub ar_order: usize,
    /// Elevation multiplier applied right after a spike; at least 1.
    pub elevation_factor: f64,
    /// Periods for the log-elevation to halve.
    pub half_life: f64,
}

impl Default for ForecasterSpec {
    fn default() -> Self {
        Self {
            ar_order: 4,
            elevation_factor: 1.0,
            half_life: 4.0,
        }
    }
}

/// Autoregression coefficients and the spike regime parameters, fit once on
/// a price history.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedForecaster {
    /// Intercept followed by lag coefficients (most recent lag first).
    pub coeffs: Vec<f64>,
    /// 95th percentile of the fitting window.
    pub spike_threshold: f64,
    pub elevation_factor: f64,
    pub half_life: f64,
}

/// Dynamic per-period forecaster state carried through the simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecasterState {
    /// Periods since the last observed spike; `None` before any spike.
    pub spike_age: Option<u64>,
    /// Most recent observed prices, oldest first, length = AR order.
    pub recent: Vec<f64>,
}

impl FittedForecaster {
    /// Fits the autoregression on history with spike periods capped at the
    /// 95th-percentile threshold, so spikes act through the elevation
    /// regime rather than through explosive AR inputs.
    pub fn fit(history: &[f64], spec: &ForecasterSpec) -> Result<Self, SimError> {
        let p = spec.ar_order;
        if p == 0 {
            return Err(SimError::InvalidSpec("ar_order must be at least 1".into()));
        }
        if !(spec.elevation_factor >= 1.0) {
            return Err(SimError::InvalidSpec(
                "elevation_factor must be at least 1".into(),
            ));
        }
        if !(spec.half_life > 0.0) {
            return Err(SimError::InvalidSpec("half_life must be positive".into()));
        }
        let needed = p + 16;
        if history.len() < needed {
            return Err(SimError::InsufficientHistory {
                needed,
                got: history.len(),
            });
        }
        let threshold = percentile(history, 0.95);
        let capped: Vec<f64> = history.iter().map(|v| v.min(threshold)).collect();
        // least squares for x_t = c0 + sum_k phi_k x_{t-k}
        let dim = p + 1;
        let mut ata = vec![0.0; dim * dim];
        let mut atb = vec![0.0; dim];
        let mut row = vec![0.0; dim];
        for t in p..capped.len() {
            row[0] = 1.0;
            for k in 1..=p {
                row[k] = capped[t - k];
            }
            for i in 0..dim {
                for j in 0..dim {
                    ata[i * dim + j] += row[i] * row[j];
                }
                atb[i] += row[i] * capped[t];
            }
        }
        // tiny ridge keeps near-constant histories solvable
        for i in 0..dim {
            ata[i * dim + i] += 1e-9;
        }
        let coeffs = solve_dense(dim, &mut ata, &mut atb)
            .ok_or_else(|| SimError::InvalidSpec("AR fit is singular".into()))?;
        Ok(Self {
            coeffs,
            spike_threshold: threshold,
            elevation_factor: spec.elevation_factor,
            half_life: spec.half_life,
        })
    }

    pub fn ar_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Elevation multiplier at a given spike age: `factor^(0.5^(age/h))`.
    pub fn elevation(&self, spike_age: Option<u64>) -> f64 {
        match spike_age {
            None => 1.0,
            Some(age) => powf(
                self.elevation_factor,
                powf(0.5, age as f64 / self.half_life),
            ),
        }
    }

    /// Plain iterated autoregression for the next `T_RW` periods, with
    /// observed inputs capped at the spike threshold.
    pub fn plain_forecast(&self, state: &ForecasterState) -> [f64; T_RW] {
        let p = self.ar_order();
        debug_assert_eq!(state.recent.len(), p);
        let mut lags: Vec<f64> = state
            .recent
            .iter()
            .map(|v| v.min(self.spike_threshold))
            .collect();
        let mut out = [0.0; T_RW];
        for slot in out.iter_mut() {
            let mut x = self.coeffs[0];
            for k in 1..=p {
                x += self.coeffs[k] * lags[p - k];
            }
            *slot = x;
            lags.rotate_left(1);
            lags[p - 1] = x;
        }
        out
    }

    /// Elevated forecast for the next `T_RW` periods.
    pub fn forecast(&self, state: &ForecasterState) -> [f64; T_RW] {
        let mut out = self.plain_forecast(state);
        let elev = self.elevation(state.spike_age);
        for v in out.iter_mut() {
            *v *= elev;
        }
        out
    }
}

impl ForecasterState {
    pub fn new(order: usize, initial_price: f64) -> Self {
        Self {
            spike_age: None,
            recent: vec![initial_price; order],
        }
    }

    /// Observes the realized price of the current period: refreshes the
    /// spike age and appends to the lag window.
    pub fn observe(&mut self, price: f64, threshold: f64) {
        if price >= threshold {
            self.spike_age = Some(0);
        } else if let Some(age) = self.spike_age {
            self.spike_age = Some(age + 1);
        }
        self.recent.rotate_left(1);
        let n = self.recent.len();
        self.recent[n - 1] = price;
    }
}

/// Forecast for periods `t+1 ..= t+T_RW` given the state after observing
/// the price at `t`. Errors when the state's lag window is shorter than
/// the fitted order.
pub fn rolling_forecast(
    model: &FittedForecaster,
    state: &ForecasterState,
) -> Result<[f64; T_RW], SimError> {
    if state.recent.len() != model.ar_order() {
        return Err(SimError::InsufficientHistory {
            needed: model.ar_order(),
            got: state.recent.len(),
        });
    }
    Ok(model.forecast(state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_history(level: f64, n: usize) -> Vec<f64> {
        // tiny deterministic wiggle keeps the regression well-posed
        (0..n)
            .map(|t| level + 0.5 * ((t % 7) as f64 - 3.0) / 3.0)
            .collect()
    }

    #[test]
    fn constant_history_forecasts_the_constant() {
        let hist = flat_history(42.0, 400);
        let model = FittedForecaster::fit(
            &hist,
            &ForecasterSpec {
                ar_order: 4,
                elevation_factor: 1.0,
                half_life: 4.0,
            },
        )
        .unwrap();
        let state = ForecasterState::new(4, 42.0);
        let f = rolling_forecast(&model, &state).unwrap();
        for v in f {
            assert!((v - 42.0).abs() < 0.5, "forecast {v}");
        }
    }

    #[test]
    fn post_spike_forecast_dominates_plain_ar() {
        let hist = flat_history(42.0, 400);
        let model = FittedForecaster::fit(
            &hist,
            &ForecasterSpec {
                ar_order: 4,
                elevation_factor: 2.5,
                half_life: 4.0,
            },
        )
        .unwrap();
        let mut state = ForecasterState::new(4, 42.0);
        state.observe(model.spike_threshold * 3.0, model.spike_threshold);
        assert_eq!(state.spike_age, Some(0));
        let plain = model.plain_forecast(&state);
        let elevated = model.forecast(&state);
        for (e, p) in elevated.iter().zip(&plain) {
            assert!(e >= p, "elevated {e} below plain {p}");
        }
    }

    #[test]
    fn elevation_decays_geometrically() {
        let model = FittedForecaster {
            coeffs: vec![0.0, 1.0],
            spike_threshold: 100.0,
            elevation_factor: 2.5,
            half_life: 6.0,
        };
        let f = 2.5f64;
        let at = |age: u64| model.elevation(Some(age));
        assert!((at(0) - f).abs() < 1e-9);
        assert!((at(6) - f.sqrt()).abs() < 1e-9);
        assert!((at(12) - f.sqrt().sqrt()).abs() < 1e-9);
        // ratio of log-elevations halves every half-life
        let r1 = at(6).ln() / at(0).ln();
        let r2 = at(12).ln() / at(6).ln();
        assert!((r1 - 0.5).abs() < 1e-9 && (r2 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn short_history_is_rejected() {
        let hist = flat_history(42.0, 10);
        assert!(matches!(
            FittedForecaster::fit(&hist, &ForecasterSpec::default()),
            Err(SimError::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn ar_tracks_mean_reverting_history() {
        // AR(4) on a slowly reverting series should forecast near the
        // recent level, not the long-run mean, one step out.
        let mut hist = Vec::new();
        let mut x: f64 = 60.0;
        for t in 0..600 {
            x += 0.1 * (40.0 - x) + 0.8 * ((t % 5) as f64 - 2.0) / 2.0;
            hist.push(x);
        }
        let model = FittedForecaster::fit(&hist, &ForecasterSpec::default()).unwrap();
        let mut state = ForecasterState::new(4, hist[0]);
        for v in &hist[hist.len() - 4..] {
            state.observe(*v, f64::INFINITY);
        }
        let f = rolling_forecast(&model, &state).unwrap();
        let last = hist[hist.len() - 1];
        assert!((f[0] - last).abs() < 3.0, "one-step forecast {} vs {last}", f[0]);
    }
}
