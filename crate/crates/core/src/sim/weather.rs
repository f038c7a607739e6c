//! Seeded sinusoidal-plus-noise weather generator feeding both the thermal
//! consumer and the dataset's weather columns.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::data::PERIODS_PER_DAY;
use crate::numeric::{sin, standard_normal};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeatherSpec {
    pub temp_mean_c: f64,
    /// Half peak-to-trough within a day.
    pub temp_daily_amp_c: f64,
    /// Half peak-to-trough across the year.
    pub temp_seasonal_amp_c: f64,
    /// Standard deviation of the AR(1) temperature noise.
    pub temp_noise_sd_c: f64,
    pub rh_mean_pct: f64,
    pub rh_daily_amp_pct: f64,
    /// Mean spread between air temperature and dew point.
    pub dewpoint_offset_c: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeatherSeries {
    pub temp_c: Vec<f64>,
    pub rh_pct: Vec<f64>,
    pub dewpoint_c: Vec<f64>,
}

const NOISE_PERSISTENCE: f64 = 0.95;

/// Generates `days * 96` aligned weather observations; temperature peaks
/// mid-afternoon, humidity moves opposite to temperature.
pub fn synth_weather(spec: &WeatherSpec, days: usize) -> Result<WeatherSeries, SimError> {
    if days == 0 {
        return Err(SimError::InvalidSpec("days must be at least 1".into()));
    }
    if !spec.temp_noise_sd_c.is_finite() || spec.temp_noise_sd_c < 0.0 {
        return Err(SimError::InvalidSpec(
            "temp_noise_sd_c must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = days * PERIODS_PER_DAY;
    let mut temp = Vec::with_capacity(n);
    let mut rh = Vec::with_capacity(n);
    let mut dew = Vec::with_capacity(n);
    let mut noise = 0.0f64;
    let scale = crate::numeric::sqrt(1.0 - NOISE_PERSISTENCE * NOISE_PERSISTENCE);
    for t in 0..n {
        let q = (t % PERIODS_PER_DAY) as f64;
        let day = (t / PERIODS_PER_DAY) as f64;
        // daily peak around period 62 (~15:15), seasonal peak mid-year
        let daily = sin(core::f64::consts::TAU * (q - 38.0) / PERIODS_PER_DAY as f64);
        let seasonal = sin(core::f64::consts::TAU * (day - 80.0) / 365.25);
        noise = NOISE_PERSISTENCE * noise
            + scale * spec.temp_noise_sd_c * standard_normal(&mut rng);
        let t_c = spec.temp_mean_c
            + spec.temp_daily_amp_c * daily
            + spec.temp_seasonal_amp_c * seasonal
            + noise;
        let rh_v = (spec.rh_mean_pct - spec.rh_daily_amp_pct * daily).clamp(0.0, 100.0);
        let dew_v = t_c - spec.dewpoint_offset_c;
        temp.push(t_c);
        rh.push(rh_v);
        dew.push(dew_v.min(t_c));
    }
    Ok(WeatherSeries {
        temp_c: temp,
        rh_pct: rh,
        dewpoint_c: dew,
    })
}
