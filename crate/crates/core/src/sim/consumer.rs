//! Price-responsive consumer models for the rolling decision process.
//!
//! Four decision-function families are provided: a price-insensitive
//! profile, a linear responder, a thermal load solving a small convex
//! horizon problem, and a time-shiftable load placing job energy greedily
//! into the cheapest feasible forecast periods.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::price::DayShape;
use super::{SimError, T_RW};
use crate::data::PERIODS_PER_DAY;

/// Hours per period.
const DT_H: f64 = 0.25;
/// Plan length: the current period plus the forecast horizon.
pub(super) const PLAN_LEN: usize = T_RW + 1;

/// One recurring daily job of a time-shiftable consumer. Periods are
/// within-day, 1-based; the job must run between release and deadline.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftableJob {
    pub energy_mwh: f64,
    pub release: u32,
    pub deadline: u32,
}

/// Parameterization of one simulated consumer.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ConsumerSpec {
    /// Ignores prices entirely; load equals the baseline profile.
    Insensitive { baseline: DayShape },
    /// `p = baseline + sum_k coeffs[k] * forecast[k]`, clipped to bounds.
    /// `coeffs[0]` multiplies the realized current price.
    Linear {
        baseline: DayShape,
        /// MW per USD/MWh, one coefficient per horizon entry (9 total).
        coeffs: Vec<f64>,
        p_min: f64,
        p_max: f64,
    },
    /// HVAC load under first-order thermal dynamics, minimizing energy cost
    /// plus quadratic discomfort outside a comfort band.
    Thermal {
        baseline: DayShape,
        /// Steady-state degrees per MW of cooling.
        r_thermal: f64,
        /// Thermal capacitance, MWh per degree.
        c_thermal: f64,
        comfort_center_c: f64,
        comfort_halfband_c: f64,
        /// USD per squared degree outside the band, per period.
        discomfort_weight: f64,
        hvac_max_mw: f64,
        init_indoor_c: f64,
    },
    /// Recurring daily jobs placed into the cheapest feasible periods.
    Shiftable {
        baseline: DayShape,
        jobs: Vec<ShiftableJob>,
        p_max: f64,
    },
}

/// Dynamic consumer state carried between periods.
#[derive(Clone, Debug, PartialEq)]
pub enum ConsumerState {
    Static,
    Thermal {
        indoor_c: f64,
        /// Previous plan, used to warm-start the horizon solver.
        prev_hvac: [f64; PLAN_LEN],
    },
    Shiftable {
        /// Remaining energy of each job for the current day.
        remaining_mwh: Vec<f64>,
    },
}

/// A consumption plan over the current period and the forecast horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    /// Total load per plan slot, MW.
    pub total_mw: [f64; PLAN_LEN],
    pub detail: PlanDetail,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlanDetail {
    None,
    /// HVAC component per slot, MW.
    Thermal([f64; PLAN_LEN]),
    /// Energy placed in the first slot, per job, MWh.
    Shiftable(Vec<f64>),
}

/// A validated consumer with the baseline profile resolved.
#[derive(Clone, Debug)]
pub struct Consumer {
    baseline: Vec<f64>,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    Insensitive,
    Linear {
        coeffs: [f64; PLAN_LEN],
        p_min: f64,
        p_max: f64,
    },
    Thermal {
        leak: f64,
        cool_per_mw: f64,
        center: f64,
        halfband: f64,
        weight: f64,
        hvac_max: f64,
        init_indoor: f64,
    },
    Shiftable {
        jobs: Vec<ShiftableJob>,
        p_max: f64,
    },
}

impl ConsumerSpec {
    pub fn resolve(&self) -> Result<Consumer, SimError> {
        let baseline_shape = match self {
            ConsumerSpec::Insensitive { baseline } => baseline,
            ConsumerSpec::Linear { baseline, .. } => baseline,
            ConsumerSpec::Thermal { baseline, .. } => baseline,
            ConsumerSpec::Shiftable { baseline, .. } => baseline,
        };
        let baseline = baseline_shape.resolve()?;
        if baseline.iter().any(|v| !(*v > 0.0)) {
            return Err(SimError::InvalidSpec(
                "baseline profile must be positive".into(),
            ));
        }
        let kind = match self {
            ConsumerSpec::Insensitive { .. } => Kind::Insensitive,
            ConsumerSpec::Linear {
                coeffs,
                p_min,
                p_max,
                ..
            } => {
                if coeffs.len() != PLAN_LEN {
                    return Err(SimError::InvalidSpec(format!(
                        "linear consumer needs {PLAN_LEN} price coefficients, found {}",
                        coeffs.len()
                    )));
                }
                if !(*p_min > 0.0 && p_max > p_min) {
                    return Err(SimError::InvalidSpec(
                        "need 0 < p_min < p_max for the linear consumer".into(),
                    ));
                }
                let mut c = [0.0; PLAN_LEN];
                c.copy_from_slice(coeffs);
                Kind::Linear {
                    coeffs: c,
                    p_min: *p_min,
                    p_max: *p_max,
                }
            }
            ConsumerSpec::Thermal {
                r_thermal,
                c_thermal,
                comfort_center_c,
                comfort_halfband_c,
                discomfort_weight,
                hvac_max_mw,
                init_indoor_c,
                ..
            } => {
                if !(*r_thermal > 0.0 && *c_thermal > 0.0) {
                    return Err(SimError::InvalidSpec(
                        "thermal resistance and capacitance must be positive".into(),
                    ));
                }
                let leak = DT_H / (r_thermal * c_thermal);
                if leak >= 1.0 {
                    return Err(SimError::InvalidSpec(
                        "thermal time constant shorter than one period".into(),
                    ));
                }
                if *comfort_halfband_c < 0.0 || *discomfort_weight < 0.0 {
                    return Err(SimError::InvalidSpec(
                        "comfort band and discomfort weight must be non-negative".into(),
                    ));
                }
                if !(*hvac_max_mw > 0.0) {
                    return Err(SimError::InvalidSpec("hvac_max_mw must be positive".into()));
                }
                Kind::Thermal {
                    leak,
                    cool_per_mw: DT_H / c_thermal,
                    center: *comfort_center_c,
                    halfband: *comfort_halfband_c,
                    weight: *discomfort_weight,
                    hvac_max: *hvac_max_mw,
                    init_indoor: *init_indoor_c,
                }
            }
            ConsumerSpec::Shiftable { jobs, p_max, .. } => {
                for (index, job) in jobs.iter().enumerate() {
                    if job.deadline < job.release {
                        return Err(SimError::InfeasibleJob {
                            index,
                            release: job.release,
                            deadline: job.deadline,
                        });
                    }
                    if job.release < 1 || job.deadline > PERIODS_PER_DAY as u32 {
                        return Err(SimError::InvalidSpec(format!(
                            "job {index}: window must lie within periods 1..=96"
                        )));
                    }
                    if !(job.energy_mwh > 0.0) {
                        return Err(SimError::InvalidSpec(format!(
                            "job {index}: energy must be positive"
                        )));
                    }
                }
                let max_baseline = baseline.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(*p_max > max_baseline) {
                    return Err(SimError::InvalidSpec(
                        "p_max must exceed the baseline peak".into(),
                    ));
                }
                Kind::Shiftable {
                    jobs: jobs.clone(),
                    p_max: *p_max,
                }
            }
        };
        Ok(Consumer { baseline, kind })
    }
}

impl Consumer {
    pub fn initial_state(&self) -> ConsumerState {
        match &self.kind {
            Kind::Insensitive | Kind::Linear { .. } => ConsumerState::Static,
            Kind::Thermal { init_indoor, .. } => ConsumerState::Thermal {
                indoor_c: *init_indoor,
                prev_hvac: [0.0; PLAN_LEN],
            },
            Kind::Shiftable { jobs, .. } => ConsumerState::Shiftable {
                remaining_mwh: jobs.iter().map(|j| j.energy_mwh).collect(),
            },
        }
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    fn baseline_at(&self, t: usize) -> f64 {
        self.baseline[t % PERIODS_PER_DAY]
    }

    /// Resets day-scoped state at midnight.
    pub(super) fn start_of_day(&self, state: &mut ConsumerState) {
        if let (Kind::Shiftable { jobs, .. }, ConsumerState::Shiftable { remaining_mwh }) =
            (&self.kind, state)
        {
            for (r, j) in remaining_mwh.iter_mut().zip(jobs) {
                *r = j.energy_mwh;
            }
        }
    }

    /// Produces the plan for periods `t ..= t + T_RW`.
    ///
    /// `forecast[0]` is the realized current price, the rest are forecasts;
    /// `outdoor_c` must cover the same nine periods.
    pub fn decide(
        &self,
        forecast: &[f64; PLAN_LEN],
        state: &ConsumerState,
        t: usize,
        outdoor_c: &[f64],
    ) -> Plan {
        let mut total = [0.0; PLAN_LEN];
        for (k, slot) in total.iter_mut().enumerate() {
            *slot = self.baseline_at(t + k);
        }
        match (&self.kind, state) {
            (Kind::Insensitive, _) => Plan {
                total_mw: total,
                detail: PlanDetail::None,
            },
            (
                Kind::Linear {
                    coeffs,
                    p_min,
                    p_max,
                },
                _,
            ) => {
                let response: f64 = coeffs.iter().zip(forecast).map(|(c, l)| c * l).sum();
                for slot in total.iter_mut() {
                    *slot = (*slot + response).clamp(*p_min, *p_max);
                }
                Plan {
                    total_mw: total,
                    detail: PlanDetail::None,
                }
            }
            (
                Kind::Thermal {
                    leak,
                    cool_per_mw,
                    center,
                    halfband,
                    weight,
                    hvac_max,
                    ..
                },
                ConsumerState::Thermal {
                    indoor_c,
                    prev_hvac,
                },
            ) => {
                let hvac = solve_thermal(
                    forecast, outdoor_c, *indoor_c, *leak, *cool_per_mw, *center, *halfband,
                    *weight, *hvac_max, prev_hvac,
                );
                for (slot, q) in total.iter_mut().zip(&hvac) {
                    *slot += q;
                }
                Plan {
                    total_mw: total,
                    detail: PlanDetail::Thermal(hvac),
                }
            }
            (Kind::Shiftable { jobs, p_max }, ConsumerState::Shiftable { remaining_mwh }) => {
                let (slot_mw, placed_first) =
                    place_jobs(jobs, remaining_mwh, forecast, t, &self.baseline, *p_max);
                for (slot, extra) in total.iter_mut().zip(&slot_mw) {
                    *slot += extra;
                }
                Plan {
                    total_mw: total,
                    detail: PlanDetail::Shiftable(placed_first),
                }
            }
            _ => unreachable!("consumer state does not match consumer kind"),
        }
    }

    /// Applies the committed first plan slot to the dynamic state.
    pub(super) fn commit(&self, state: &mut ConsumerState, plan: &Plan, outdoor_now_c: f64) {
        match (&self.kind, state, &plan.detail) {
            (
                Kind::Thermal {
                    leak, cool_per_mw, ..
                },
                ConsumerState::Thermal {
                    indoor_c,
                    prev_hvac,
                },
                PlanDetail::Thermal(hvac),
            ) => {
                *indoor_c += leak * (outdoor_now_c - *indoor_c) - cool_per_mw * hvac[0];
                *prev_hvac = *hvac;
            }
            (
                Kind::Shiftable { .. },
                ConsumerState::Shiftable { remaining_mwh },
                PlanDetail::Shiftable(placed),
            ) => {
                for (r, p) in remaining_mwh.iter_mut().zip(placed) {
                    *r = (*r - p).max(0.0);
                }
            }
            _ => {}
        }
    }
}

/// Greedy cheapest-first placement. A job commits energy inside the visible
/// horizon only when postponing past it could no longer meet the deadline;
/// ties in price go to the earlier period.
fn place_jobs(
    jobs: &[ShiftableJob],
    remaining: &[f64],
    forecast: &[f64; PLAN_LEN],
    t: usize,
    baseline: &[f64],
    p_max: f64,
) -> ([f64; PLAN_LEN], Vec<f64>) {
    let day_start = t - t % PERIODS_PER_DAY;
    let cap_e = |u: usize| -> f64 { ((p_max - baseline[u % PERIODS_PER_DAY]) * DT_H).max(0.0) };
    let mut used_e = [0.0; PLAN_LEN];
    let mut placed_first = vec![0.0; jobs.len()];
    for (j, job) in jobs.iter().enumerate() {
        let todo = remaining[j];
        if todo <= 1e-12 {
            continue;
        }
        let release_abs = day_start + job.release as usize - 1;
        let deadline_abs = day_start + job.deadline as usize - 1;
        if t > deadline_abs {
            continue;
        }
        // capacity in feasible periods beyond the horizon
        let mut future_cap = 0.0;
        let mut u = (t + PLAN_LEN).max(release_abs);
        while u <= deadline_abs {
            future_cap += cap_e(u);
            u += 1;
        }
        let mut must_place = (todo - future_cap).max(0.0);
        if must_place <= 0.0 {
            continue;
        }
        let mut slots: Vec<usize> = (0..PLAN_LEN)
            .filter(|k| t + k >= release_abs && t + k <= deadline_abs)
            .collect();
        slots.sort_by(|a, b| {
            forecast[*a]
                .partial_cmp(&forecast[*b])
                .expect("finite prices")
                .then(a.cmp(b))
        });
        for k in slots {
            let free = cap_e(t + k) - used_e[k];
            let take = must_place.min(free);
            if take > 0.0 {
                used_e[k] += take;
                must_place -= take;
                if k == 0 {
                    placed_first[j] += take;
                }
            }
            if must_place <= 0.0 {
                break;
            }
        }
    }
    let mut slot_mw = [0.0; PLAN_LEN];
    for (mw, e) in slot_mw.iter_mut().zip(&used_e) {
        *mw = e / DT_H;
    }
    (slot_mw, placed_first)
}

/// Convex horizon problem for the thermal consumer, solved by projected
/// coordinate descent. Each coordinate is minimized exactly over its bounds
/// (the 1-D objective is piecewise quadratic with a piecewise-linear,
/// nondecreasing derivative), and sweeping stops once a full pass improves
/// the objective by less than the tolerance.
#[allow(clippy::too_many_arguments)]
fn solve_thermal(
    prices: &[f64; PLAN_LEN],
    outdoor: &[f64],
    indoor0: f64,
    leak: f64,
    cool_per_mw: f64,
    center: f64,
    halfband: f64,
    weight: f64,
    hvac_max: f64,
    warm_start: &[f64; PLAN_LEN],
) -> [f64; PLAN_LEN] {
    const TOL: f64 = 1e-8;
    const MAX_SWEEPS: usize = 500;

    let objective = |q: &[f64; PLAN_LEN]| -> f64 {
        let mut theta = indoor0;
        let mut obj = 0.0;
        for k in 0..PLAN_LEN {
            theta += leak * (outdoor[k] - theta) - cool_per_mw * q[k];
            let over = (theta - center).abs() - halfband;
            let disc = if over > 0.0 { over } else { 0.0 };
            obj += prices[k] * q[k] * DT_H + weight * disc * disc;
        }
        obj
    };

    // shift the previous plan one period forward
    let mut q = [0.0; PLAN_LEN];
    q[..PLAN_LEN - 1].copy_from_slice(&warm_start[1..]);
    q[PLAN_LEN - 1] = warm_start[PLAN_LEN - 1];
    for v in q.iter_mut() {
        *v = v.clamp(0.0, hvac_max);
    }

    let mut obj = objective(&q);
    let retain = 1.0 - leak;
    for _ in 0..MAX_SWEEPS {
        for k in 0..PLAN_LEN {
            // temperatures with q[k] = 0, other coordinates fixed:
            // theta_j(x) = base[j] - sens[j] * x for j >= k
            let mut theta = indoor0;
            for j in 0..k {
                theta += leak * (outdoor[j] - theta) - cool_per_mw * q[j];
            }
            let mut base = [0.0; PLAN_LEN];
            for j in k..PLAN_LEN {
                let qj = if j == k { 0.0 } else { q[j] };
                theta += leak * (outdoor[j] - theta) - cool_per_mw * qj;
                base[j] = theta;
            }
            // d(obj)/dx = price_k * DT + 2w * sum_j disc'(theta_j) * (-sens_j),
            // nondecreasing in x; find its root by bisection on [0, max]
            let derivative = |x: f64| -> f64 {
                let mut d = prices[k] * DT_H;
                let mut sens = cool_per_mw;
                for j in k..PLAN_LEN {
                    let t = base[j] - sens * x;
                    let dev = t - center;
                    if dev > halfband {
                        d += 2.0 * weight * (dev - halfband) * (-sens);
                    } else if dev < -halfband {
                        d += 2.0 * weight * (dev + halfband) * (-sens);
                    }
                    sens *= retain;
                }
                d
            };
            let new_q = if derivative(0.0) >= 0.0 {
                0.0
            } else if derivative(hvac_max) <= 0.0 {
                hvac_max
            } else {
                let mut lo = 0.0f64;
                let mut hi = hvac_max;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if derivative(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            q[k] = new_q;
        }
        let new_obj = objective(&q);
        if obj - new_obj < TOL {
            break;
        }
        obj = new_obj;
    }
    q
}

/// Plan for the current period and horizon: total MW per slot.
pub fn consumer_decide(
    spec: &ConsumerSpec,
    forecast: &[f64; PLAN_LEN],
    state: &ConsumerState,
    t: usize,
    outdoor_c: &[f64],
) -> Result<[f64; PLAN_LEN], SimError> {
    let consumer = spec.resolve()?;
    Ok(consumer.decide(forecast, state, t, outdoor_c).total_mw)
}
