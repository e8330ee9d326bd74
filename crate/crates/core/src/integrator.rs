//! Explicit Runge-Kutta integration with uniform sampling.
//!
//! The adaptive method is the Dormand-Prince 5(4) pair with its fourth-order
//! continuous extension for output between steps. The fixed-step classical
//! RK4 scheme serves as an independent cross-check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t} (h = {h:e}); the problem may be too stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },

    #[error("component {component} reached {value:e} at t = {t}, below the undershoot tolerance")]
    NegativeUndershoot { t: f64, component: usize, value: f64 },

    #[error("step limit of {limit} exceeded at t = {t}")]
    TooManySteps { t: f64, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AdaptiveRk45,
    /// Classical RK4 with step `h_init`, shortened so samples fall on step ends.
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub method: Method,
    /// Hard cap on attempted steps (accepted plus rejected).
    pub max_steps: usize,
    /// Clip undershoot within `abs_tol` to zero. Deeper undershoot makes the
    /// adaptive method retry with shorter steps and fails if that does not help.
    pub nonnegative: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            h_init: 1e-3,
            h_max: 1.0,
            method: Method::AdaptiveRk45,
            max_steps: 2_000_000,
            nonnegative: true,
        }
    }
}

impl SolverConfig {
    pub fn fixed_rk4(h: f64) -> Self {
        Self {
            h_init: h,
            h_max: h,
            method: Method::FixedRk4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |msg: String| Err(IntegrationError::InvalidConfig(msg));
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            ));
        }
        if !(self.h_init > 0.0) || !(self.h_init <= self.h_max) || !self.h_max.is_finite() {
            return bad(format!(
                "need 0 < h_init <= h_max (h_init = {}, h_max = {})",
                self.h_init, self.h_max
            ));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Components reset from a small negative value to zero.
    pub clipped: usize,
}

/// States sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: SolverStats,
}

impl Solution {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Uniform sample instants `t0, t0 + dt, ...` up to and including `t1`
/// (the last instant is snapped onto `t1` when within rounding).
pub fn sample_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = (span / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
    if let Some(last) = times.last_mut() {
        if (*last - t1).abs() <= 1e-9 * dt {
            *last = t1;
        }
    }
    times
}

struct Evaluator<F> {
    field: F,
    evaluations: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Evaluator<F> {
    fn eval(&mut self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), IntegrationError> {
        (self.field)(t, x, dx);
        self.evaluations += 1;
        if dx.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(IntegrationError::NonFinite { t })
        }
    }
}

fn enforce_nonnegative(
    x: &mut [f64],
    t: f64,
    cfg: &SolverConfig,
    clipped: &mut usize,
) -> Result<(), IntegrationError> {
    if !cfg.nonnegative {
        return Ok(());
    }
    for (i, v) in x.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -cfg.abs_tol {
                return Err(IntegrationError::NegativeUndershoot {
                    t,
                    component: i,
                    value: *v,
                });
            }
            *v = 0.0;
            *clipped += 1;
        }
    }
    Ok(())
}

/// Integrates `x' = field(t, x)` over `t_span`, returning samples every `sample_dt`.
pub fn integrate<F>(
    field: F,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &SolverConfig,
    sample_dt: f64,
) -> Result<Solution, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(IntegrationError::InvalidConfig(format!(
            "need t1 > t0 (got [{t0}, {t1}])"
        )));
    }
    if !(sample_dt > 0.0) {
        return Err(IntegrationError::InvalidConfig(format!(
            "sample_dt must be positive, got {sample_dt}"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrationError::InvalidConfig(
            "initial state is not finite".into(),
        ));
    }
    let times = sample_times(t0, t1, sample_dt);
    let mut ev = Evaluator {
        field,
        evaluations: 0,
    };
    match cfg.method {
        Method::AdaptiveRk45 => dopri5(&mut ev, x0, &times, cfg),
        Method::FixedRk4 => rk4(&mut ev, x0, &times, cfg),
    }
}

fn rk4<F: FnMut(f64, &[f64], &mut [f64])>(
    ev: &mut Evaluator<F>,
    x0: &[f64],
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, IntegrationError> {
    let n = x0.len();
    let mut stats = SolverStats::default();
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(times.len());
    states.push(x.clone());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];

    for w in times.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let substeps = ((tb - ta) / cfg.h_init - 1e-9).ceil().max(1.0) as usize;
        let h = (tb - ta) / substeps as f64;
        for s in 0..substeps {
            if stats.accepted >= cfg.max_steps {
                return Err(IntegrationError::TooManySteps {
                    t: ta,
                    limit: cfg.max_steps,
                });
            }
            let t = ta + s as f64 * h;
            ev.eval(t, &x, &mut k1)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            ev.eval(t + 0.5 * h, &tmp, &mut k2)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            ev.eval(t + 0.5 * h, &tmp, &mut k3)?;
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            ev.eval(t + h, &tmp, &mut k4)?;
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            stats.accepted += 1;
            enforce_nonnegative(&mut x, t + h, cfg, &mut stats.clipped)?;
        }
        states.push(x.clone());
    }
    stats.evaluations = ev.evaluations;
    Ok(Solution {
        times: times.to_vec(),
        states,
        stats,
    })
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error coefficients: fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_UNDERSHOOT_RETRIES: usize = 10;

fn first_undershoot(x: &[f64], t: f64, cfg: &SolverConfig) -> Option<IntegrationError> {
    if !cfg.nonnegative {
        return None;
    }
    x.iter()
        .position(|v| *v < -cfg.abs_tol)
        .map(|component| IntegrationError::NegativeUndershoot {
            t,
            component,
            value: x[component],
        })
}

fn dopri5<F: FnMut(f64, &[f64], &mut [f64])>(
    ev: &mut Evaluator<F>,
    x0: &[f64],
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, IntegrationError> {
    let n = x0.len();
    let t_end = *times.last().expect("sample grid is never empty");
    let mut stats = SolverStats::default();
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.to_vec());
    let mut next_sample = 1;

    let mut t = times[0];
    let mut x = x0.to_vec();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut h = cfg.h_init.min(cfg.h_max);
    let mut first_same_as_last = false;
    let mut undershoot_retries = 0;
    ev.eval(t, &x, &mut k[0])?;

    while next_sample < times.len() {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(IntegrationError::TooManySteps {
                t,
                limit: cfg.max_steps,
            });
        }
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepSizeUnderflow { t, h });
        }
        if first_same_as_last {
            k.swap(0, 6);
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
        for i in 0..n {
            stage[i] = x[i] + h * A21 * k1[i];
        }
        ev.eval(t + C2 * h, &stage, k2)?;
        for i in 0..n {
            stage[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        ev.eval(t + C3 * h, &stage, k3)?;
        for i in 0..n {
            stage[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        ev.eval(t + C4 * h, &stage, k4)?;
        for i in 0..n {
            stage[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        ev.eval(t + C5 * h, &stage, k5)?;
        for i in 0..n {
            stage[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        ev.eval(t + h, &stage, k6)?;
        for i in 0..n {
            x_new[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if last_step { t_end } else { t + h };
        ev.eval(t_new, &x_new, k7)?;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        let undershoot = if err <= 1.0 {
            first_undershoot(&x_new, t_new, cfg).or_else(|| {
                times[next_sample..]
                    .iter()
                    .take_while(|ts| **ts < t_new)
                    .find_map(|ts| first_undershoot(&dense(&x, &x_new, &k, h, (ts - t) / h), *ts, cfg))
            })
        } else {
            None
        };
        if let Some(e) = undershoot {
            // An undershoot the error norm let through: retry shorter, give up if it persists.
            if undershoot_retries == MAX_UNDERSHOOT_RETRIES {
                return Err(e);
            }
            undershoot_retries += 1;
            stats.rejected += 1;
            first_same_as_last = false;
            h *= 0.5;
            continue;
        }

        if err <= 1.0 {
            undershoot_retries = 0;
            stats.accepted += 1;
            while next_sample < times.len() && times[next_sample] <= t_new {
                let ts = times[next_sample];
                let mut sample = if ts == t_new {
                    x_new.clone()
                } else {
                    dense(&x, &x_new, &k, h, (ts - t) / h)
                };
                enforce_nonnegative(&mut sample, ts, cfg, &mut stats.clipped)?;
                states.push(sample);
                next_sample += 1;
            }
            let clipped_before = stats.clipped;
            enforce_nonnegative(&mut x_new, t_new, cfg, &mut stats.clipped)?;
            std::mem::swap(&mut x, &mut x_new);
            t = t_new;
            if stats.clipped != clipped_before {
                // The stored derivative belongs to the unclipped state.
                ev.eval(t, &x, &mut k[6])?;
            }
            first_same_as_last = true;
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            h = (h * fac).min(cfg.h_max);
        } else {
            stats.rejected += 1;
            first_same_as_last = false;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
        }
    }
    stats.evaluations = ev.evaluations;
    Ok(Solution {
        times: times.to_vec(),
        states,
        stats,
    })
}

fn dense(x0: &[f64], x1: &[f64], k: &[Vec<f64>; 7], h: f64, theta: f64) -> Vec<f64> {
    let theta1 = 1.0 - theta;
    (0..x0.len())
        .map(|i| {
            let ydiff = x1[i] - x0[i];
            let bspl = h * k[0][i] - ydiff;
            let r4 = ydiff - h * k[6][i] - bspl;
            let r5 =
                h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            x0[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)))
        })
        .collect()
}
