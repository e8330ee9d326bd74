//! Closed-loop experiments: plant, framers and release law integrated jointly.

use serde::{Deserialize, Serialize};

use crate::control::{control_at, AdultLawParams, LawChoice};
use crate::error::{Error, Result};
use crate::integrator::{integrate, SolverConfig, SolverStats};
use crate::model::{ControlInput, ModelParams, PopulationState, DIM};
use crate::observer::{
    encloses, encloses_slack, observer_drift, validate_gains, GainSpec, ObserverPair, OutputMap,
};

/// Joint state layout: plant, then `x_minus`, then `x_plus`.
pub const JOINT_DIM: usize = 3 * DIM;

/// Fraction of the horizon used for tail statistics.
pub const TAIL_FRACTION: f64 = 0.2;

/// Enclosure slack in units of the solver's absolute tolerance.
pub const ENCLOSURE_SLACK_FACTOR: f64 = 10.0;

/// Tolerances of the reference experiments. Plant and upper framer share the
/// same limit, and near it the output injection keeps them only ~1e-6 apart;
/// the global error must stay well below that for the enclosure to be visible.
pub fn reference_solver() -> SolverConfig {
    SolverConfig {
        rel_tol: 1e-9,
        abs_tol: 1e-11,
        ..SolverConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub law: LawChoice,
    pub x0: PopulationState,
    pub obs0: ObserverPair,
    pub output_matrix: OutputMap,
    pub gains: GainSpec,
    /// Measurement bounds are `noise_lo * y` and `noise_hi * y`.
    pub noise_lo: f64,
    pub noise_hi: f64,
    pub solver: SolverConfig,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Uninfected tail maxima must fall below this to count as converged.
    pub conv_tol: f64,
    /// Allowed relative shortfall of the infected tail minima.
    pub conv_margin: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        adult_scenario()
    }
}

fn reference_base(name: &str, law: LawChoice) -> Scenario {
    let params = ModelParams::reference();
    let upper = PopulationState::new(
        2.0 * params.l_u_star(),
        2.0 * params.a_u_star(),
        0.05 * params.l_w_star(),
        0.05 * params.a_w_star(),
    );
    Scenario {
        name: name.into(),
        params,
        law,
        x0: params.disease_free(),
        obs0: ObserverPair::from_bounds(PopulationState::default(), upper),
        output_matrix: OutputMap::default(),
        gains: GainSpec::default(),
        noise_lo: 0.8,
        noise_hi: 1.2,
        solver: reference_solver(),
        t_end: 100.0,
        sample_dt: 0.1,
        conv_tol: 1e-3,
        conv_margin: 0.01,
    }
}

/// Release of infected adults, `k = gamma_W`, `k_U = 1.1 (R0_U - 1)`.
pub fn adult_scenario() -> Scenario {
    let lp = AdultLawParams::reference(&ModelParams::reference());
    reference_base("adult-release", LawChoice::adult(lp))
}

/// Release of infected larvae at `u_L = L_U^+ L_W^+`.
pub fn larvae_scenario() -> Scenario {
    reference_base("larvae-release", LawChoice::larvae())
}

/// The two reference experiments: adult release then larvae release.
pub fn default_scenarios() -> (Scenario, Scenario) {
    (adult_scenario(), larvae_scenario())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        self.params.validate()?;
        self.law.validate(&self.params)?;
        self.x0.check_domain("x0")?;
        self.obs0.check_domain()?;
        if !(self.noise_lo > 0.0 && self.noise_lo <= 1.0 && self.noise_hi >= 1.0)
            || !self.noise_hi.is_finite()
        {
            return bad(format!(
                "need 0 < noise_lo <= 1 <= noise_hi (got {}, {})",
                self.noise_lo, self.noise_hi
            ));
        }
        if !encloses(&self.obs0, &self.x0) {
            return bad("initial observer does not enclose x0 (x_- <= x0 <= x_+ in the cone order)".into());
        }
        let report = validate_gains(&self.gains, &self.output_matrix)?;
        if !report.observer_conditions_hold() {
            let v = report
                .violations
                .iter()
                .find(|v| v.condition != crate::observer::GainCondition::OutputSign)
                .expect("a failing observer condition has a violation");
            return bad(format!(
                "gains violate {} ({}) at {}[{},{}] = {}",
                v.condition.label(),
                v.condition.statement(),
                v.matrix,
                v.row + 1,
                v.col + 1,
                v.value
            ));
        }
        self.solver.validate()?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.sample_dt > 0.0) || self.sample_dt > self.t_end {
            return bad(format!(
                "sample_dt must lie in (0, t_end], got {}",
                self.sample_dt
            ));
        }
        if !(self.conv_tol > 0.0) || !(0.0..1.0).contains(&self.conv_margin) {
            return bad(format!(
                "need conv_tol > 0 and 0 <= conv_margin < 1 (got {}, {})",
                self.conv_tol, self.conv_margin
            ));
        }
        Ok(())
    }
}

/// Interval measurement `(y_-, y_+)` around `y = C x`.
///
/// Each channel takes the min and max of `lo * y_i` and `hi * y_i`, so the
/// ordering `y_- <= y <= y_+` survives channels with negative sign.
pub fn measurement_bounds(c: &OutputMap, x: &[f64; DIM], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    c.apply(x)
        .into_iter()
        .map(|y| {
            let (a, b) = (lo * y, hi * y);
            (a.min(b), a.max(b))
        })
        .unzip()
}

/// Sampled closed-loop solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    pub observer_states: Vec<ObserverPair>,
    pub controls: Vec<ControlInput>,
    pub measurements: Vec<(Vec<f64>, Vec<f64>)>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn tail_start(&self) -> usize {
        let (Some(t0), Some(t1)) = (self.times.first(), self.times.last()) else {
            return 0;
        };
        let cut = t1 - TAIL_FRACTION * (t1 - t0);
        self.times.iter().position(|t| *t >= cut - 1e-12).unwrap_or(0)
    }

    /// Indices of the samples in the last 20% of the horizon.
    pub fn tail(&self) -> std::ops::Range<usize> {
        self.tail_start()..self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseTotals {
    pub u_l: f64,
    pub u_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub final_time: f64,
    pub final_state: PopulationState,
    pub final_observer: ObserverPair,
    pub final_control: ControlInput,
    /// Max of `L_U` and of `A_U` over the tail.
    pub uninfected_sup_tail: [f64; 2],
    /// Min of `L_W` and of `A_W` over the tail.
    pub infected_inf_tail: [f64; 2],
    /// Trapezoidal time integrals of the releases.
    pub total_release: ReleaseTotals,
    pub peak_u_a: f64,
    pub peak_u_l: f64,
    pub enclosure_violations: usize,
    pub converged: bool,
    pub solver: SolverStats,
}

/// Integrates a validated scenario and summarizes it.
pub fn run_scenario(s: &Scenario) -> Result<(Trajectory, RunReport)> {
    s.validate()?;
    let traj = simulate(s)?;
    let report = summarize(s, &traj);
    log::debug!("{}: {:?}", s.name, report.solver);
    if report.solver.clipped > 0 {
        log::warn!(
            "{}: {} undershoots clipped to zero",
            s.name,
            report.solver.clipped
        );
    }
    if report.enclosure_violations > 0 {
        log::warn!(
            "{}: observer lost the state at {} samples",
            s.name,
            report.enclosure_violations
        );
    }
    Ok((traj, report))
}

fn split(z: &[f64]) -> ([f64; DIM], ObserverPair) {
    let x = [z[0], z[1], z[2], z[3]];
    let obs = ObserverPair {
        x_minus: [z[4], z[5], z[6], z[7]],
        x_plus: [z[8], z[9], z[10], z[11]],
    };
    (x, obs)
}

fn simulate(s: &Scenario) -> Result<Trajectory> {
    let field = |t: f64, z: &[f64], dz: &mut [f64]| {
        let (x, obs) = split(z);
        let u = control_at(&s.law, &s.params, &obs, t);
        let (y_minus, y_plus) = measurement_bounds(&s.output_matrix, &x, s.noise_lo, s.noise_hi);
        let mut dx = s.params.drift(&x);
        for (d, b) in dx.iter_mut().zip(u.as_state_increment()) {
            *d += b;
        }
        let (dm, dp) = observer_drift(&s.params, &obs, &u, &y_minus, &y_plus, &s.gains, &s.output_matrix);
        dz[..DIM].copy_from_slice(&dx);
        dz[DIM..2 * DIM].copy_from_slice(&dm);
        dz[2 * DIM..].copy_from_slice(&dp);
    };

    let mut z0 = Vec::with_capacity(JOINT_DIM);
    z0.extend_from_slice(&s.x0.to_array());
    z0.extend_from_slice(&s.obs0.x_minus);
    z0.extend_from_slice(&s.obs0.x_plus);

    let sol = integrate(field, &z0, (0.0, s.t_end), &s.solver, s.sample_dt)?;

    let n = sol.times.len();
    let mut traj = Trajectory {
        times: sol.times,
        states: Vec::with_capacity(n),
        observer_states: Vec::with_capacity(n),
        controls: Vec::with_capacity(n),
        measurements: Vec::with_capacity(n),
        stats: sol.stats,
    };
    for (t, z) in traj.times.iter().zip(&sol.states) {
        let (x, obs) = split(z);
        traj.controls.push(control_at(&s.law, &s.params, &obs, *t));
        traj.measurements
            .push(measurement_bounds(&s.output_matrix, &x, s.noise_lo, s.noise_hi));
        traj.states.push(PopulationState::from_array(x));
        traj.observer_states.push(obs);
    }
    Ok(traj)
}

fn trapezoid(times: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    times
        .windows(2)
        .zip(v.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

fn summarize(s: &Scenario, traj: &Trajectory) -> RunReport {
    let tail = traj.tail();
    let tail_states = &traj.states[tail];
    let sup = |f: fn(&PopulationState) -> f64| tail_states.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let inf = |f: fn(&PopulationState) -> f64| tail_states.iter().map(f).fold(f64::INFINITY, f64::min);
    let uninfected_sup_tail = [sup(|x| x.l_u), sup(|x| x.a_u)];
    let infected_inf_tail = [inf(|x| x.l_w), inf(|x| x.a_w)];

    let slack = ENCLOSURE_SLACK_FACTOR * s.solver.abs_tol;
    let enclosure_violations = traj
        .observer_states
        .iter()
        .zip(&traj.states)
        .filter(|(obs, x)| !encloses_slack(obs, &x.to_array(), slack))
        .count();

    let total_release = ReleaseTotals {
        u_l: trapezoid(&traj.times, traj.controls.iter().map(|u| u.u_l)),
        u_a: trapezoid(&traj.times, traj.controls.iter().map(|u| u.u_a)),
    };
    let peak = |f: fn(&ControlInput) -> f64| traj.controls.iter().map(f).fold(0.0, f64::max);

    let target = [s.params.l_w_star(), s.params.a_w_star()];
    let converged = uninfected_sup_tail.iter().all(|v| *v < s.conv_tol)
        && infected_inf_tail
            .iter()
            .zip(target)
            .all(|(v, t)| *v >= (1.0 - s.conv_margin) * t);

    RunReport {
        name: s.name.clone(),
        final_time: *traj.times.last().unwrap_or(&0.0),
        final_state: *traj.states.last().unwrap_or(&PopulationState::default()),
        final_observer: *traj.observer_states.last().unwrap_or(&ObserverPair::default()),
        final_control: *traj.controls.last().unwrap_or(&ControlInput::ZERO),
        uninfected_sup_tail,
        infected_inf_tail,
        total_release,
        peak_u_a: peak(|u| u.u_a),
        peak_u_l: peak(|u| u.u_l),
        enclosure_violations,
        converged,
        solver: traj.stats,
    }
}
