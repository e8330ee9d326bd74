//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wolbachia::model::{order_leq_slack, DIM};
use wolbachia::scenario::{reference_solver, ENCLOSURE_SLACK_FACTOR};
use wolbachia::{
    adult_scenario, auxiliary_field, equilibria, infestation_pressure_field, integrate, larvae_scenario,
    run_scenario, validate_gains, GainCondition, GainSpec, Method, ModelParams, OutputMap, RunReport,
    Scenario, Side, SolverConfig, Trajectory,
};
use wolbachia_cli::{cmd_simulate, BaseScenario, Preset, SimulateArgs};

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 11] = [
        ("equilibrium values", equilibrium_values),
        ("adult release reaches complete infestation", adult_release),
        ("larvae release reaches complete infestation", larvae_release),
        ("adult release differential inequality", differential_inequality),
        ("adult release vanishes", vanishing_control),
        ("order preservation", order_preservation),
        ("bistability", bistability),
        ("comparison systems", comparison_systems),
        ("adaptive and fixed-step agree", cross_integrator),
        ("gain validation", gain_validation),
        ("simulate is deterministic", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{ms:.1} ms]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{ms:.1} ms]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn equilibrium_values() -> Result<String, String> {
    let p = ModelParams::reference();
    let start = Instant::now();
    let set = equilibria(&p, wolbachia::model::COEXISTENCE_TOL).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let printed = [
        (set.disease_free.state.to_array(), [44.0, 55.4, 0.0, 0.0]),
        (set.complete_infestation.state.to_array(), [0.0, 0.0, 33.2, 33.5]),
    ];
    for (got, want) in printed {
        let rounded = got.map(|v| round_sig(v, 3));
        ensure(rounded == want, || {
            format!("{got:?} rounds to {rounded:?}, expected {want:?}")
        })?;
    }
    ensure(elapsed < Duration::from_millis(1), || format!("took {elapsed:?}"))?;
    let (df, ci) = (set.disease_free.state, set.complete_infestation.state);
    Ok(format!(
        "disease-free ({:.4}, {:.4}, 0, 0), complete infestation (0, 0, {:.4}, {:.4}) in {elapsed:?}",
        df.l_u, df.a_u, ci.l_w, ci.a_w
    ))
}

fn run(s: &Scenario) -> Result<(Trajectory, RunReport), String> {
    run_scenario(s).map_err(|e| e.to_string())
}

fn reaches_complete_infestation(s: Scenario) -> Result<String, String> {
    let start = Instant::now();
    let (_, r) = run(&s)?;
    let elapsed = start.elapsed();
    let x = r.final_state;
    let target = (s.params.l_w_star(), s.params.a_w_star());
    ensure(x.l_u <= 1e-3 && x.a_u <= 1e-3, || {
        format!("uninfected left: {x:?}")
    })?;
    ensure(x.l_w >= 0.99 * target.0 && x.a_w >= 0.99 * target.1, || {
        format!("infected short: {x:?}")
    })?;
    ensure(r.enclosure_violations == 0, || {
        format!("{} enclosure violations", r.enclosure_violations)
    })?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "final (L_U, A_U, L_W, A_W) = ({:.2e}, {:.2e}, {:.4}, {:.4}), 0 enclosure violations",
        x.l_u, x.a_u, x.l_w, x.a_w
    ))
}

fn adult_release() -> Result<String, String> {
    reaches_complete_infestation(adult_scenario())
}

fn larvae_release() -> Result<String, String> {
    reaches_complete_infestation(larvae_scenario())
}

fn differential_inequality() -> Result<String, String> {
    let s = adult_scenario();
    let lp = s.law.adult.expect("adult scenario has adult gains");
    let (traj, _) = run(&s)?;
    let w: Vec<f64> = traj.states.iter().map(|x| x.a_w - lp.k_u * x.a_u).collect();
    let slack = ENCLOSURE_SLACK_FACTOR * s.solver.abs_tol;
    let n = traj.len();
    let holds = (1..n - 1)
        .filter(|&i| {
            let dw = (w[i + 1] - w[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
            dw >= -lp.k * w[i] - slack
        })
        .count();
    let share = holds as f64 / (n - 2) as f64;
    ensure(share >= 0.99, || format!("holds at {holds}/{} samples", n - 2))?;
    Ok(format!(
        "holds at {holds}/{} samples ({:.2}%)",
        n - 2,
        100.0 * share
    ))
}

fn vanishing_control() -> Result<String, String> {
    let (_, r) = run(&adult_scenario())?;
    let u = r.final_control.u_a;
    ensure(u < 1e-2, || format!("u_A(t_end) = {u:e}"))?;
    Ok(format!("u_A(t_end) = {u:e}, peak {:.1}", r.peak_u_a))
}

fn free_run(
    p: &ModelParams,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<f64>>, String> {
    let field = |_t: f64, x: &[f64], dx: &mut [f64]| dx.copy_from_slice(&p.drift(&[x[0], x[1], x[2], x[3]]));
    integrate(field, x0, (0.0, t_end), cfg, dt)
        .map(|s| s.states)
        .map_err(|e| e.to_string())
}

fn order_preservation() -> Result<String, String> {
    let start = Instant::now();
    let p = ModelParams::reference();
    let cfg = reference_solver();
    let hi = [
        2.0 * p.l_u_star(),
        2.0 * p.a_u_star(),
        2.0 * p.l_w_star(),
        2.0 * p.a_w_star(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for pair in 0..100 {
        let x: [f64; DIM] = std::array::from_fn(|i| rng.random_range(0.0..hi[i]));
        let y: [f64; DIM] = std::array::from_fn(|i| {
            if i < 2 {
                rng.random_range(0.0..=x[i])
            } else {
                rng.random_range(x[i]..=hi[i])
            }
        });
        let (sx, sy) = (
            free_run(&p, &x, 20.0, 0.1, &cfg)?,
            free_run(&p, &y, 20.0, 0.1, &cfg)?,
        );
        for (a, b) in sx.iter().zip(&sy) {
            let a = [a[0], a[1], a[2], a[3]];
            let b = [b[0], b[1], b[2], b[3]];
            ensure(order_leq_slack(&a, &b, 1e-6), || {
                format!("pair {pair}: {a:?} vs {b:?}")
            })?;
            let margin = (a[0] - b[0]).min(a[1] - b[1]).min(b[2] - a[2]).min(b[3] - a[3]);
            worst = worst.min(margin);
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 pairs ordered at every sample, smallest margin {worst:.2e}"
    ))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bistability() -> Result<String, String> {
    let p = ModelParams::reference();
    let cfg = reference_solver();
    let df = p.disease_free().to_array();
    let ci = p.complete_infestation().to_array();
    let end = |x0: [f64; DIM]| free_run(&p, &x0, 100.0, 100.0, &cfg).map(|s| s[s.len() - 1].clone());
    let d_df = sup_dist(&end([df[0], df[1], df[2] + 0.1, df[3] + 0.1])?, &df);
    let d_ci = sup_dist(&end([ci[0] + 0.1, ci[1] + 0.1, ci[2], ci[3]])?, &ci);
    ensure(d_df < 1e-3, || format!("distance to disease-free {d_df:e}"))?;
    ensure(d_ci < 1e-3, || {
        format!("distance to complete infestation {d_ci:e}")
    })?;
    Ok(format!(
        "returns within {d_df:.1e} of disease-free and {d_ci:.1e} of complete infestation"
    ))
}

fn planar_end(f: impl Fn([f64; 2]) -> [f64; 2], x0: [f64; 2], t_end: f64) -> Result<[f64; 2], String> {
    let field = |_t: f64, z: &[f64], dz: &mut [f64]| dz.copy_from_slice(&f([z[0].max(0.0), z[1].max(0.0)]));
    let sol = integrate(field, &x0, (0.0, t_end), &reference_solver(), t_end).map_err(|e| e.to_string())?;
    Ok([sol.last()[0], sol.last()[1]])
}

fn comparison_systems() -> Result<String, String> {
    let gamma = 0.99207;
    let extinct = planar_end(
        |la| auxiliary_field(gamma, 0.5, 0.0, la).unwrap(),
        [1.0, 1.0],
        50.0,
    )?;
    ensure(extinct.iter().all(|v| v.abs() < 1e-6), || {
        format!("R = 0.5 ends at {extinct:?}")
    })?;

    let settled = planar_end(
        |la| auxiliary_field(gamma, 34.2, 0.0, la).unwrap(),
        [1.0, 1.0],
        50.0,
    )?;
    let d = sup_dist(&settled, &[33.2, 33.466]);
    ensure(d < 1e-3, || format!("R = 34.2 ends at {settled:?}"))?;

    let p = ModelParams::reference();
    let (aw, lw) = (p.a_w_star(), p.l_w_star());
    let suppressed = planar_end(
        |la| infestation_pressure_field(&p, aw, lw, la).unwrap(),
        [44.0, 55.4],
        200.0,
    )?;
    ensure(suppressed.iter().all(|v| v.abs() < 1e-6), || {
        format!("suppression ends at {suppressed:?}")
    })?;
    Ok(format!(
        "R = 0.5 -> {:.1e}, R = 34.2 -> ({:.4}, {:.4}), suppression -> {:.1e}",
        extinct[0].abs().max(extinct[1].abs()),
        settled[0],
        settled[1],
        suppressed[0].abs().max(suppressed[1].abs())
    ))
}

fn cross_integrator() -> Result<String, String> {
    let mut adaptive = adult_scenario();
    adaptive.solver = SolverConfig {
        rel_tol: 1e-6,
        abs_tol: 1e-8,
        ..SolverConfig::default()
    };
    let mut fixed = adaptive.clone();
    fixed.solver = SolverConfig::fixed_rk4(1e-3);
    assert_eq!(fixed.solver.method, Method::FixedRk4);
    let (a, _) = run(&adaptive)?;
    let (b, _) = run(&fixed)?;
    ensure(a.times == b.times, || "sample grids differ".into())?;
    let joint = |t: &Trajectory, i: usize| {
        let o = t.observer_states[i];
        let mut v = t.states[i].to_array().to_vec();
        v.extend_from_slice(&o.x_minus);
        v.extend_from_slice(&o.x_plus);
        v
    };
    let mut worst = (0.0, 0.0, 0);
    for i in 0..a.len() {
        for (c, (u, v)) in joint(&a, i).iter().zip(joint(&b, i)).enumerate() {
            if v.abs() > 1e-3 {
                let rel = (u - v).abs() / v.abs();
                if rel > worst.0 {
                    worst = (rel, a.times[i], c);
                }
            }
        }
    }
    let (rel, t, c) = worst;
    ensure(rel <= 1e-4, || {
        format!("relative gap {rel:e} at t = {t}, joint component {c}")
    })?;
    Ok(format!(
        "largest relative gap {rel:.1e} (t = {t:.1}, joint component {c})"
    ))
}

fn product_violations(g: &GainSpec, c: &OutputMap) -> Vec<(GainCondition, String, usize, usize)> {
    let d = [-1.0, -1.0, 1.0, 1.0];
    let mut out = Vec::new();
    for (side, name) in [(Side::Minus, "M_-"), (Side::Plus, "M_+")] {
        let m = g.matrix(side);
        for i in 0..DIM {
            for k in 0..c.channels() {
                if d[i] * m[i][k] < 0.0 {
                    out.push((GainCondition::GainSign, name.to_owned(), i, k));
                }
            }
            for j in 0..DIM {
                let v: f64 = (0..c.channels())
                    .map(|k| d[i] * m[i][k] * c.rows[k][j] * d[j])
                    .sum();
                if v > 0.0 {
                    out.push((GainCondition::GainOutputCoupling, name.to_owned(), i, j));
                }
            }
        }
    }
    for k in 0..c.channels() {
        for j in 0..DIM {
            if c.rows[k][j] * d[j] > 0.0 {
                out.push((GainCondition::OutputSign, "C".to_owned(), k, j));
            }
        }
    }
    out
}

fn gain_validation() -> Result<String, String> {
    let (g, c) = (GainSpec::default(), OutputMap::default());
    let report = validate_gains(&g, &c).map_err(|e| e.to_string())?;
    ensure(report.all_pass(), || {
        format!("reference gains fail: {:?}", report.violations)
    })?;
    let mut cases = 0;
    for side in [Side::Minus, Side::Plus] {
        for row in [0, 2] {
            for col in 0..c.channels() {
                let mut bad = g.clone();
                let m = match side {
                    Side::Minus => &mut bad.m_minus,
                    Side::Plus => &mut bad.m_plus,
                };
                m[row][col] = -m[row][col];
                let report = validate_gains(&bad, &c).map_err(|e| e.to_string())?;
                let got: Vec<_> = report
                    .violations
                    .iter()
                    .map(|v| (v.condition, v.matrix.clone(), v.row, v.col))
                    .collect();
                let want = product_violations(&bad, &c);
                ensure(got == want, || {
                    format!("{side:?} ({row}, {col}): got {got:?}, expected {want:?}")
                })?;
                ensure(
                    got.iter()
                        .any(|v| v.0 == GainCondition::GainSign && v.2 == row && v.3 == col),
                    || format!("{side:?} ({row}, {col}) not reported as a gain-sign violation"),
                )?;
                ensure(report.passes(GainCondition::OutputSign), || {
                    "output-sign changed".into()
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "reference passes all three conditions; {cases} sign flips each fail gain-sign at the flipped entry"
    ))
}

fn determinism() -> Result<String, String> {
    let dirs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut csvs = Vec::new();
    for dir in &dirs {
        let dir = dir.as_ref().map_err(|e| e.to_string())?;
        let args = SimulateArgs {
            base: BaseScenario {
                scenario: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/larvae.json")),
                preset: Preset::Adult,
                overrides: Vec::new(),
            },
            out: dir.path().to_owned(),
        };
        cmd_simulate(&args, &mut std::io::sink()).map_err(|f| f.message)?;
        csvs.push(std::fs::read(dir.path().join("trajectory.csv")).map_err(|e| e.to_string())?);
    }
    ensure(!csvs[0].is_empty() && csvs[0] == csvs[1], || {
        "CSV outputs differ".into()
    })?;
    Ok(format!("two runs wrote identical {}-byte CSVs", csvs[0].len()))
}
