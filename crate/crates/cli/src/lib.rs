//! Command-line front end for the `wolbachia` simulator.
//!
//! Every command returns a process exit code:
//! 0 success, 2 invalid input, 3 numerical failure, 4 gain check failed.
//! Write failures on an existing output directory exit with 1.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;
use wolbachia::io::{
    apply_overrides, load_scenario, parse_override_value, read_file, report_json, scenario_json,
    write_trajectory_csv, FileError,
};
use wolbachia::sweep::{expand_grid, run_sweep, write_summary_csv, Axis, GridSpec, SweepError};
use wolbachia::{
    adult_scenario, equilibria, larvae_scenario, run_scenario, validate_gains, GainCondition, GainSpec,
    ModelParams, OutputMap, Scenario,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_GAINS: i32 = 4;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "WOLBACHIA_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "wolbachia",
    version,
    about = "Simulate observer-based Wolbachia releases"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trajectory.csv and report.json.
    Simulate(SimulateArgs),
    /// Print the four equilibria and their stability.
    Equilibria(EquilibriaArgs),
    /// Check gain and output matrices against the observer sign conditions.
    CheckGains(CheckGainsArgs),
    /// Run a Cartesian grid of scenario variants.
    Sweep(SweepArgs),
    /// Print a reference scenario as JSON.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Adult,
    Larvae,
}

impl Preset {
    pub fn scenario(self) -> Scenario {
        match self {
            Preset::Adult => adult_scenario(),
            Preset::Larvae => larvae_scenario(),
        }
    }
}

#[derive(Debug, Args)]
pub struct BaseScenario {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,

    /// Built-in scenario, used when no file is given.
    #[arg(long, value_enum, default_value = "adult")]
    pub preset: Preset,

    /// Override a field, e.g. `--set law.adult.k_u=50` (repeatable).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub base: BaseScenario,

    /// Output directory; must exist.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    /// Parameter JSON file (`gamma_u`, `gamma_w`, `r0_u`, `r0_w`).
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub gamma_u: Option<f64>,
    #[arg(long)]
    pub gamma_w: Option<f64>,
    #[arg(long)]
    pub r0_u: Option<f64>,
    #[arg(long)]
    pub r0_w: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckGainsArgs {
    /// JSON file with `gains` and `output_matrix`; missing parts take the reference values.
    #[arg(long)]
    pub gains: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: BaseScenario,

    /// Grid JSON file: `{"axes": [{"path": ..., "values": [...]}]}`.
    #[arg(long)]
    pub grid: Option<PathBuf>,

    /// Extra axis, e.g. `--axis noise_hi=1.0,1.2,1.5` (repeatable).
    #[arg(long = "axis", value_name = "PATH=V1,V2,...")]
    pub axes: Vec<String>,

    /// Output directory; must exist.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "adult")]
    pub preset: Preset,
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        let code = match &e {
            FileError::Invalid(inner) if inner.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<wolbachia::Error> for Failure {
    fn from(e: wolbachia::Error) -> Self {
        FileError::Invalid(e).into()
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        Failure::invalid(e.to_string())
    }
}

/// Runs a parsed command line, printing results to `out` and errors to stderr.
pub fn run(cli: Cli, out: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Equilibria(a) => cmd_equilibria(&a, out),
        Command::CheckGains(a) => cmd_check_gains(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Scenario(a) => writeln!(out, "{}", scenario_json(&a.preset.scenario()))
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn split_assignment(raw: &str) -> Result<(&str, &str), Failure> {
    raw.split_once('=')
        .filter(|(p, _)| !p.is_empty())
        .ok_or_else(|| Failure::invalid(format!("expected PATH=VALUE, got `{raw}`")))
}

/// Loads the base scenario, applies `--set` overrides and validates.
pub fn resolve_scenario(base: &BaseScenario) -> Result<Scenario, Failure> {
    let scenario = match &base.scenario {
        Some(path) => {
            let (s, notices) = load_scenario(path)?;
            for n in notices {
                log::info!("{}: {n}", path.display());
            }
            s
        }
        None => base.preset.scenario(),
    };
    let overrides = base
        .overrides
        .iter()
        .map(|raw| split_assignment(raw).map(|(p, v)| (p.to_owned(), parse_override_value(v))))
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = apply_overrides(&scenario, &overrides)?;
    scenario.validate()?;
    Ok(scenario)
}

fn require_dir(dir: &Path) -> Result<(), Failure> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Failure::invalid(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let scenario = resolve_scenario(&args.base)?;
    require_dir(&args.out)?;
    let (traj, report) = run_scenario(&scenario)?;

    let csv_path = args.out.join("trajectory.csv");
    let file = File::create(&csv_path).map_err(|e| Failure::io(&csv_path, e))?;
    write_trajectory_csv(BufWriter::new(file), &traj).map_err(|e| Failure::io(&csv_path, e))?;
    let report_path = args.out.join("report.json");
    write_text(&report_path, &report_json(&report))?;

    let x = report.final_state;
    writeln!(
        out,
        "{}: converged = {}, final (L_U, A_U, L_W, A_W) = ({:.6e}, {:.6e}, {:.6}, {:.6}), \
         enclosure violations = {}, total release (u_L, u_A) = ({:.6}, {:.6})",
        report.name,
        report.converged,
        x.l_u,
        x.a_u,
        x.l_w,
        x.a_w,
        report.enclosure_violations,
        report.total_release.u_l,
        report.total_release.u_a,
    )
    .and_then(|_| writeln!(out, "wrote {} and {}", csv_path.display(), report_path.display()))
    .map_err(|e| Failure::io(Path::new("<stdout>"), e))
}

pub fn cmd_equilibria(args: &EquilibriaArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut p = match &args.params {
        Some(path) => serde_json::from_str::<ModelParams>(&read_file(path)?).map_err(FileError::from)?,
        None => ModelParams::reference(),
    };
    for (slot, flag) in [
        (&mut p.gamma_u, args.gamma_u),
        (&mut p.gamma_w, args.gamma_w),
        (&mut p.r0_u, args.r0_u),
        (&mut p.r0_w, args.r0_w),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    let set = equilibria(&p, wolbachia::model::COEXISTENCE_TOL)?;
    let mut text = format!(
        "{:<22}{:>14}{:>14}{:>14}{:>14}  {:<10}{:>14}\n",
        "equilibrium", "L_U", "A_U", "L_W", "A_W", "stability", "max Re(eig)"
    );
    for (name, e) in set.iter() {
        let x = e.state;
        text += &format!(
            "{name:<22}{:>14.6}{:>14.6}{:>14.6}{:>14.6}  {:<10}{:>14.6}\n",
            x.l_u,
            x.a_u,
            x.l_w,
            x.a_w,
            format!("{:?}", e.stability).to_lowercase(),
            e.spectral_abscissa
        );
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::io(Path::new("<stdout>"), e))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainFile {
    pub gains: GainSpec,
    pub output_matrix: OutputMap,
}

pub fn cmd_check_gains(args: &CheckGainsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let file: GainFile = match &args.gains {
        Some(path) => serde_json::from_str(&read_file(path)?).map_err(FileError::from)?,
        None => GainFile::default(),
    };
    let report = validate_gains(&file.gains, &file.output_matrix)?;
    let mut text = String::new();
    for c in GainCondition::ALL {
        let status = if report.passes(c) { "pass" } else { "FAIL" };
        text += &format!("{:<22}{:<40}{status}\n", c.label(), c.statement());
        for v in report.of(c) {
            text += &format!(
                "    entry ({}, {}) of the {} product is {}\n",
                v.row + 1,
                v.col + 1,
                v.matrix,
                v.value
            );
        }
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    if report.all_pass() {
        Ok(())
    } else {
        let failed: Vec<_> = GainCondition::ALL
            .iter()
            .filter(|c| !report.passes(**c))
            .map(|c| c.label())
            .collect();
        Err(Failure {
            code: EXIT_GAINS,
            message: format!("gain conditions violated: {}", failed.join(", ")),
        })
    }
}

fn parse_axis(raw: &str) -> Result<Axis, Failure> {
    let (path, list) = split_assignment(raw)?;
    let values: Vec<Value> = list
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_override_value(v.trim()))
        .collect();
    Ok(Axis {
        path: path.to_owned(),
        values,
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let base = resolve_scenario(&args.base)?;
    let mut grid = match &args.grid {
        Some(path) => serde_json::from_str::<GridSpec>(&read_file(path)?).map_err(FileError::from)?,
        None => GridSpec::default(),
    };
    for raw in &args.axes {
        grid.axes.push(parse_axis(raw)?);
    }
    let cells = expand_grid(&base, &grid)?;
    require_dir(&args.out)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    log::info!("running {} cells on {workers} workers", cells.len());
    let outcomes = run_sweep(&cells, workers)?;

    let width = cells.len().saturating_sub(1).to_string().len().max(3);
    let mut failed = 0;
    for o in &outcomes {
        let path = args.out.join(format!("cell-{:0width$}.json", o.index));
        let text = match &o.result {
            Ok(report) => report_json(report),
            Err(e) => {
                failed += 1;
                log::warn!("cell {} failed: {e}", o.index);
                serde_json::to_string_pretty(&serde_json::json!({ "error": e })).expect("json")
            }
        };
        write_text(&path, &text)?;
    }
    let summary = args.out.join("summary.csv");
    let file = File::create(&summary).map_err(|e| Failure::io(&summary, e))?;
    write_summary_csv(BufWriter::new(file), &grid, &outcomes).map_err(|e| Failure::io(&summary, e))?;
    writeln!(
        out,
        "{} cells, {} converged, {failed} failed; wrote {}",
        outcomes.len(),
        outcomes
            .iter()
            .filter(|o| o.result.as_ref().is_ok_and(|r| r.converged))
            .count(),
        summary.display()
    )
    .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    if failed > 0 {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: format!("{failed} of {} cells failed numerically", outcomes.len()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_are_json_or_strings() {
        let axis = parse_axis("law.tag=adult,larvae").unwrap();
        assert_eq!(axis.path, "law.tag");
        assert_eq!(axis.values, vec![Value::from("adult"), Value::from("larvae")]);
        let axis = parse_axis("noise_hi=1.0, 1.5").unwrap();
        assert_eq!(axis.values, vec![Value::from(1.0), Value::from(1.5)]);
        assert!(parse_axis("noise_hi=").unwrap().values.is_empty());
        assert_eq!(parse_axis("=1").unwrap_err().code, EXIT_INVALID);
        assert_eq!(parse_axis("noise_hi").unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn overrides_apply_before_validation() {
        let base = BaseScenario {
            scenario: None,
            preset: Preset::Larvae,
            overrides: vec!["t_end=7".into(), "name=short".into()],
        };
        let s = resolve_scenario(&base).unwrap();
        assert_eq!((s.t_end, s.name.as_str()), (7.0, "short"));

        let base = BaseScenario {
            overrides: vec!["noise_lo=2".into()],
            ..base
        };
        assert_eq!(resolve_scenario(&base).unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn numeric_errors_map_to_exit_3() {
        let e = wolbachia::Error::from(wolbachia::IntegrationError::NonFinite { t: 1.0 });
        assert_eq!(Failure::from(e).code, EXIT_NUMERIC);
        let e = wolbachia::Error::InvalidScenario("x".into());
        assert_eq!(Failure::from(e).code, EXIT_INVALID);
    }
}
