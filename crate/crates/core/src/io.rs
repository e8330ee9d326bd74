//! File formats: scenario JSON, trajectory CSV and run-report JSON.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::Error;
use crate::integrator::{SolverConfig, SolverStats};
use crate::model::{ControlInput, PopulationState};
use crate::observer::ObserverPair;
use crate::scenario::{RunReport, Scenario, Trajectory};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("override `{path}`: {message}")]
    Override { path: String, message: String },

    #[error(transparent)]
    Invalid(#[from] Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed trajectory table: {0}")]
    Table(String),
}

impl From<serde_json::Error> for FileError {
    fn from(e: serde_json::Error) -> Self {
        FileError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Nested objects whose missing keys are filled from defaults.
const DEFAULTED_OBJECTS: [&str; 4] = ["params", "law", "gains", "solver"];

fn default_document() -> Value {
    serde_json::to_value(Scenario::default()).expect("scenario serializes")
}

/// Defaults used for keys missing inside a nested object that is present.
fn nested_defaults(key: &str) -> Value {
    match key {
        // Only the optional law fields have defaults; `tag` is required.
        "law" => serde_json::json!({ "adult": null, "activation_time": 0.0 }),
        "solver" => serde_json::to_value(SolverConfig::default()).expect("solver serializes"),
        _ => default_document()[key].clone(),
    }
}

fn collect_missing(
    user: &Map<String, Value>,
    defaults: &Map<String, Value>,
    prefix: &str,
    out: &mut Vec<String>,
) {
    for (key, default) in defaults {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match user.get(key) {
            None => out.push(format!("`{path}` not given; using default {default}")),
            Some(Value::Object(inner)) if prefix.is_empty() && DEFAULTED_OBJECTS.contains(&key.as_str()) => {
                if let Value::Object(d) = nested_defaults(key) {
                    collect_missing(inner, &d, &path, out);
                }
            }
            Some(_) => {}
        }
    }
}

/// Parses a scenario document.
///
/// Unknown keys are rejected. Missing keys take their documented defaults
/// (the adult-release reference experiment); one notice per filled key is
/// returned alongside the scenario. The result is not yet validated.
pub fn parse_scenario(text: &str) -> Result<(Scenario, Vec<String>), FileError> {
    let scenario: Scenario = serde_json::from_str(text)?;
    let user: Value = serde_json::from_str(text)?;
    let mut notices = Vec::new();
    if let (Value::Object(u), Value::Object(d)) = (&user, &default_document()) {
        collect_missing(u, d, "", &mut notices);
    }
    Ok((scenario, notices))
}

pub fn load_scenario(path: &Path) -> Result<(Scenario, Vec<String>), FileError> {
    parse_scenario(&read_file(path)?)
}

/// Sets the value at a dotted path (`law.adult.k_u`, `obs0.x_plus.2`).
///
/// Every segment must already exist in `doc`.
pub fn set_path(doc: &mut Value, path: &str, new: Value) -> Result<(), String> {
    let mut cursor = doc;
    let segments: Vec<&str> = path.split('.').collect();
    if path.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err("empty path segment".into());
    }
    for (depth, seg) in segments.iter().enumerate() {
        let here = segments[..=depth].join(".");
        cursor = match cursor {
            Value::Object(map) => map.get_mut(*seg).ok_or_else(|| format!("no field `{here}`"))?,
            Value::Array(items) => {
                let i: usize = seg
                    .parse()
                    .map_err(|_| format!("`{here}` indexes an array; expected a number"))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| format!("index {i} out of range at `{here}` (length {len})"))?
            }
            _ => return Err(format!("`{here}` does not exist")),
        };
    }
    *cursor = new;
    Ok(())
}

/// Reads an override value: JSON when it parses, a bare string otherwise.
pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()))
}

/// Applies `(path, value)` overrides to a scenario through its JSON form.
pub fn apply_overrides(base: &Scenario, overrides: &[(String, Value)]) -> Result<Scenario, FileError> {
    if overrides.is_empty() {
        return Ok(base.clone());
    }
    let mut doc = serde_json::to_value(base).expect("scenario serializes");
    for (path, value) in overrides {
        set_path(&mut doc, path, value.clone()).map_err(|message| FileError::Override {
            path: path.clone(),
            message,
        })?;
    }
    serde_json::from_value(doc).map_err(|e| FileError::Override {
        path: overrides
            .iter()
            .map(|(p, _)| p.as_str())
            .collect::<Vec<_>>()
            .join(", "),
        message: e.to_string(),
    })
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(channels: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "L_U", "A_U", "L_W", "A_W", "LU_hi", "AU_hi", "LW_lo", "AW_lo", "LU_lo", "AU_lo", "LW_hi",
        "AW_hi", "u_L", "u_A",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for k in 1..=channels {
        h.push(format!("y{k}_lo"));
        h.push(format!("y{k}_hi"));
    }
    h
}

const FIXED_COLUMNS: usize = 15;

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<(), FileError> {
    let channels = traj.measurements.first().map_or(0, |(lo, _)| lo.len());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(channels))?;
    for i in 0..traj.len() {
        let x = traj.states[i].to_array();
        let obs = &traj.observer_states[i];
        let u = traj.controls[i];
        let (lo, hi) = &traj.measurements[i];
        let mut row = Vec::with_capacity(FIXED_COLUMNS + 2 * channels);
        row.push(traj.times[i]);
        row.extend_from_slice(&x);
        row.extend_from_slice(&obs.x_minus);
        row.extend_from_slice(&obs.x_plus);
        row.push(u.u_l);
        row.push(u.u_a);
        for (a, b) in lo.iter().zip(hi) {
            row.push(*a);
            row.push(*b);
        }
        out.write_record(row.into_iter().map(fmt_f64))?;
    }
    out.flush().map_err(|source| FileError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

/// Parses a trajectory CSV written by [`write_trajectory_csv`].
/// Solver statistics are not part of the table and come back zeroed.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Trajectory, FileError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < FIXED_COLUMNS || !(header.len() - FIXED_COLUMNS).is_multiple_of(2) {
        return Err(FileError::Table(format!(
            "unexpected column count {}",
            header.len()
        )));
    }
    let channels = (header.len() - FIXED_COLUMNS) / 2;
    let expected = trajectory_header(channels);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(FileError::Table(
            "header does not match the trajectory layout".into(),
        ));
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        observer_states: Vec::new(),
        controls: Vec::new(),
        measurements: Vec::new(),
        stats: SolverStats::default(),
    };
    for record in rdr.records() {
        let record = record?;
        let v: Vec<f64> = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| FileError::Table(format!("`{s}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        traj.times.push(v[0]);
        traj.states.push(PopulationState::new(v[1], v[2], v[3], v[4]));
        traj.observer_states.push(ObserverPair {
            x_minus: [v[5], v[6], v[7], v[8]],
            x_plus: [v[9], v[10], v[11], v[12]],
        });
        traj.controls.push(ControlInput {
            u_l: v[13],
            u_a: v[14],
        });
        let (lo, hi) = v[FIXED_COLUMNS..].chunks(2).map(|c| (c[0], c[1])).unzip();
        traj.measurements.push((lo, hi));
    }
    Ok(traj)
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn scenario_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenario serializes")
}
