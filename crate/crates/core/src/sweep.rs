//! Cartesian parameter sweeps over scenario fields.
//!
//! Cells are enumerated in row-major order (last axis varies fastest) and
//! results are collected in that order whatever the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::io::{apply_overrides, fmt_f64};
use crate::scenario::{run_scenario, RunReport, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted scenario path, e.g. `law.adult.k_u`.
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("invalid field path `{path}`: {message}")]
    InvalidPath { path: String, message: String },

    #[error("cell {index} ({assignment}) is not a valid scenario: {message}")]
    InvalidCell {
        index: usize,
        assignment: String,
        message: String,
    },

    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub scenario: Scenario,
}

impl Cell {
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(p, v)| format!("{p}={v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub result: Result<RunReport, String>,
}

/// Expands the grid into validated scenarios.
pub fn expand_grid(base: &Scenario, grid: &GridSpec) -> Result<Vec<Cell>, SweepError> {
    if grid.axes.is_empty() {
        return Err(SweepError::EmptyGrid("no axes given".into()));
    }
    for axis in &grid.axes {
        if axis.values.is_empty() {
            return Err(SweepError::EmptyGrid(format!(
                "axis `{}` has no values",
                axis.path
            )));
        }
        let probe = [(axis.path.clone(), axis.values[0].clone())];
        if let Err(e) = apply_overrides(base, &probe) {
            return Err(SweepError::InvalidPath {
                path: axis.path.clone(),
                message: e.to_string(),
            });
        }
    }

    let total: usize = grid.axes.iter().map(|a| a.values.len()).product();
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut assignments = vec![(String::new(), Value::Null); grid.axes.len()];
        for (slot, axis) in grid.axes.iter().enumerate().rev() {
            let n = axis.values.len();
            assignments[slot] = (axis.path.clone(), axis.values[rem % n].clone());
            rem /= n;
        }
        let invalid = |message: String, assignments: &[(String, Value)]| SweepError::InvalidCell {
            index,
            assignment: assignments
                .iter()
                .map(|(p, v)| format!("{p}={v}"))
                .collect::<Vec<_>>()
                .join(", "),
            message,
        };
        let scenario =
            apply_overrides(base, &assignments).map_err(|e| invalid(e.to_string(), &assignments))?;
        scenario
            .validate()
            .map_err(|e| invalid(e.to_string(), &assignments))?;
        cells.push(Cell {
            index,
            assignments,
            scenario,
        });
    }
    Ok(cells)
}

/// Runs every cell on a pool of `workers` threads.
pub fn run_sweep(cells: &[Cell], workers: usize) -> Result<Vec<CellOutcome>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|cell| CellOutcome {
                index: cell.index,
                assignments: cell.assignments.clone(),
                result: run_scenario(&cell.scenario)
                    .map(|(_, report)| report)
                    .map_err(|e| e.to_string()),
            })
            .collect()
    }))
}

/// One row per cell: axis values, status and cost metrics.
pub fn write_summary_csv<W: Write>(
    w: W,
    grid: &GridSpec,
    outcomes: &[CellOutcome],
) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["cell".to_string()];
    header.extend(grid.axes.iter().map(|a| a.path.clone()));
    header.extend(
        [
            "status",
            "converged",
            "total_release_u_L",
            "total_release_u_A",
            "peak_u_A",
        ]
        .map(String::from),
    );
    out.write_record(&header)?;
    for o in outcomes {
        let mut row = vec![o.index.to_string()];
        row.extend(o.assignments.iter().map(|(_, v)| v.to_string()));
        match &o.result {
            Ok(r) => row.extend([
                "ok".to_string(),
                r.converged.to_string(),
                fmt_f64(r.total_release.u_l),
                fmt_f64(r.total_release.u_a),
                fmt_f64(r.peak_u_a),
            ]),
            Err(e) => row.extend([
                format!("error: {e}"),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]),
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
