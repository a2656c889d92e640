//! Executes plans. Cells run in parallel; results keep plan order. A cell
//! whose scenario is invalid is recorded as a failure and the rest still run.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use excode_core::{run, MetricsReport, ScenarioError, TraceLog};
use rayon::prelude::*;
use thiserror::Error;

use crate::charts::write_charts;
use crate::output::{write_csv, Row};
use crate::plan::{Cell, ExperimentPlan};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("drawing {path}: {reason}")]
    Chart { path: PathBuf, reason: String },
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub report: MetricsReport,
    pub trace: TraceLog,
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: ScenarioError,
}

#[derive(Debug, Clone, Default)]
pub struct PlanResults {
    pub runs: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

pub fn run_plan(plan: &ExperimentPlan) -> PlanResults {
    let outcomes: Vec<Result<CellResult, CellFailure>> = plan
        .cells()
        .into_par_iter()
        .map(|cell| {
            plan.scenario(&cell)
                .and_then(run)
                .map(|(report, trace)| CellResult { cell, report, trace })
                .map_err(|error| CellFailure { cell, error })
        })
        .collect();
    let mut out = PlanResults::default();
    for o in outcomes {
        match o {
            Ok(r) => out.runs.push(r),
            Err(f) => out.failures.push(f),
        }
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn cell_name(cell: &Cell) -> String {
    match cell.sweep_value {
        Some(v) => format!("{}_{}_{}", cell.scheme.name(), v, cell.seed),
        None => format!("{}_{}", cell.scheme.name(), cell.seed),
    }
}

/// Writes `results.csv`, one SVG per metric, `failures.txt` when some cells
/// could not run, and (if the plan asks for them) one trace file per run
/// into `dir`. Returns the CSV path.
pub fn write_outputs(plan: &ExperimentPlan, results: &PlanResults, dir: &Path) -> Result<PathBuf, RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<Row> = results.runs.iter().map(|r| Row::from(&r.report)).collect();
    let csv_path = dir.join("results.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_csv(&rows, BufWriter::new(file)).map_err(|source| RunError::Csv {
        path: csv_path.clone(),
        source,
    })?;
    write_charts(&rows, dir)?;
    let failures_path = dir.join("failures.txt");
    if results.failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(io_err(&failures_path))?;
        }
    } else {
        let mut text = String::new();
        for f in &results.failures {
            text.push_str(&format!("{}: {}\n", cell_name(&f.cell), f.error));
        }
        fs::write(&failures_path, text).map_err(io_err(&failures_path))?;
    }
    if plan.trace {
        for r in &results.runs {
            let path = dir.join(format!("trace_{}.csv", cell_name(&r.cell)));
            let mut out = BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
            out.write_all(r.trace.render().as_bytes()).map_err(io_err(&path))?;
            out.flush().map_err(io_err(&path))?;
        }
    }
    Ok(csv_path)
}
