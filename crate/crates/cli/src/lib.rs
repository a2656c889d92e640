//! Experiment files, sweeps, CSV and SVG output around `excode-core`.

pub mod charts;
pub mod config;
pub mod figures;
pub mod output;
pub mod plan;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError};
pub use figures::{run_figures, Check};
pub use output::{read_csv, write_csv, Row};
pub use plan::{builtin, Cell, ExperimentPlan, SweepVariable, Workload, BUILTINS};
pub use runner::{run_plan, write_outputs, CellFailure, CellResult, PlanResults, RunError};
