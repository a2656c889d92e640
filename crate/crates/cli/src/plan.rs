//! A validated experiment: the workload, the load sweep, and the cross
//! product of sweep values, schemes and seeds that becomes one run each.

use std::path::PathBuf;

use excode_core::fixtures;
use excode_core::sim::RandomScenario;
use excode_core::{Scenario, ScenarioError, Scheme};

/// Names accepted for `kind = "builtin"`.
pub const BUILTINS: [&str; 4] = ["chain", "x", "remote", "crossing"];

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    /// Random layout and flows drawn per seed.
    Random(RandomScenario),
    /// Fixed layout and flows; the seed only changes payload bytes.
    Explicit(Scenario),
    /// One of [`BUILTINS`].
    Builtin(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Flows,
    Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub workload: Workload,
    pub sweep: Option<(SweepVariable, Vec<f64>)>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub trace: bool,
}

/// One run of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub sweep_value: Option<f64>,
    pub scheme: Scheme,
    pub seed: u64,
}

impl ExperimentPlan {
    /// Every run, ordered by sweep value, then scheme, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let values: Vec<Option<f64>> = match &self.sweep {
            Some((_, v)) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::with_capacity(values.len() * self.schemes.len() * self.seeds.len());
        for &sweep_value in &values {
            for &scheme in &self.schemes {
                for &seed in &self.seeds {
                    out.push(Cell {
                        sweep_value,
                        scheme,
                        seed,
                    });
                }
            }
        }
        out
    }

    /// The concrete scenario for one cell.
    pub fn scenario(&self, cell: &Cell) -> Result<Scenario, ScenarioError> {
        let mut scenario = match &self.workload {
            Workload::Random(base) => {
                let mut params = base.clone();
                match (self.sweep.as_ref().map(|s| s.0), cell.sweep_value) {
                    (Some(SweepVariable::Flows), Some(v)) => params.flows = v as usize,
                    (Some(SweepVariable::Rate), Some(v)) => params.rate = v,
                    _ => {}
                }
                params.build(cell.scheme, cell.seed)?
            }
            Workload::Explicit(s) => Scenario {
                scheme: cell.scheme,
                seed: cell.seed,
                ..s.clone()
            },
            Workload::Builtin(name) => {
                let mut s = builtin(name, cell.scheme).expect("names are checked when the plan is built");
                s.seed = cell.seed;
                s
            }
        };
        scenario.keep_trace = self.trace;
        Ok(scenario)
    }

    /// A copy restricted to one scheme and/or one seed.
    pub fn restricted(mut self, scheme: Option<Scheme>, seed: Option<u64>) -> Self {
        if let Some(s) = scheme {
            self.schemes = vec![s];
        }
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        self
    }
}

/// The named fixture scenario, if it exists.
pub fn builtin(name: &str, scheme: Scheme) -> Option<Scenario> {
    let f = match name {
        "chain" => fixtures::chain(scheme),
        "x" => fixtures::x_topology(scheme),
        "remote" => fixtures::remote_destinations(scheme),
        "crossing" => fixtures::crossing_flows(scheme),
        _ => return None,
    };
    Some(f.scenario)
}
