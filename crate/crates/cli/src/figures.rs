//! The `figures` harness: runs every built-in topology under each scheme and
//! a small 16-node load sweep, writes their outputs, and checks the expected
//! coding behavior.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use excode_core::fixtures;
use excode_core::sim::{RandomScenario, TraceEvent};
use excode_core::{MetricsReport, NodeId, Scheme, TraceLog};

use crate::plan::{ExperimentPlan, SweepVariable, Workload, BUILTINS};
use crate::runner::{run_plan, write_outputs, CellResult, PlanResults, RunError};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

fn encoders(trace: &TraceLog) -> Vec<NodeId> {
    trace
        .records()
        .iter()
        .filter(|r| r.event == TraceEvent::Encode)
        .map(|r| r.node)
        .collect()
}

fn decoded_at(trace: &TraceLog, node: NodeId) -> bool {
    trace
        .records()
        .iter()
        .any(|r| r.event == TraceEvent::Decode && r.node == node)
}

fn clean(m: &MetricsReport) -> bool {
    m.invariants_hold() && m.delivered == m.generated
}

fn by_scheme(results: &PlanResults, scheme: Scheme) -> Option<&CellResult> {
    results.runs.iter().find(|r| r.cell.scheme == scheme)
}

/// Checks for one fixture, from its first-seed runs.
fn fixture_checks(name: &str, results: &PlanResults) -> Vec<Check> {
    let f = match name {
        "chain" => fixtures::chain(Scheme::Excode),
        "x" => fixtures::x_topology(Scheme::Excode),
        "remote" => fixtures::remote_destinations(Scheme::Excode),
        _ => fixtures::crossing_flows(Scheme::Excode),
    };
    let (Some(ex), Some(co), Some(no)) = (
        by_scheme(results, Scheme::Excode),
        by_scheme(results, Scheme::Cope),
        by_scheme(results, Scheme::NonCoding),
    ) else {
        return vec![Check::new(name, false, "missing runs")];
    };
    let all_clean = [ex, co, no].iter().all(|r| clean(&r.report));
    let enc = encoders(&ex.trace);
    let only_relay = !enc.is_empty() && enc.iter().all(|&n| n == f.relay);
    let tx = format!(
        "transmissions excode {} cope {} none {}",
        ex.report.total_tx, co.report.total_tx, no.report.total_tx
    );
    let (pass, detail) = match name {
        "chain" | "x" => (
            ex.report.total_tx == 3 && co.report.total_tx == 3 && no.report.total_tx == 4,
            tx,
        ),
        "remote" => {
            let dsts_decode = f.scenario.flows.iter().all(|fl| decoded_at(&ex.trace, fl.dst));
            (
                only_relay && dsts_decode && co.report.encode_count == 0,
                format!(
                    "{tx}; excode codes at relay and both destinations decode: {}",
                    only_relay && dsts_decode
                ),
            )
        }
        _ => {
            let topology = f.scenario.validate().expect("fixture is valid");
            let routes = f.scenario.routes(&topology).expect("fixture is connected");
            let long = routes.iter().all(|r| r.hops() >= 5);
            (
                long && only_relay && co.report.encode_count == 0,
                format!("{tx}; excode codes at interior relay: {only_relay}"),
            )
        }
    };
    vec![
        Check::new(format!("{name}: coding"), pass, detail),
        Check::new(format!("{name}: delivery and invariants"), all_clean, ""),
    ]
}

fn sweep_checks(results: &PlanResults) -> Vec<Check> {
    let failures: u64 = results.runs.iter().map(|r| r.report.decode_failures).sum();
    let broken: Vec<String> = results
        .runs
        .iter()
        .filter(|r| !r.report.invariants_hold())
        .map(|r| format!("{}/{}", r.cell.scheme, r.cell.seed))
        .collect();
    let mut fewer = Vec::new();
    for ex in results.runs.iter().filter(|r| r.cell.scheme == Scheme::Excode) {
        let co = results.runs.iter().find(|r| {
            r.cell.scheme == Scheme::Cope && r.cell.seed == ex.cell.seed && r.cell.sweep_value == ex.cell.sweep_value
        });
        if let Some(co) = co {
            if ex.report.encode_count < co.report.encode_count {
                fewer.push(format!("flows {:?} seed {}", ex.cell.sweep_value, ex.cell.seed));
            }
        }
    }
    vec![
        Check::new(
            "sweep: decoding",
            failures == 0 && results.failures.is_empty(),
            format!(
                "{} runs, decode failures {failures}, invalid cells {}",
                results.runs.len(),
                results.failures.len()
            ),
        ),
        Check::new("sweep: invariants", broken.is_empty(), broken.join(" ")),
        Check::new(
            "sweep: excode encodes at least as often as cope",
            fewer.is_empty(),
            fewer.join(", "),
        ),
    ]
}

/// Runs everything into `out` (one directory per fixture plus `sweep/`) and
/// writes `checks.txt`. `seeds` seeds are used for each configuration.
pub fn run_figures(out: &Path, seeds: u64) -> Result<Vec<Check>, RunError> {
    let seeds: Vec<u64> = (0..seeds.max(1)).collect();
    let mut checks = Vec::new();
    for name in BUILTINS {
        let plan = ExperimentPlan {
            workload: Workload::Builtin(name.to_string()),
            sweep: None,
            schemes: Scheme::ALL.to_vec(),
            seeds: seeds.clone(),
            output_dir: out.join(name),
            trace: true,
        };
        let results = run_plan(&plan);
        write_outputs(&plan, &results, &plan.output_dir)?;
        checks.extend(fixture_checks(name, &results));
    }
    let plan = ExperimentPlan {
        workload: Workload::Random(RandomScenario::default()),
        sweep: Some((SweepVariable::Flows, vec![2.0, 4.0, 6.0, 8.0, 10.0])),
        schemes: Scheme::ALL.to_vec(),
        seeds,
        output_dir: out.join("sweep"),
        trace: false,
    };
    let results = run_plan(&plan);
    write_outputs(&plan, &results, &plan.output_dir)?;
    checks.extend(sweep_checks(&results));

    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(
            text,
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let path = out.join("checks.txt");
    fs::write(&path, text).map_err(|source| RunError::Io { path, source })?;
    Ok(checks)
}
