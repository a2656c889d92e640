//! Experiment files (TOML) and their validation into an [`ExperimentPlan`].
//!
//! ```toml
//! [topology]
//! kind = "random"          # random | explicit | builtin
//! nodes = 16
//! side = 800.0
//! range = 200.0
//!
//! [traffic]
//! flows = 4
//! rate = 150.0             # packets per second per flow
//!
//! [run]
//! schemes = ["excode", "cope", "none"]
//! seed_count = 5
//!
//! [sweep]
//! variable = "flows"
//! values = [2, 4, 6, 8, 10]
//! ```

use std::path::{Path, PathBuf};

use excode_core::sim::RandomScenario;
use excode_core::{FlowSpec, Position, Scenario, Scheme};
use serde::Deserialize;
use thiserror::Error;

use crate::plan::{ExperimentPlan, SweepVariable, Workload};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    topology: TopologySection,
    #[serde(default)]
    traffic: TrafficSection,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    run: RunSection,
    sweep: Option<SweepSection>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    #[serde(default = "default_kind")]
    kind: String,
    nodes: Option<usize>,
    side: Option<f64>,
    range: Option<f64>,
    /// Fixed layout seed for `random`; otherwise each run seed picks its own.
    seed: Option<u64>,
    positions: Option<Vec<[f64; 2]>>,
    /// Fixture name for `builtin`.
    name: Option<String>,
}

fn default_kind() -> String {
    "random".into()
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            kind: default_kind(),
            nodes: None,
            side: None,
            range: None,
            seed: None,
            positions: None,
            name: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrafficSection {
    /// Number of random flows.
    flows: Option<usize>,
    rate: Option<f64>,
    packet_size: Option<usize>,
    #[serde(default, rename = "flow")]
    explicit: Vec<FlowEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowEntry {
    src: u32,
    dst: u32,
    rate: Option<f64>,
    start: Option<f64>,
    stop: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    rate: Option<f64>,
    #[serde(default)]
    count_header_overhead: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    schemes: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    seed_count: Option<u64>,
    duration: Option<f64>,
    drain: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    variable: String,
    values: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    #[serde(default)]
    trace: bool,
}

pub fn load_config(path: &Path) -> Result<ExperimentPlan, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

/// Parses and validates a config, applying defaults for everything omitted.
pub fn parse_config(text: &str) -> Result<ExperimentPlan, ConfigError> {
    let file: File = toml::from_str(text)?;
    let defaults = RandomScenario::default();

    let schemes = match &file.run.schemes {
        None => Scheme::ALL.to_vec(),
        Some(names) if names.is_empty() => return Err(invalid("run.schemes", "must not be empty")),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Scheme>().map_err(|e| invalid("run.schemes", e.to_string())))
            .collect::<Result<_, _>>()?,
    };
    let seeds = match (&file.run.seeds, file.run.seed_count) {
        (Some(_), Some(_)) => return Err(invalid("run.seeds", "give either seeds or seed_count")),
        (Some(s), None) if s.is_empty() => return Err(invalid("run.seeds", "must not be empty")),
        (Some(s), None) => s.clone(),
        (None, Some(0)) => return Err(invalid("run.seed_count", "must be at least 1")),
        (None, Some(n)) => (0..n).collect(),
        (None, None) => vec![0],
    };
    let duration = positive("run.duration", file.run.duration.unwrap_or(defaults.duration))?;
    let drain = file.run.drain.unwrap_or(0.0);
    if !(drain >= 0.0 && drain.is_finite()) {
        return Err(invalid("run.drain", "must be non-negative"));
    }
    let channel_rate = positive("channel.rate", file.channel.rate.unwrap_or(defaults.channel_rate))?;
    let radio_range = positive("topology.range", file.topology.range.unwrap_or(defaults.radio_range))?;
    let rate = positive("traffic.rate", file.traffic.rate.unwrap_or(defaults.rate))?;
    let packet_size = file.traffic.packet_size.unwrap_or(defaults.packet_size);
    if packet_size == 0 {
        return Err(invalid("traffic.packet_size", "must be positive"));
    }
    let count_header_overhead = file.channel.count_header_overhead;

    let workload = match file.topology.kind.as_str() {
        "random" => {
            if file.topology.positions.is_some() {
                return Err(invalid("topology.positions", "only valid with kind = \"explicit\""));
            }
            if !file.traffic.explicit.is_empty() {
                return Err(invalid("traffic.flow", "explicit flows need kind = \"explicit\""));
            }
            let nodes = file.topology.nodes.unwrap_or(defaults.nodes);
            if nodes == 0 {
                return Err(invalid("topology.nodes", "must be at least 1"));
            }
            Workload::Random(RandomScenario {
                nodes,
                side: positive("topology.side", file.topology.side.unwrap_or(defaults.side))?,
                radio_range,
                flows: file.traffic.flows.unwrap_or(defaults.flows),
                rate,
                packet_size,
                channel_rate,
                duration,
                drain,
                count_header_overhead,
                topology_seed: file.topology.seed,
            })
        }
        "explicit" => {
            let Some(raw) = &file.topology.positions else {
                return Err(invalid("topology.positions", "required with kind = \"explicit\""));
            };
            if raw.is_empty() {
                return Err(invalid("topology.positions", "must not be empty"));
            }
            if raw.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid("topology.positions", "coordinates must be finite"));
            }
            let positions: Vec<Position> = raw.iter().map(|[x, y]| Position::new(*x, *y)).collect();
            if file.traffic.explicit.is_empty() {
                return Err(invalid(
                    "traffic.flow",
                    "explicit topologies need at least one [[traffic.flow]]",
                ));
            }
            let mut flows = Vec::new();
            for (i, f) in file.traffic.explicit.iter().enumerate() {
                let field = format!("traffic.flow[{i}]");
                let flow_rate = positive(&field, f.rate.unwrap_or(rate))?;
                let start = f.start.unwrap_or(0.0);
                let stop = f.stop.unwrap_or(duration);
                if (f.src as usize) >= positions.len() || (f.dst as usize) >= positions.len() {
                    return Err(invalid(&field, "node id out of range"));
                }
                if f.src == f.dst {
                    return Err(invalid(&field, "source and destination must differ"));
                }
                if !(start >= 0.0 && stop >= start) {
                    return Err(invalid(&field, "need 0 <= start <= stop"));
                }
                flows.push(FlowSpec::new(
                    i as u32,
                    f.src,
                    f.dst,
                    flow_rate,
                    packet_size,
                    start,
                    stop,
                ));
            }
            let mut scenario = Scenario::with_positions(positions, flows, Scheme::Excode);
            scenario.radio_range = radio_range;
            scenario.channel_rate = channel_rate;
            scenario.duration = duration;
            scenario.drain = drain;
            scenario.count_header_overhead = count_header_overhead;
            scenario.validate().map_err(|e| invalid("topology", e.to_string()))?;
            scenario
                .routes(&scenario.validate().expect("validated above"))
                .map_err(|e| invalid("traffic.flow", e.to_string()))?;
            Workload::Explicit(scenario)
        }
        "builtin" => {
            let name = file.topology.name.as_deref().unwrap_or("");
            if !crate::plan::BUILTINS.contains(&name) {
                return Err(invalid(
                    "topology.name",
                    format!(
                        "unknown fixture {name:?}; expected one of: {}",
                        crate::plan::BUILTINS.join(", ")
                    ),
                ));
            }
            Workload::Builtin(name.to_string())
        }
        other => {
            return Err(invalid(
                "topology.kind",
                format!("unknown kind {other:?}; expected one of: random, explicit, builtin"),
            ))
        }
    };

    let sweep = match file.sweep {
        None => None,
        Some(s) => {
            let variable = match s.variable.as_str() {
                "flows" => SweepVariable::Flows,
                "rate" => SweepVariable::Rate,
                other => {
                    return Err(invalid(
                        "sweep.variable",
                        format!("unknown variable {other:?}; expected flows or rate"),
                    ))
                }
            };
            if s.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
            if !matches!(workload, Workload::Random(_)) {
                return Err(invalid("sweep", "sweeps need kind = \"random\""));
            }
            for &v in &s.values {
                let ok = match variable {
                    SweepVariable::Flows => v >= 0.0 && v.fract() == 0.0,
                    SweepVariable::Rate => v > 0.0 && v.is_finite(),
                };
                if !ok {
                    return Err(invalid("sweep.values", format!("{v} is not a valid {}", s.variable)));
                }
            }
            Some((variable, s.values))
        }
    };

    Ok(ExperimentPlan {
        workload,
        sweep,
        schemes,
        seeds,
        output_dir: file.output.dir.unwrap_or_else(|| PathBuf::from("results")),
        trace: file.output.trace,
    })
}
