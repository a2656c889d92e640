//! Scenario description and validation, plus the seeded random workload
//! generator used for field experiments.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::traffic::FlowSpec;
use crate::coding::Scheme;
use crate::packet::FlowId;
use crate::topology::{build_topology, random_layout, shortest_path, NodeId, Position, Route, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("flow {flow} appears more than once")]
    DuplicateFlow { flow: FlowId },
    #[error("flow {flow}: no route from {src} to {dst}")]
    Unroutable { flow: FlowId, src: NodeId, dst: NodeId },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

fn invalid(field: impl ToString, reason: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

/// Where node positions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Positions(Vec<Position>),
    Random { nodes: usize, side: f64, seed: u64 },
}

impl TopologySource {
    pub fn positions(&self) -> Vec<Position> {
        match self {
            TopologySource::Positions(p) => p.clone(),
            TopologySource::Random { nodes, side, seed } => random_layout(*nodes, *side, *seed),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: TopologySource,
    /// Meters.
    pub radio_range: f64,
    pub flows: Vec<FlowSpec>,
    pub scheme: Scheme,
    /// Bits per second.
    pub channel_rate: f64,
    /// Seconds of traffic generation; throughput is averaged over this.
    pub duration: f64,
    /// Extra seconds after `duration` during which queued packets may still
    /// drain (no new packets are generated).
    pub drain: f64,
    pub seed: u64,
    pub count_header_overhead: bool,
    /// Keep every trace record in memory (the digest is always computed).
    pub keep_trace: bool,
}

impl Scenario {
    pub const DEFAULT_CHANNEL_RATE: f64 = 2_000_000.0;
    pub const DEFAULT_DURATION: f64 = 120.0;
    pub const DEFAULT_PACKET_SIZE: usize = 512;
    pub const DEFAULT_RADIO_RANGE: f64 = 200.0;

    /// A scenario over explicit positions with default channel settings.
    pub fn with_positions(positions: Vec<Position>, flows: Vec<FlowSpec>, scheme: Scheme) -> Self {
        Scenario {
            topology: TopologySource::Positions(positions),
            radio_range: Self::DEFAULT_RADIO_RANGE,
            flows,
            scheme,
            channel_rate: Self::DEFAULT_CHANNEL_RATE,
            duration: Self::DEFAULT_DURATION,
            drain: 0.0,
            seed: 0,
            count_header_overhead: false,
            keep_trace: false,
        }
    }

    pub fn offered_kbps(&self) -> f64 {
        self.flows.iter().map(FlowSpec::offered_kbps).sum()
    }

    /// Checks every parameter and builds the topology.
    pub fn validate(&self) -> Result<Topology, ScenarioError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(invalid("duration", "must be positive"));
        }
        if !(self.drain >= 0.0) || !self.drain.is_finite() {
            return Err(invalid("drain", "must be non-negative"));
        }
        if !(self.channel_rate > 0.0) || !self.channel_rate.is_finite() {
            return Err(invalid("channel_rate", "must be positive"));
        }
        if let TopologySource::Random { nodes, side, .. } = &self.topology {
            if *nodes == 0 {
                return Err(invalid("topology.nodes", "must be at least 1"));
            }
            if !(*side > 0.0) {
                return Err(invalid("topology.side", "must be positive"));
            }
        }
        let topology = build_topology(&self.topology.positions(), self.radio_range)?;
        let mut ids = BTreeSet::new();
        for f in &self.flows {
            let name = alloc::format!("flow {}", f.flow);
            if !ids.insert(f.flow) {
                return Err(ScenarioError::DuplicateFlow { flow: f.flow });
            }
            if !(f.rate > 0.0) || !f.rate.is_finite() {
                return Err(invalid(name, "rate must be positive"));
            }
            if f.packet_size == 0 {
                return Err(invalid(name, "packet_size must be positive"));
            }
            if f.src == f.dst {
                return Err(invalid(name, "source and destination must differ"));
            }
            if !(f.start >= 0.0) || !(f.stop >= f.start) {
                return Err(invalid(name, "need 0 <= start <= stop"));
            }
            for n in [f.src, f.dst] {
                if !topology.contains(n) {
                    return Err(TopologyError::UnknownNode(n).into());
                }
            }
        }
        Ok(topology)
    }

    /// Static shortest-path route of every flow, in flow order.
    pub fn routes(&self, topology: &Topology) -> Result<Vec<Route>, ScenarioError> {
        self.flows
            .iter()
            .map(|f| {
                shortest_path(topology, f.src, f.dst).map_err(|e| match e {
                    TopologyError::NoRoute { src, dst } => ScenarioError::Unroutable { flow: f.flow, src, dst },
                    other => other.into(),
                })
            })
            .collect()
    }
}

/// Picks `count` flows between random connected node pairs.
///
/// Distinct pairs are used while they last. Each flow starts at a random
/// offset within its first packet interval so sources are not phase-locked.
pub fn random_flows(
    topology: &Topology,
    count: usize,
    rate: f64,
    packet_size: usize,
    stop: f64,
    seed: u64,
) -> Vec<FlowSpec> {
    let mut pairs = Vec::new();
    for src in topology.nodes() {
        let dist = topology.hop_distances_to(src);
        for dst in topology.nodes() {
            if dst != src && dist[dst.index()].is_some() {
                pairs.push((src, dst));
            }
        }
    }
    if pairs.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let mut round = pairs.clone();
        round.shuffle(&mut rng);
        let take = (count - chosen.len()).min(round.len());
        chosen.extend_from_slice(&round[..take]);
    }
    chosen
        .into_iter()
        .enumerate()
        .map(|(i, (src, dst))| {
            let start = rng.random_range(0.0..1.0) / rate;
            FlowSpec {
                flow: FlowId(i as u32),
                src,
                dst,
                rate,
                packet_size,
                start,
                stop,
            }
        })
        .collect()
}

/// Parameters for a random field scenario; the defaults are 16 nodes in an
/// 800 m square, 200 m range, 512-byte CBR packets over a 2 Mb/s channel for
/// 120 s.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomScenario {
    pub nodes: usize,
    pub side: f64,
    pub radio_range: f64,
    pub flows: usize,
    /// Packets per second per flow.
    pub rate: f64,
    pub packet_size: usize,
    pub channel_rate: f64,
    pub duration: f64,
    pub drain: f64,
    pub count_header_overhead: bool,
    /// Fixed layout seed; `None` derives the layout from the run seed.
    pub topology_seed: Option<u64>,
}

impl RandomScenario {
    pub const DEFAULT_RATE: f64 = 150.0;
}

impl Default for RandomScenario {
    fn default() -> Self {
        RandomScenario {
            nodes: 16,
            side: 800.0,
            radio_range: Scenario::DEFAULT_RADIO_RANGE,
            flows: 4,
            rate: Self::DEFAULT_RATE,
            packet_size: Scenario::DEFAULT_PACKET_SIZE,
            channel_rate: Scenario::DEFAULT_CHANNEL_RATE,
            duration: Scenario::DEFAULT_DURATION,
            drain: 0.0,
            count_header_overhead: false,
            topology_seed: None,
        }
    }
}

impl RandomScenario {
    /// Builds the concrete scenario for `scheme` and `seed`. The layout and
    /// flows depend only on the seeds, never on the scheme.
    pub fn build(&self, scheme: Scheme, seed: u64) -> Result<Scenario, ScenarioError> {
        let layout_seed = self.topology_seed.unwrap_or(seed);
        let source = TopologySource::Random {
            nodes: self.nodes,
            side: self.side,
            seed: layout_seed,
        };
        if self.nodes == 0 {
            return Err(invalid("topology.nodes", "must be at least 1"));
        }
        let topology = build_topology(&source.positions(), self.radio_range)?;
        if !(self.rate > 0.0) {
            return Err(invalid("rate", "must be positive"));
        }
        let flows = random_flows(
            &topology,
            self.flows,
            self.rate,
            self.packet_size,
            self.duration,
            seed ^ 0x5EED_F10E,
        );
        Ok(Scenario {
            topology: source,
            radio_range: self.radio_range,
            flows,
            scheme,
            channel_rate: self.channel_rate,
            duration: self.duration,
            drain: self.drain,
            seed,
            count_header_overhead: self.count_header_overhead,
            keep_trace: false,
        })
    }
}
