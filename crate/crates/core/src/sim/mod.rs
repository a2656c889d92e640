//! Deterministic discrete-event engine.
//!
//! Events are ordered by `(time, ordinal)`, where the ordinal is a global
//! counter assigned when an event is scheduled, so simultaneous events are
//! always processed in the same order. A run is single threaded and owns all
//! node state; separate runs share nothing.

mod channel;
mod scenario;
mod trace;
mod traffic;

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::coding::Scheme;
use crate::metrics::{finalize, Counters, MetricsReport, RunInfo};
use crate::node::{packet_custody, NodeEnv, NodeState, Reception, Role, Transition};
use crate::packet::{FlowId, NativePacket, Packet, PacketUid};
use crate::time::SimTime;
use crate::topology::{NodeId, Route, Topology};
use crate::uidmap::UidMap;

pub use channel::{Channel, Transmission};
pub use scenario::{random_flows, RandomScenario, Scenario, ScenarioError, TopologySource};
pub use trace::{TraceDetail, TraceEvent, TraceLabel, TraceLog, TraceRecord};
pub use traffic::{generate_traffic, CbrSource, FlowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    PacketGen { flow: usize },
    TxStart { node: NodeId },
    TxEnd { node: NodeId },
    NodeWake { node: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: SimTime,
    pub ordinal: u64,
    pub kind: EventKind,
}

/// Read-only view of the whole network handed to an [`Observer`].
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    pub now: SimTime,
    pub scheme: Scheme,
    pub topology: &'a Topology,
    pub nodes: &'a [NodeState],
}

/// Hooks for checking a run from the outside while it executes.
pub trait Observer {
    /// Called just before relay `node` searches its input queue for a partner
    /// for the arriving native `arriving`. `candidates` are the queued natives
    /// the search may pick, in scan order. Called under every scheme.
    fn on_partner_search(
        &mut self,
        _world: &World<'_>,
        _node: NodeId,
        _arriving: &NativePacket,
        _candidates: &[&NativePacket],
    ) {
    }

    /// Called after every processed event.
    fn after_event(&mut self, _world: &World<'_>, _event: &Event) {}
}

#[derive(Debug, Clone, Default)]
struct Radio {
    busy_until: SimTime,
    /// Chosen at wake-up, waiting for its TxStart event.
    pending: Option<Transmission>,
    on_air: Option<Transmission>,
    wake_pending: bool,
}

impl Radio {
    fn busy(&self) -> bool {
        self.pending.is_some() || self.on_air.is_some()
    }
}

/// Deterministic payload bytes for a packet.
pub fn expected_payload(seed: u64, uid: PacketUid, size: usize) -> Arc<[u8]> {
    let mix = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((uid.flow.0 as u64) << 40)
        .wrapping_add(uid.seq);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix);
    let mut bytes = alloc::vec![0u8; size];
    rng.fill_bytes(&mut bytes);
    bytes.into()
}

/// A simulation in progress.
pub struct Simulation<'o> {
    scenario: Scenario,
    topology: Topology,
    routes: Vec<Route>,
    flow_index: BTreeMap<FlowId, usize>,
    nodes: Vec<NodeState>,
    radios: Vec<Radio>,
    sources: Vec<CbrSource>,
    events: BinaryHeap<Reverse<Event>>,
    next_ordinal: u64,
    now: SimTime,
    end: SimTime,
    counters: Counters,
    /// Payload of every generated packet not yet delivered, per flow index.
    originals: Vec<UidMap<Arc<[u8]>>>,
    trace: TraceLog,
    observer: Option<&'o mut dyn Observer>,
}

impl<'o> Simulation<'o> {
    /// Validates `scenario`, computes static routes and schedules the first
    /// packet of every flow.
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        let topology = scenario.validate()?;
        let routes = scenario.routes(&topology)?;
        let n = topology.len();
        let nodes: Vec<NodeState> = topology.nodes().map(|id| NodeState::new(id, &topology)).collect();
        let sources: Vec<CbrSource> = scenario
            .flows
            .iter()
            .map(|f| generate_traffic(f, scenario.duration))
            .collect();
        let flow_index = scenario.flows.iter().enumerate().map(|(i, f)| (f.flow, i)).collect();
        let end = SimTime::from_secs_f64(scenario.duration + scenario.drain);
        let mut sim = Simulation {
            counters: Counters::new(scenario.flows.len(), n),
            originals: alloc::vec![UidMap::new(); scenario.flows.len()],
            trace: TraceLog::new(scenario.keep_trace),
            scenario,
            topology,
            routes,
            flow_index,
            nodes,
            radios: alloc::vec![Radio::default(); n],
            sources,
            events: BinaryHeap::new(),
            next_ordinal: 0,
            now: SimTime::ZERO,
            end,
            observer: None,
        };
        for flow in 0..sim.sources.len() {
            sim.schedule_next_packet(flow);
        }
        Ok(sim)
    }

    /// Attaches an observer notified during the run.
    pub fn with_observer(mut self, observer: &'o mut dyn Observer) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn channel(&self) -> Channel {
        Channel {
            rate_bps: self.scenario.channel_rate,
            count_header_overhead: self.scenario.count_header_overhead,
        }
    }

    fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.events.push(Reverse(Event { time, ordinal, kind }));
    }

    fn schedule_next_packet(&mut self, flow: usize) {
        if let Some((at, _)) = self.sources[flow].clone().next() {
            self.schedule(at, EventKind::PacketGen { flow });
        }
    }

    fn wake(&mut self, node: NodeId) {
        let radio = &mut self.radios[node.index()];
        if radio.busy() || radio.wake_pending {
            return;
        }
        radio.wake_pending = true;
        let now = self.now;
        self.schedule(now, EventKind::NodeWake { node });
    }

    fn log(&mut self, node: NodeId, event: TraceEvent, packet: TraceLabel, detail: TraceDetail) {
        self.trace.push(TraceRecord {
            time: self.now,
            node,
            event,
            packet,
            detail,
        });
    }

    /// Processes the next event. Returns `false` once nothing is left before
    /// the end of the run.
    pub fn step(&mut self) -> bool {
        let Some(Reverse(event)) = self.events.peek().copied() else {
            return false;
        };
        if event.time > self.end {
            return false;
        }
        self.events.pop();
        if event.time < self.now {
            self.counters.causality_violations += 1;
        }
        self.now = event.time;
        match event.kind {
            EventKind::PacketGen { flow } => self.on_packet_gen(flow),
            EventKind::NodeWake { node } => self.on_wake(node),
            EventKind::TxStart { node } => self.on_tx_start(node),
            EventKind::TxEnd { node } => self.on_tx_end(node),
        }
        if let Some(obs) = self.observer.as_deref_mut() {
            let world = World {
                now: self.now,
                scheme: self.scenario.scheme,
                topology: &self.topology,
                nodes: &self.nodes,
            };
            obs.after_event(&world, &event);
        }
        true
    }

    /// Runs to the end of the scenario.
    pub fn run_to_end(&mut self) {
        while self.step() {}
    }

    fn on_packet_gen(&mut self, flow: usize) {
        let Some((_, seq)) = self.sources[flow].next() else {
            return;
        };
        let spec = &self.scenario.flows[flow];
        let uid = PacketUid { flow: spec.flow, seq };
        let payload = expected_payload(self.scenario.seed, uid, spec.packet_size);
        self.originals[flow].insert(uid, payload.clone());
        let packet = NativePacket::new(uid, self.routes[flow].clone(), payload, self.now);
        let src = spec.src;
        self.counters.generated[flow] += 1;
        self.log(src, TraceEvent::Generate, TraceLabel::Native(uid), TraceDetail::None);
        let reception = self.nodes[src.index()].originate(packet);
        self.apply_reception(src, None, reception);
        self.schedule_next_packet(flow);
    }

    fn on_wake(&mut self, node: NodeId) {
        self.radios[node.index()].wake_pending = false;
        if self.radios[node.index()].busy() {
            return;
        }
        let env = NodeEnv {
            topology: &self.topology,
            scheme: self.scenario.scheme,
        };
        let channel = self.channel();
        if let Some(tx) = self.nodes[node.index()].on_send(&env, &channel) {
            self.radios[node.index()].pending = Some(tx);
            let now = self.now;
            self.schedule(now, EventKind::TxStart { node });
        }
    }

    fn on_tx_start(&mut self, node: NodeId) {
        let Some(tx) = self.radios[node.index()].pending.take() else {
            return;
        };
        let radio = &self.radios[node.index()];
        if self.now < radio.busy_until || radio.on_air.is_some() {
            self.counters.radio_violations += 1;
        }
        self.counters.total_tx += 1;
        if tx.packet.is_encoded() {
            self.counters.encoded_tx += 1;
        }
        self.counters.header_bytes += tx.header_bytes as u64;
        let end = self.now + tx.duration;
        self.log(
            node,
            TraceEvent::TxStart,
            TraceLabel::from(&tx.packet),
            TraceDetail::Airtime {
                duration: tx.duration,
                addressed: tx.addressed.clone(),
            },
        );
        let radio = &mut self.radios[node.index()];
        radio.busy_until = end;
        radio.on_air = Some(tx);
        self.schedule(end, EventKind::TxEnd { node });
    }

    fn on_tx_end(&mut self, node: NodeId) {
        let Some(tx) = self.radios[node.index()].on_air.take() else {
            return;
        };
        let label = TraceLabel::from(&tx.packet);
        self.log(node, TraceEvent::TxEnd, label, TraceDetail::None);
        let scheme = self.scenario.scheme;
        // Every neighbor receives at this instant. Overhearers go first so
        // that buffers and reception reports already reflect this broadcast
        // when an addressed relay searches for a partner.
        for role in [Role::Overheard, Role::Addressed] {
            for i in 0..self.topology.neighbors(node).len() {
                let receiver = self.topology.neighbors(node)[i];
                if tx.addressed.contains(&receiver) != (role == Role::Addressed) {
                    continue;
                }
                if role == Role::Addressed {
                    if let Packet::Native(p) = &tx.packet {
                        self.notify_partner_search(receiver, p);
                    }
                }
                let env = NodeEnv {
                    topology: &self.topology,
                    scheme,
                };
                let reception = self.nodes[receiver.index()].on_receive(&env, &tx.packet, role, self.now);
                self.apply_reception(receiver, Some((node, label)), reception);
            }
        }
        self.wake(node);
    }

    fn notify_partner_search(&mut self, receiver: NodeId, p: &NativePacket) {
        let Some(obs) = self.observer.as_deref_mut() else {
            return;
        };
        let state = &self.nodes[receiver.index()];
        if p.dst() == receiver || state.is_duplicate(p.uid, Role::Addressed) {
            return;
        }
        let candidates: Vec<&NativePacket> = state.partner_candidates(p).collect();
        let world = World {
            now: self.now,
            scheme: self.scenario.scheme,
            topology: &self.topology,
            nodes: &self.nodes,
        };
        obs.on_partner_search(&world, receiver, p, &candidates);
    }

    fn apply_reception(&mut self, node: NodeId, from: Option<(NodeId, TraceLabel)>, reception: Reception) {
        let Reception {
            transitions,
            buffered,
            queue_changed,
        } = reception;
        let label = from.map(|(_, l)| l);
        let from_detail = || from.map_or(TraceDetail::None, |(n, _)| TraceDetail::From(n));
        for t in transitions {
            match t {
                Transition::Discarded => {
                    if let Some(l) = label {
                        self.log(node, TraceEvent::Duplicate, l, from_detail());
                    }
                }
                Transition::Overheard { .. } => {
                    if let Some(l) = label {
                        self.log(node, TraceEvent::Overhear, l, from_detail());
                    }
                }
                Transition::Decoded(uid) => {
                    self.log(node, TraceEvent::Decode, TraceLabel::Native(uid), TraceDetail::None);
                }
                Transition::Delivered(p) => self.deliver(node, &p),
                Transition::DecodeImpossible(uid) => {
                    self.counters.decode_failures += 1;
                    self.log(node, TraceEvent::DecodeFail, TraceLabel::Native(uid), TraceDetail::None);
                }
                Transition::Queued(uid) => {
                    self.log(node, TraceEvent::Queue, TraceLabel::Native(uid), from_detail());
                }
                Transition::Encoded { arriving, partner } => {
                    self.counters.encodes += 1;
                    self.counters.per_node_encodes[node.index()] += 1;
                    self.log(
                        node,
                        TraceEvent::Encode,
                        TraceLabel::Encoded(arriving, partner),
                        TraceDetail::Partner(partner),
                    );
                }
                Transition::ForwardEncoded { active } => {
                    if let Some(l) = label {
                        self.log(node, TraceEvent::ForwardEncoded, l, TraceDetail::Branches(active));
                    }
                }
            }
        }
        if self.scenario.scheme == Scheme::Cope {
            // idealized reception reports: instant, lossless, exact
            for uid in buffered {
                for &n in self.topology.neighbors(node) {
                    self.nodes[n.index()].reports.record(node, uid);
                }
            }
        }
        if queue_changed {
            self.wake(node);
        }
    }

    fn deliver(&mut self, node: NodeId, p: &NativePacket) {
        let delay = self.now.saturating_sub(p.created_at);
        let Some(&flow) = self.flow_index.get(&p.flow()) else {
            return;
        };
        let original = self.originals[flow].remove(&p.uid);
        if original.as_deref() != Some(&p.payload[..]) || p.dst() != node {
            self.counters.payload_mismatches += 1;
        }
        self.counters.record_delivery(flow, p.uid, p.payload.len(), delay);
        self.log(
            node,
            TraceEvent::Deliver,
            TraceLabel::Native(p.uid),
            TraceDetail::Delay(delay),
        );
    }

    /// Every generated packet must be exactly once either delivered or in
    /// some node's (or the air's) custody. Returns the number of flows for
    /// which that fails.
    pub fn conservation_violations(&self) -> u64 {
        let mut seen: UidMap<u32> = UidMap::new();
        let custody = self.nodes.iter().flat_map(|n| n.custody()).chain(
            self.radios
                .iter()
                .flat_map(|r| r.pending.iter().chain(r.on_air.iter()))
                .flat_map(|tx| packet_custody(&tx.packet)),
        );
        for uid in custody.chain(self.counters.delivered_uids.iter()) {
            *seen.get_or_insert_with(uid, || 0) += 1;
        }
        let mut bad = alloc::collections::BTreeSet::new();
        for (uid, count) in seen.iter() {
            let in_range = self
                .flow_index
                .get(&uid.flow)
                .is_some_and(|&f| uid.seq < self.counters.generated[f]);
            if *count != 1 || !in_range {
                bad.insert(uid.flow);
            }
        }
        for (i, spec) in self.scenario.flows.iter().enumerate() {
            let accounted = seen.keys().filter(|u| u.flow == spec.flow).count() as u64;
            if accounted != self.counters.generated[i] {
                bad.insert(spec.flow);
            }
        }
        bad.len() as u64
    }

    /// Finishes the run and produces the report and trace.
    pub fn finish(mut self) -> (MetricsReport, TraceLog) {
        self.run_to_end();
        self.counters.conservation_violations = self.conservation_violations();
        let info = RunInfo {
            scheme: self.scenario.scheme,
            seed: self.scenario.seed,
            flows: self.scenario.flows.len(),
            offered_kbps: self.scenario.offered_kbps(),
            duration: self.scenario.duration,
        };
        (finalize(&self.counters, &info), self.trace)
    }
}

/// Runs `scenario` to completion.
pub fn run(scenario: Scenario) -> Result<(MetricsReport, TraceLog), ScenarioError> {
    Ok(Simulation::new(scenario)?.finish())
}
