//! Holder-set based XOR coding opportunity discovery for multi-hop wireless
//! networks, plus a deterministic discrete-event simulator that compares it
//! against an idealized two-hop reception-report scheme and plain
//! store-and-forward.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command line live in the `excode-sim` crate.

#![no_std]
// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coding;
pub mod fixtures;
pub mod metrics;
pub mod node;
pub mod packet;
pub mod sim;
pub mod time;
pub mod topology;
pub mod uidmap;

pub use coding::{cope_can_code, excode_can_code, find_partner, ReceptionReportTable, Scheme};
pub use metrics::MetricsReport;
pub use node::{NodeState, Role};
pub use packet::{
    annotate_holders, xor_decode, xor_encode, CodecError, ConstituentHeader, EncodedPacket, FlowId, HolderSet,
    NativePacket, Packet, PacketUid,
};
pub use sim::{run, FlowSpec, Scenario, ScenarioError, Simulation, TraceLog, Transmission};
pub use time::SimTime;
pub use topology::{build_topology, random_layout, shortest_path, NodeId, Position, Route, Topology, TopologyError};
