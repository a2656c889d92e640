//! Small hand-placed topologies with two crossing single-packet flows.
//!
//! Every fixture uses a 200 m radio range and the default 2 Mb/s channel.
//! Flow start times are staggered where needed so that both packets reach the
//! coding relay at the same instant.

use alloc::vec;
use alloc::vec::Vec;

use crate::coding::Scheme;
use crate::sim::{FlowSpec, Scenario};
use crate::topology::{NodeId, Position};

/// A named regression scenario.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub scenario: Scenario,
    /// The relay where the two flows can be coded together.
    pub relay: NodeId,
    /// Node names, indexed by id.
    pub labels: Vec<&'static str>,
}

const AIRTIME_512B: f64 = 512.0 * 8.0 / 2_000_000.0;

fn single_packet(flow: u32, src: u32, dst: u32, start: f64) -> FlowSpec {
    FlowSpec::new(flow, src, dst, 1.0, Scenario::DEFAULT_PACKET_SIZE, start, start + 0.5)
}

fn scenario(positions: Vec<(f64, f64)>, flows: Vec<FlowSpec>, scheme: Scheme) -> Scenario {
    let mut s = Scenario::with_positions(positions.into_iter().map(Position::from).collect(), flows, scheme);
    s.duration = 1.0;
    s.keep_trace = true;
    s
}

/// A–C–E: A sends to E while E sends to A.
pub fn chain(scheme: Scheme) -> Fixture {
    Fixture {
        name: "chain",
        scenario: scenario(
            vec![(0.0, 0.0), (150.0, 0.0), (300.0, 0.0)],
            vec![single_packet(0, 0, 2, 0.0), single_packet(1, 2, 0, 0.0)],
            scheme,
        ),
        relay: NodeId(1),
        labels: vec!["A", "C", "E"],
    }
}

/// X topology around relay C: S1→D1 and S2→D2 cross at C, and each
/// destination is in range of the other flow's source.
pub fn x_topology(scheme: Scheme) -> Fixture {
    Fixture {
        name: "x",
        scenario: scenario(
            vec![(0.0, 0.0), (-90.0, 90.0), (-90.0, -90.0), (90.0, -90.0), (90.0, 90.0)],
            vec![single_packet(0, 1, 3, 0.0), single_packet(1, 2, 4, 0.0)],
            scheme,
        ),
        relay: NodeId(0),
        labels: vec!["C", "S1", "S2", "D1", "D2"],
    }
}

/// p: A→C→E→G and q: F→D→C→B. G overhears q at F and B overhears p at A,
/// but neither destination is a neighbor of C.
pub fn remote_destinations(scheme: Scheme) -> Fixture {
    Fixture {
        name: "remote",
        scenario: scenario(
            vec![
                (-180.0, 0.0),
                (-90.0, -150.0),
                (0.0, 0.0),
                (150.0, 100.0),
                (180.0, 0.0),
                (300.0, 170.0),
                (360.0, 0.0),
            ],
            // q needs one extra hop to reach C
            vec![single_packet(0, 0, 6, AIRTIME_512B), single_packet(1, 5, 1, 0.0)],
            scheme,
        ),
        relay: NodeId(2),
        labels: vec!["A", "B", "C", "D", "E", "F", "G"],
    }
}

/// p: S→O1→O2→O3→D→D1 and q: D→O3→O2→O1→S→Sj, five hops each, meeting at
/// the interior relay O2. Sj hears p from S and D1 hears q from D. S1, D2
/// and O2n are extra neighbors that only widen the holder sets.
pub fn crossing_flows(scheme: Scheme) -> Fixture {
    Fixture {
        name: "crossing",
        scenario: scenario(
            vec![
                (0.0, 0.0),
                (180.0, 0.0),
                (360.0, 0.0),
                (540.0, 0.0),
                (720.0, 0.0),
                (900.0, 0.0),
                (1080.0, 0.0),
                (180.0, 150.0),
                (900.0, 150.0),
                (540.0, 150.0),
            ],
            vec![single_packet(0, 1, 6, 0.0), single_packet(1, 5, 0, 0.0)],
            scheme,
        ),
        relay: NodeId(3),
        labels: vec!["Sj", "S", "O1", "O2", "O3", "D", "D1", "S1", "D2", "O2n"],
    }
}

/// All fixtures for one scheme.
pub fn all(scheme: Scheme) -> [Fixture; 4] {
    [
        chain(scheme),
        x_topology(scheme),
        remote_destinations(scheme),
        crossing_flows(scheme),
    ]
}
