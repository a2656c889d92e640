//! Coding-opportunity decisions.
//!
//! Two packets waiting at a relay may be XORed together only when each
//! destination is guaranteed to already hold the other packet. The holder-set
//! scheme reads that guarantee off the packets themselves; the reception-report
//! baseline can only see what its one-hop neighbors have reported.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::packet::{NativePacket, Packet, PacketUid};
use crate::topology::{NodeId, Topology};
use crate::uidmap::UidSet;

/// Coding scheme used by every node for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Plain store-and-forward.
    NonCoding,
    /// Reception-report based discovery limited to the two-hop region.
    Cope,
    /// Holder-set based discovery.
    Excode,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Excode, Scheme::Cope, Scheme::NonCoding];
    pub const NAMES: [&'static str; 3] = ["excode", "cope", "none"];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NonCoding => "none",
            Scheme::Cope => "cope",
            Scheme::Excode => "excode",
        }
    }

    pub fn codes(self) -> bool {
        self != Scheme::NonCoding
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scheme {0:?}, expected one of: excode, cope, none")]
pub struct UnknownScheme(pub alloc::string::String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "excode" => Ok(Scheme::Excode),
            "cope" => Ok(Scheme::Cope),
            "none" | "noncoding" | "non-coding" => Ok(Scheme::NonCoding),
            _ => Err(UnknownScheme(s.into())),
        }
    }
}

/// A node's advertisement of the native packets it stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptionReport {
    pub from: NodeId,
    pub uids: Vec<PacketUid>,
}

/// What each one-hop neighbor has reported holding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceptionReportTable {
    entries: BTreeMap<NodeId, UidSet>,
}

impl ReceptionReportTable {
    /// An empty table accepting reports from exactly `neighbors`.
    pub fn new(neighbors: &[NodeId]) -> Self {
        ReceptionReportTable {
            entries: neighbors.iter().map(|n| (*n, UidSet::new())).collect(),
        }
    }

    /// Records that `neighbor` holds `uid`. Ignored (returns false) for
    /// nodes that are not one-hop neighbors.
    pub fn record(&mut self, neighbor: NodeId, uid: PacketUid) -> bool {
        match self.entries.get_mut(&neighbor) {
            Some(set) => {
                set.insert(uid);
                true
            }
            None => false,
        }
    }

    /// Replaces what is known about the report's sender with its contents.
    pub fn apply(&mut self, report: &ReceptionReport) -> bool {
        match self.entries.get_mut(&report.from) {
            Some(set) => {
                *set = report.uids.iter().copied().collect();
                true
            }
            None => false,
        }
    }

    pub fn holds(&self, neighbor: NodeId, uid: PacketUid) -> bool {
        self.entries.get(&neighbor).is_some_and(|s| s.contains(&uid))
    }

    pub fn reported(&self, neighbor: NodeId) -> Option<&UidSet> {
        self.entries.get(&neighbor)
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(|s| s.is_empty())
    }
}

/// Holder-set rule: `p`'s destination holds `q` and `q`'s destination holds `p`.
pub fn excode_can_code(p: &NativePacket, q: &NativePacket) -> bool {
    p.flow() != q.flow() && q.holders.contains(p.dst()) && p.holders.contains(q.dst())
}

/// The node that consumes `p` after `relay`, if that is where it gets decoded.
///
/// Encoded packets are only decoded at final destinations, so a reception
/// report is only useful when the next hop is the destination itself.
fn next_consumer(p: &NativePacket, relay: NodeId) -> Option<NodeId> {
    let at = p.route.position_of(relay)?;
    let next = p.route.get(at + 1)?;
    (next == p.dst()).then_some(next)
}

/// Reception-report rule: the next consumer of each packet is a one-hop
/// neighbor of `relay` reported to hold the other packet.
pub fn cope_can_code(
    p: &NativePacket,
    q: &NativePacket,
    reports: &ReceptionReportTable,
    topology: &Topology,
    relay: NodeId,
) -> bool {
    if p.flow() == q.flow() {
        return false;
    }
    let holds = |x: &NativePacket, y: &NativePacket| {
        next_consumer(x, relay).is_some_and(|c| topology.adjacent(relay, c) && reports.holds(c, y.uid))
    };
    holds(p, q) && holds(q, p)
}

/// What a relay knows when searching for a coding partner.
#[derive(Debug, Clone, Copy)]
pub struct CodingContext<'a> {
    pub node: NodeId,
    pub topology: &'a Topology,
    pub reports: &'a ReceptionReportTable,
}

impl CodingContext<'_> {
    pub fn can_code(&self, scheme: Scheme, p: &NativePacket, q: &NativePacket) -> bool {
        match scheme {
            Scheme::NonCoding => false,
            Scheme::Excode => excode_can_code(p, q),
            Scheme::Cope => cope_can_code(p, q, self.reports, self.topology, self.node),
        }
    }
}

/// Position (within `queue`) of the first native that can be coded with `p`.
/// Encoded packets are never partners.
pub fn find_partner<'q>(
    p: &NativePacket,
    queue: impl IntoIterator<Item = &'q Packet>,
    scheme: Scheme,
    ctx: &CodingContext<'_>,
) -> Option<usize> {
    if !scheme.codes() {
        return None;
    }
    queue.into_iter().position(|candidate| match candidate {
        Packet::Native(q) => ctx.can_code(scheme, p, q),
        Packet::Encoded(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::HolderSet;
    use crate::time::SimTime;
    use crate::topology::{build_topology, shortest_path, Position};
    use alloc::vec;

    // remote-destination layout: A=0 B=1 C=2 D=3 E=4 F=5 G=6
    fn remote_layout() -> Topology {
        build_topology(
            &[
                Position::new(-180.0, 0.0),
                Position::new(-90.0, -150.0),
                Position::new(0.0, 0.0),
                Position::new(150.0, 100.0),
                Position::new(180.0, 0.0),
                Position::new(300.0, 170.0),
                Position::new(360.0, 0.0),
            ],
            200.0,
        )
        .unwrap()
    }

    fn pkt(t: &Topology, flow: u32, src: u32, dst: u32, hop: usize, holders: &[u32]) -> NativePacket {
        let route = shortest_path(t, NodeId(src), NodeId(dst)).unwrap();
        let mut p = NativePacket::new(PacketUid::new(flow, 0), route, vec![0; 4].into(), SimTime(0));
        p.hop_index = hop;
        p.holders = holders.iter().map(|&i| NodeId(i)).collect::<HolderSet>();
        p
    }

    #[test]
    fn holder_rule_accepts_the_remote_pair() {
        let t = remote_layout();
        let p = pkt(&t, 0, 0, 6, 1, &[0, 1, 2]);
        let q = pkt(&t, 1, 5, 1, 2, &[5, 6, 3]);
        assert!(excode_can_code(&p, &q));
        assert!(excode_can_code(&q, &p));
    }

    #[test]
    fn holder_rule_guards() {
        let t = remote_layout();
        let p = pkt(&t, 0, 0, 6, 1, &[0, 1, 2]);
        let mut same = pkt(&t, 0, 5, 1, 2, &[5, 6, 3]);
        assert!(!excode_can_code(&p, &same));
        same.uid.flow = crate::packet::FlowId(1);
        same.holders = HolderSet::new();
        assert!(!excode_can_code(&p, &same));
    }

    #[test]
    fn reports_cannot_see_beyond_two_hops() {
        let t = remote_layout();
        let p = pkt(&t, 0, 0, 6, 1, &[0, 1, 2]);
        let q = pkt(&t, 1, 5, 1, 2, &[5, 6, 3]);
        let mut reports = ReceptionReportTable::new(t.neighbors(NodeId(2)));
        // B overheard p; G is out of reach and cannot report q
        reports.record(NodeId(1), p.uid);
        assert!(!reports.record(NodeId(6), q.uid));
        assert!(!cope_can_code(&p, &q, &reports, &t, NodeId(2)));
        assert!(!cope_can_code(&p, &q, &ReceptionReportTable::new(&[]), &t, NodeId(2)));
    }

    #[test]
    fn reports_allow_chain_exchange() {
        let t = build_topology(
            &[
                Position::new(0.0, 0.0),
                Position::new(150.0, 0.0),
                Position::new(300.0, 0.0),
            ],
            200.0,
        )
        .unwrap();
        let p = pkt(&t, 0, 0, 2, 1, &[0, 1]);
        let q = pkt(&t, 1, 2, 0, 1, &[2, 1]);
        let mut reports = ReceptionReportTable::new(t.neighbors(NodeId(1)));
        assert!(reports.is_empty());
        reports.record(NodeId(0), p.uid);
        assert!(!cope_can_code(&p, &q, &reports, &t, NodeId(1)));
        reports.record(NodeId(2), q.uid);
        assert!(cope_can_code(&p, &q, &reports, &t, NodeId(1)));
    }

    #[test]
    fn apply_replaces_entry() {
        let mut table = ReceptionReportTable::new(&[NodeId(1)]);
        table.record(NodeId(1), PacketUid::new(0, 0));
        table.apply(&ReceptionReport {
            from: NodeId(1),
            uids: vec![PacketUid::new(0, 1)],
        });
        assert!(!table.holds(NodeId(1), PacketUid::new(0, 0)));
        assert!(table.holds(NodeId(1), PacketUid::new(0, 1)));
        assert!(!table.apply(&ReceptionReport {
            from: NodeId(4),
            uids: vec![]
        }));
    }

    #[test]
    fn partner_search_takes_earliest_eligible() {
        let t = remote_layout();
        let reports = ReceptionReportTable::new(t.neighbors(NodeId(2)));
        let ctx = CodingContext {
            node: NodeId(2),
            topology: &t,
            reports: &reports,
        };
        let p = pkt(&t, 0, 0, 6, 1, &[0, 1, 2]);
        // candidate 0: wrong holders; 1 and 2 eligible
        let bad = pkt(&t, 1, 5, 1, 2, &[5]);
        let mut good1 = pkt(&t, 2, 5, 1, 2, &[5, 6, 3]);
        good1.uid.seq = 1;
        let good2 = pkt(&t, 3, 5, 1, 2, &[5, 6, 3, 4]);
        let queue = vec![Packet::Native(bad), Packet::Native(good1), Packet::Native(good2)];
        // exhaustive oracle
        let oracle = queue.iter().position(|c| match c {
            Packet::Native(q) => q.flow() != p.flow() && q.holders.contains(p.dst()) && p.holders.contains(q.dst()),
            _ => false,
        });
        assert_eq!(oracle, Some(1));
        assert_eq!(find_partner(&p, &queue, Scheme::Excode, &ctx), oracle);
        assert_eq!(find_partner(&p, &queue, Scheme::NonCoding, &ctx), None);
        assert_eq!(find_partner(&p, &[], Scheme::Excode, &ctx), None);
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        let err = "bogus".parse::<Scheme>().unwrap_err();
        assert!(alloc::format!("{err}").contains("excode, cope, none"));
    }
}
