//! The broadcast medium: every neighbor of a sender receives each
//! transmission intact when it ends. No interference, no loss.

use smallvec::SmallVec;

use crate::packet::Packet;
use crate::time::SimTime;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    /// Bits per second.
    pub rate_bps: f64,
    /// Include holder-set header bytes in airtime.
    pub count_header_overhead: bool,
}

impl Channel {
    pub fn airtime(&self, payload_bytes: usize, header_bytes: usize) -> SimTime {
        let header = if self.count_header_overhead { header_bytes } else { 0 };
        let bits = 8.0 * (payload_bytes + header) as f64;
        SimTime::from_secs_f64(bits / self.rate_bps)
    }
}

/// One broadcast, heard by every neighbor of the sender.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub sender: NodeId,
    pub packet: Packet,
    pub duration: SimTime,
    /// Next hops of the packet (or of its active constituents), ascending.
    pub addressed: SmallVec<[NodeId; 2]>,
    /// Holder-set bytes carried, whether or not they count toward airtime.
    pub header_bytes: usize,
}

impl Transmission {
    /// Neighbors of the sender that are not addressed.
    pub fn overhearers<'a>(&'a self, topology: &'a Topology) -> impl Iterator<Item = NodeId> + 'a {
        topology
            .neighbors(self.sender)
            .iter()
            .copied()
            .filter(|n| !self.addressed.contains(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn airtime_of_default_packet() {
        let ch = Channel {
            rate_bps: 2_000_000.0,
            count_header_overhead: false,
        };
        assert_eq!(ch.airtime(512, 64), SimTime(2_048_000));
        let ch = Channel {
            count_header_overhead: true,
            ..ch
        };
        assert_eq!(ch.airtime(512, 64), SimTime(2_304_000));
    }
}
