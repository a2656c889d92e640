//! Constant-bit-rate packet sources.

use crate::packet::FlowId;
use crate::time::SimTime;
use crate::topology::NodeId;

/// One CBR flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub flow: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Packets per second.
    pub rate: f64,
    /// Payload bytes per packet.
    pub packet_size: usize,
    /// Seconds.
    pub start: f64,
    /// Seconds; no packet is generated at or after this time.
    pub stop: f64,
}

impl FlowSpec {
    pub fn new(flow: u32, src: u32, dst: u32, rate: f64, packet_size: usize, start: f64, stop: f64) -> Self {
        FlowSpec {
            flow: FlowId(flow),
            src: NodeId(src),
            dst: NodeId(dst),
            rate,
            packet_size,
            start,
            stop,
        }
    }

    /// Offered load in kilobits per second.
    pub fn offered_kbps(&self) -> f64 {
        self.rate * self.packet_size as f64 * 8.0 / 1000.0
    }
}

/// Generation instants of a flow: packet `k` at `start + k / rate`, strictly
/// before `stop`.
#[derive(Debug, Clone)]
pub struct CbrSource {
    start: f64,
    interval: f64,
    stop: SimTime,
    next_seq: u64,
}

impl Iterator for CbrSource {
    type Item = (SimTime, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let at = SimTime::from_secs_f64(self.start + self.next_seq as f64 * self.interval);
        if at >= self.stop {
            return None;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        Some((at, seq))
    }
}

/// The packet generation schedule of `flow`, cut off at `horizon` seconds.
pub fn generate_traffic(flow: &FlowSpec, horizon: f64) -> CbrSource {
    CbrSource {
        start: flow.start,
        interval: 1.0 / flow.rate,
        stop: SimTime::from_secs_f64(flow.stop.min(horizon)),
        next_seq: 0,
    }
}
