//! Run counters and the derived report.

use alloc::vec;
use alloc::vec::Vec;

use crate::coding::Scheme;
use crate::packet::PacketUid;
use crate::time::SimTime;
use crate::uidmap::UidSet;

/// Raw tallies accumulated by the event loop.
#[derive(Debug, Clone, Default)]
pub struct Counters {
    pub generated: Vec<u64>,
    pub delivered: Vec<u64>,
    pub delivered_uids: UidSet,
    last_seq: Vec<Option<u64>>,
    pub delivered_bits: u64,
    pub delay_sum: SimTime,
    pub total_tx: u64,
    pub encoded_tx: u64,
    pub encodes: u64,
    pub decode_failures: u64,
    pub header_bytes: u64,
    pub per_node_encodes: Vec<u64>,
    pub fifo_violations: u64,
    pub duplicate_deliveries: u64,
    pub payload_mismatches: u64,
    pub radio_violations: u64,
    pub causality_violations: u64,
    pub conservation_violations: u64,
}

impl Counters {
    pub fn new(flows: usize, nodes: usize) -> Self {
        Counters {
            generated: vec![0; flows],
            delivered: vec![0; flows],
            last_seq: vec![None; flows],
            per_node_encodes: vec![0; nodes],
            ..Counters::default()
        }
    }

    /// Records one delivery of `uid` (flow index `flow`) after `delay`.
    pub fn record_delivery(&mut self, flow: usize, uid: PacketUid, payload_bytes: usize, delay: SimTime) {
        if !self.delivered_uids.insert(uid) {
            self.duplicate_deliveries += 1;
            return;
        }
        if self.last_seq[flow].is_some_and(|last| uid.seq <= last) {
            self.fifo_violations += 1;
        }
        self.last_seq[flow] = Some(uid.seq);
        self.delivered[flow] += 1;
        self.delivered_bits += 8 * payload_bytes as u64;
        self.delay_sum = self.delay_sum + delay;
    }
}

/// What a run measured.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scheme: Scheme,
    pub seed: u64,
    pub flows: usize,
    /// Aggregate nominal generation rate, kb/s.
    pub offered_kbps: f64,
    /// Delivered payload, kb/s over the run duration.
    pub throughput_kbps: f64,
    /// Encoded transmissions over all data transmissions.
    pub encoded_fraction: f64,
    pub delivery_ratio: f64,
    /// Mean end-to-end delay of delivered packets; `None` if nothing arrived.
    pub mean_delay_s: Option<f64>,
    pub total_tx: u64,
    pub encoded_tx: u64,
    pub encode_count: u64,
    pub decode_failures: u64,
    pub generated: u64,
    pub delivered: u64,
    pub header_bytes: u64,
    /// Coding events per node, indexed by node id.
    pub per_node_encodes: Vec<u64>,
    pub fifo_violations: u64,
    pub duplicate_deliveries: u64,
    pub payload_mismatches: u64,
    pub radio_violations: u64,
    pub causality_violations: u64,
    pub conservation_violations: u64,
}

impl MetricsReport {
    /// True when no protocol invariant was violated during the run.
    pub fn invariants_hold(&self) -> bool {
        self.decode_failures == 0
            && self.fifo_violations == 0
            && self.duplicate_deliveries == 0
            && self.payload_mismatches == 0
            && self.radio_violations == 0
            && self.causality_violations == 0
            && self.conservation_violations == 0
    }
}

/// Run-level parameters `finalize` needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunInfo {
    pub scheme: Scheme,
    pub seed: u64,
    pub flows: usize,
    pub offered_kbps: f64,
    /// Seconds over which throughput is averaged.
    pub duration: f64,
}

pub fn finalize(counters: &Counters, info: &RunInfo) -> MetricsReport {
    let generated: u64 = counters.generated.iter().sum();
    let delivered: u64 = counters.delivered.iter().sum();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    MetricsReport {
        scheme: info.scheme,
        seed: info.seed,
        flows: info.flows,
        offered_kbps: info.offered_kbps,
        throughput_kbps: counters.delivered_bits as f64 / info.duration / 1000.0,
        encoded_fraction: ratio(counters.encoded_tx, counters.total_tx),
        delivery_ratio: ratio(delivered, generated),
        mean_delay_s: (delivered > 0).then(|| counters.delay_sum.as_secs_f64() / delivered as f64),
        total_tx: counters.total_tx,
        encoded_tx: counters.encoded_tx,
        encode_count: counters.encodes,
        decode_failures: counters.decode_failures,
        generated,
        delivered,
        header_bytes: counters.header_bytes,
        per_node_encodes: counters.per_node_encodes.clone(),
        fifo_violations: counters.fifo_violations,
        duplicate_deliveries: counters.duplicate_deliveries,
        payload_mismatches: counters.payload_mismatches,
        radio_violations: counters.radio_violations,
        causality_violations: counters.causality_violations,
        conservation_violations: counters.conservation_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info() -> RunInfo {
        RunInfo {
            scheme: Scheme::Excode,
            seed: 1,
            flows: 1,
            offered_kbps: 0.0,
            duration: 120.0,
        }
    }

    #[test]
    fn throughput_arithmetic() {
        let mut c = Counters::new(1, 2);
        for seq in 0..100 {
            c.record_delivery(0, PacketUid::new(0, seq), 512, SimTime(1_000_000));
            c.generated[0] += 1;
        }
        let r = finalize(&c, &info());
        // 100 * 512 * 8 / 120 / 1000
        assert!((r.throughput_kbps - 3.413_333_333).abs() < 1e-6);
        assert_eq!(r.delivery_ratio, 1.0);
        assert!((r.mean_delay_s.unwrap() - 0.001).abs() < 1e-12);
        assert!(r.invariants_hold());
    }

    #[test]
    fn nothing_delivered() {
        let mut c = Counters::new(1, 2);
        c.generated[0] = 5;
        let r = finalize(&c, &info());
        assert_eq!(r.throughput_kbps, 0.0);
        assert_eq!(r.delivery_ratio, 0.0);
        assert_eq!(r.mean_delay_s, None);
        assert_eq!(r.encoded_fraction, 0.0);
    }

    #[test]
    fn encoded_fraction_counts_transmissions() {
        let mut c = Counters::new(1, 2);
        c.total_tx = 3;
        c.encoded_tx = 1;
        let r = finalize(&c, &info());
        assert!((r.encoded_fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reordering_and_duplicates_are_flagged() {
        let mut c = Counters::new(1, 1);
        c.record_delivery(0, PacketUid::new(0, 1), 8, SimTime(0));
        c.record_delivery(0, PacketUid::new(0, 0), 8, SimTime(0));
        c.record_delivery(0, PacketUid::new(0, 0), 8, SimTime(0));
        assert_eq!(c.fifo_violations, 1);
        assert_eq!(c.duplicate_deliveries, 1);
        assert_eq!(c.delivered[0], 2);
    }
}
