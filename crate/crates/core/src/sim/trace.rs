//! Structured trace of everything the simulator does.
//!
//! Records render as `time,node,event,packet_uid,detail`. A running Fx
//! digest over the structured fields is always kept, so determinism can be
//! checked without materializing the log.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::hash::{Hash, Hasher};

use rustc_hash::FxHasher;
use smallvec::SmallVec;

use crate::packet::{Packet, PacketUid};
use crate::time::SimTime;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Generate,
    TxStart,
    TxEnd,
    Duplicate,
    Overhear,
    Decode,
    Deliver,
    DecodeFail,
    Queue,
    Encode,
    ForwardEncoded,
}

impl TraceEvent {
    pub fn name(self) -> &'static str {
        match self {
            TraceEvent::Generate => "gen",
            TraceEvent::TxStart => "tx_start",
            TraceEvent::TxEnd => "tx_end",
            TraceEvent::Duplicate => "duplicate",
            TraceEvent::Overhear => "overhear",
            TraceEvent::Decode => "decode",
            TraceEvent::Deliver => "deliver",
            TraceEvent::DecodeFail => "decode_fail",
            TraceEvent::Queue => "queue",
            TraceEvent::Encode => "encode",
            TraceEvent::ForwardEncoded => "forward_encoded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceLabel {
    Native(PacketUid),
    Encoded(PacketUid, PacketUid),
}

impl From<&Packet> for TraceLabel {
    fn from(p: &Packet) -> Self {
        match p {
            Packet::Native(n) => TraceLabel::Native(n.uid),
            Packet::Encoded(e) => TraceLabel::Encoded(e.constituents[0].uid, e.constituents[1].uid),
        }
    }
}

impl fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceLabel::Native(u) => write!(f, "{u}"),
            TraceLabel::Encoded(a, b) => write!(f, "{a}^{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TraceDetail {
    None,
    From(NodeId),
    Partner(PacketUid),
    Delay(SimTime),
    Airtime {
        duration: SimTime,
        addressed: SmallVec<[NodeId; 2]>,
    },
    Branches(SmallVec<[PacketUid; 2]>),
}

impl fmt::Display for TraceDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceDetail::None => Ok(()),
            TraceDetail::From(n) => write!(f, "from={n}"),
            TraceDetail::Partner(u) => write!(f, "partner={u}"),
            TraceDetail::Delay(d) => write!(f, "delay={d}"),
            TraceDetail::Airtime { duration, addressed } => {
                write!(f, "airtime={duration} to=")?;
                for (i, n) in addressed.iter().enumerate() {
                    if i > 0 {
                        f.write_char(' ')?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
            TraceDetail::Branches(uids) => {
                f.write_str("active=")?;
                for (i, u) in uids.iter().enumerate() {
                    if i > 0 {
                        f.write_char(' ')?;
                    }
                    write!(f, "{u}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub event: TraceEvent,
    pub packet: TraceLabel,
    pub detail: TraceDetail,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.time,
            self.node,
            self.event.name(),
            self.packet,
            self.detail
        )
    }
}

/// The trace of one run.
#[derive(Debug, Clone)]
pub struct TraceLog {
    records: Option<Vec<TraceRecord>>,
    digest: u64,
    count: u64,
}

impl TraceLog {
    pub const HEADER: &'static str = "time,node,event,packet_uid,detail";

    /// `keep_records = false` keeps only the digest and count.
    pub fn new(keep_records: bool) -> Self {
        TraceLog {
            records: keep_records.then(Vec::new),
            digest: 0,
            count: 0,
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        let mut hasher = FxHasher::with_seed(self.digest as usize);
        record.hash(&mut hasher);
        self.digest = hasher.finish();
        self.count += 1;
        if let Some(records) = self.records.as_mut() {
            records.push(record);
        }
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Recorded entries; empty when the log was created without records.
    pub fn records(&self) -> &[TraceRecord] {
        self.records.as_deref().unwrap_or(&[])
    }

    /// Header line followed by one line per record, newline terminated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in self.records() {
            let _ = writeln!(out, "{r}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::string::ToString;

    fn rec(seq: u64) -> TraceRecord {
        TraceRecord {
            time: SimTime(2_048_000),
            node: NodeId(1),
            event: TraceEvent::TxStart,
            packet: TraceLabel::Native(PacketUid::new(0, seq)),
            detail: TraceDetail::Airtime {
                duration: SimTime(2_048_000),
                addressed: smallvec::smallvec![NodeId(2)],
            },
        }
    }

    #[test]
    fn record_line_format() {
        assert_eq!(
            rec(3).to_string(),
            "0.002048000,1,tx_start,0.3,airtime=0.002048000 to=2"
        );
        let enc = TraceRecord {
            packet: TraceLabel::Encoded(PacketUid::new(0, 1), PacketUid::new(1, 0)),
            detail: TraceDetail::Partner(PacketUid::new(1, 0)),
            event: TraceEvent::Encode,
            ..rec(0)
        };
        assert_eq!(enc.to_string(), "0.002048000,1,encode,0.1^1.0,partner=1.0");
    }

    #[test]
    fn digest_independent_of_storage() {
        let mut a = TraceLog::new(true);
        let mut b = TraceLog::new(false);
        for s in 0..5 {
            a.push(rec(s));
            b.push(rec(s));
        }
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.records().len(), 5);
        assert!(b.records().is_empty());
        let mut c = TraceLog::new(false);
        c.push(rec(1));
        assert_ne!(c.digest(), b.digest());
        assert!(a.render().starts_with("time,node,event,packet_uid,detail\n"));
    }
}
