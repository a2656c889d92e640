//! Native and encoded packets, holder-set annotation and the pairwise XOR codec.

use alloc::sync::Arc;
use core::fmt;

use smallvec::SmallVec;

use thiserror::Error;

use crate::time::SimTime;
use crate::topology::{NodeId, Route};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identifies one native packet within a run: the flow plus its sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketUid {
    pub flow: FlowId,
    pub seq: u64,
}

impl PacketUid {
    pub fn new(flow: u32, seq: u64) -> Self {
        PacketUid {
            flow: FlowId(flow),
            seq,
        }
    }
}

impl fmt::Display for PacketUid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.flow.0, self.seq)
    }
}

/// The set of nodes known to hold a copy of a packet.
///
/// Stored as a bitset over node ids, inline for up to 128 nodes; only ever
/// grows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct HolderSet {
    // Length is always (max member / 64) + 1, or 0 when empty.
    words: SmallVec<[u64; 2]>,
}

impl HolderSet {
    pub fn new() -> Self {
        HolderSet::default()
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        if self.contains(id) {
            return false;
        }
        let (word, bit) = (id.index() / 64, id.index() % 64);
        let words = &mut self.words;
        if word >= words.len() {
            words.resize(word + 1, 0);
        }
        words[word] |= 1 << bit;
        true
    }

    pub fn contains(&self, id: NodeId) -> bool {
        let (word, bit) = (id.index() / 64, id.index() % 64);
        self.words.get(word).is_some_and(|w| w & (1 << bit) != 0)
    }

    pub fn union_with(&mut self, other: &HolderSet) {
        let covered = other.words.len() <= self.words.len()
            && self.words.iter().zip(other.words.iter()).all(|(w, o)| w | o == *w);
        if covered {
            return;
        }
        let words = &mut self.words;
        if other.words.len() > words.len() {
            words.resize(other.words.len(), 0);
        }
        for (w, o) in words.iter_mut().zip(other.words.iter()) {
            *w |= *o;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Members in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64u32)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| NodeId(i as u32 * 64 + b))
        })
    }

    /// Header bytes the set occupies on the wire.
    pub fn wire_bytes(&self) -> usize {
        self.len() * NodeId::WIRE_BYTES
    }
}

impl FromIterator<NodeId> for HolderSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut set = HolderSet::new();
        for id in iter {
            set.insert(id);
        }
        set
    }
}

/// An un-coded packet as first sent by its source.
#[derive(Debug, Clone, PartialEq)]
pub struct NativePacket {
    pub uid: PacketUid,
    pub route: Route,
    /// Index into `route` of the node that currently has (or is receiving)
    /// custody of the packet.
    pub hop_index: usize,
    pub holders: HolderSet,
    pub payload: Arc<[u8]>,
    pub created_at: SimTime,
}

impl NativePacket {
    pub fn new(uid: PacketUid, route: Route, payload: Arc<[u8]>, created_at: SimTime) -> Self {
        NativePacket {
            uid,
            route,
            hop_index: 0,
            holders: HolderSet::new(),
            payload,
            created_at,
        }
    }

    pub fn flow(&self) -> FlowId {
        self.uid.flow
    }

    pub fn src(&self) -> NodeId {
        self.route.src()
    }

    pub fn dst(&self) -> NodeId {
        self.route.dst()
    }

    pub fn custodian(&self) -> NodeId {
        self.route.nodes()[self.hop_index]
    }

    /// The node after the custodian, `None` once the packet is at its destination.
    pub fn next_hop(&self) -> Option<NodeId> {
        self.route.get(self.hop_index + 1)
    }
}

/// Per-constituent routing state carried inside an encoded packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstituentHeader {
    pub uid: PacketUid,
    pub route: Route,
    pub hop_index: usize,
    /// Holder set as it was when the packet was encoded. Encoded
    /// transmissions never add to it.
    pub holders: HolderSet,
    pub created_at: SimTime,
    /// Whether the current copy's custodian still forwards this branch.
    pub active: bool,
}

impl ConstituentHeader {
    fn from_native(p: &NativePacket) -> Self {
        ConstituentHeader {
            uid: p.uid,
            route: p.route.clone(),
            hop_index: p.hop_index,
            holders: p.holders.clone(),
            created_at: p.created_at,
            active: true,
        }
    }

    pub fn dst(&self) -> NodeId {
        self.route.dst()
    }

    pub fn custodian(&self) -> NodeId {
        self.route.nodes()[self.hop_index]
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.route.get(self.hop_index + 1)
    }

    pub fn at_destination(&self) -> bool {
        self.hop_index + 1 == self.route.len()
    }
}

/// The XOR of exactly two natives from different flows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPacket {
    pub constituents: [ConstituentHeader; 2],
    pub payload: Arc<[u8]>,
    pub created_at: SimTime,
}

impl EncodedPacket {
    pub fn key(&self) -> (PacketUid, PacketUid) {
        (self.constituents[0].uid, self.constituents[1].uid)
    }

    pub fn constituent(&self, uid: PacketUid) -> Option<&ConstituentHeader> {
        self.constituents.iter().find(|c| c.uid == uid)
    }

    pub fn active(&self) -> impl Iterator<Item = &ConstituentHeader> {
        self.constituents.iter().filter(|c| c.active)
    }
}

/// Anything a node queues or puts on the air.
#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Native(NativePacket),
    Encoded(EncodedPacket),
}

impl Packet {
    pub fn payload_len(&self) -> usize {
        match self {
            Packet::Native(p) => p.payload.len(),
            Packet::Encoded(e) => e.payload.len(),
        }
    }

    /// Holder-set header bytes carried by this packet.
    pub fn holder_bytes(&self) -> usize {
        match self {
            Packet::Native(p) => p.holders.wire_bytes(),
            Packet::Encoded(e) => e.constituents.iter().map(|c| c.holders.wire_bytes()).sum(),
        }
    }

    pub fn as_native(&self) -> Option<&NativePacket> {
        match self {
            Packet::Native(p) => Some(p),
            Packet::Encoded(_) => None,
        }
    }

    pub fn is_encoded(&self) -> bool {
        matches!(self, Packet::Encoded(_))
    }

    /// True if any packet of `flow` rides in this packet with custody here.
    pub fn carries_flow(&self, flow: FlowId) -> bool {
        match self {
            Packet::Native(p) => p.flow() == flow,
            Packet::Encoded(e) => e.active().any(|c| c.uid.flow == flow),
        }
    }
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Packet::Native(p) => write!(f, "{}", p.uid),
            Packet::Encoded(e) => write!(f, "{}^{}", e.constituents[0].uid, e.constituents[1].uid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("cannot code two packets of flow {0}")]
    SameFlow(FlowId),
    #[error("payload lengths differ ({left} vs {right} bytes)")]
    LengthMismatch { left: usize, right: usize },
    #[error("packet {0} is not a constituent of the encoded packet")]
    NotConstituent(PacketUid),
}

/// Adds `current` and its one-hop `neighbors` to the packet's holder set.
pub fn annotate_holders(mut packet: NativePacket, current: NodeId, neighbors: &[NodeId]) -> NativePacket {
    packet.holders.insert(current);
    for &n in neighbors {
        packet.holders.insert(n);
    }
    packet
}

fn xor_bytes(a: &[u8], b: &[u8]) -> Arc<[u8]> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// XORs two natives of different flows into one encoded packet. Both
/// constituents start out active.
pub fn xor_encode(p: &NativePacket, q: &NativePacket) -> Result<EncodedPacket, CodecError> {
    if p.flow() == q.flow() {
        return Err(CodecError::SameFlow(p.flow()));
    }
    if p.payload.len() != q.payload.len() {
        return Err(CodecError::LengthMismatch {
            left: p.payload.len(),
            right: q.payload.len(),
        });
    }
    Ok(EncodedPacket {
        constituents: [ConstituentHeader::from_native(p), ConstituentHeader::from_native(q)],
        payload: xor_bytes(&p.payload, &q.payload),
        created_at: p.created_at.max(q.created_at),
    })
}

/// Recovers the constituent of `e` that is not `known`.
pub fn xor_decode(e: &EncodedPacket, known: &NativePacket) -> Result<NativePacket, CodecError> {
    let other = match (e.constituents[0].uid == known.uid, e.constituents[1].uid == known.uid) {
        (true, _) => &e.constituents[1],
        (_, true) => &e.constituents[0],
        _ => return Err(CodecError::NotConstituent(known.uid)),
    };
    if known.payload.len() != e.payload.len() {
        return Err(CodecError::LengthMismatch {
            left: e.payload.len(),
            right: known.payload.len(),
        });
    }
    Ok(NativePacket {
        uid: other.uid,
        route: other.route.clone(),
        hop_index: other.hop_index,
        holders: other.holders.clone(),
        payload: xor_bytes(&e.payload, &known.payload),
        created_at: other.created_at,
    })
}
