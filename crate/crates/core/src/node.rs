//! Per-node protocol state: the receiving procedure (duplicate filter,
//! overhearing, delivery, relaying with partner search) and the sending
//! procedure (holder annotation and broadcast).
//!
//! Relayed natives wait in the input queue until the radio is free. A packet
//! arriving for relay is checked against everything already waiting there;
//! on a match the encoded packet takes the partner's place in the queue. When
//! the radio goes idle the head of the input queue moves to the output queue
//! and is sent.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use smallvec::{smallvec, SmallVec};

use crate::coding::{find_partner, CodingContext, ReceptionReport, ReceptionReportTable, Scheme};
use crate::packet::{annotate_holders, xor_decode, xor_encode, EncodedPacket, NativePacket, Packet, PacketUid};
use crate::sim::{Channel, Transmission};
use crate::time::SimTime;
use crate::topology::{NodeId, Topology};
use crate::uidmap::{UidMap, UidSet};

/// How a packet reached a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// The node is the next hop or final destination of the packet (or of at
    /// least one active constituent).
    Addressed,
    /// Picked up only because the node is in radio range of the sender.
    Overheard,
}

/// Duplicate filter: natives by arrival role, encoded packets overheard by
/// constituent pair.
#[derive(Debug, Clone, Default)]
struct SeenFilter {
    addressed: UidSet,
    overheard: UidSet,
    encoded: BTreeSet<(PacketUid, PacketUid)>,
}

impl SeenFilter {
    fn contains(&self, uid: PacketUid, role: Role) -> bool {
        match role {
            Role::Addressed => self.addressed.contains(&uid),
            Role::Overheard => self.overheard.contains(&uid),
        }
    }

    /// Returns `false` if already present.
    fn insert(&mut self, uid: PacketUid, role: Role) -> bool {
        match role {
            Role::Addressed => self.addressed.insert(uid),
            Role::Overheard => self.overheard.insert(uid),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub transmissions: u64,
    pub encoded_transmissions: u64,
    pub encodes: u64,
    pub decodes: u64,
    pub overhears: u64,
    pub duplicates: u64,
    pub deliveries: u64,
    pub decode_failures: u64,
}

/// A state change taken while handling one arrival.
#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    Discarded,
    Overheard {
        stored: bool,
    },
    /// A native recovered from an encoded packet into the buffer.
    Decoded(PacketUid),
    Delivered(Box<NativePacket>),
    DecodeImpossible(PacketUid),
    Queued(PacketUid),
    Encoded {
        arriving: PacketUid,
        partner: PacketUid,
    },
    ForwardEncoded {
        active: SmallVec<[PacketUid; 2]>,
    },
}

/// Everything that happened on one arrival.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reception {
    pub transitions: SmallVec<[Transition; 3]>,
    /// Natives that entered the buffer for the first time.
    pub buffered: SmallVec<[PacketUid; 2]>,
    /// Whether the input or output queue changed.
    pub queue_changed: bool,
}

impl Reception {
    fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }
}

/// Read-only facts a node needs while handling packets.
#[derive(Debug, Clone, Copy)]
pub struct NodeEnv<'a> {
    pub topology: &'a Topology,
    pub scheme: Scheme,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    id: NodeId,
    input_queue: VecDeque<Packet>,
    output_queue: VecDeque<Packet>,
    buffer: UidMap<NativePacket>,
    encoded_buffer: BTreeMap<(PacketUid, PacketUid), EncodedPacket>,
    seen: SeenFilter,
    pub reports: ReceptionReportTable,
    pub stats: NodeStats,
}

impl NodeState {
    pub fn new(id: NodeId, topology: &Topology) -> Self {
        NodeState {
            id,
            input_queue: VecDeque::new(),
            output_queue: VecDeque::new(),
            buffer: UidMap::new(),
            encoded_buffer: BTreeMap::new(),
            seen: SeenFilter::default(),
            reports: ReceptionReportTable::new(topology.neighbors(id)),
            stats: NodeStats::default(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn input_queue(&self) -> &VecDeque<Packet> {
        &self.input_queue
    }

    pub fn output_queue(&self) -> &VecDeque<Packet> {
        &self.output_queue
    }

    pub fn has_pending(&self) -> bool {
        !self.input_queue.is_empty() || !self.output_queue.is_empty()
    }

    /// Native packets held in the buffer.
    pub fn buffer(&self) -> &UidMap<NativePacket> {
        &self.buffer
    }

    pub fn holds(&self, uid: PacketUid) -> bool {
        self.buffer.contains_key(&uid)
    }

    pub fn encoded_buffer(&self) -> impl Iterator<Item = &EncodedPacket> {
        self.encoded_buffer.values()
    }

    /// Whether the duplicate filter has seen `uid` in any role.
    pub fn has_seen(&self, uid: PacketUid) -> bool {
        self.seen.contains(uid, Role::Addressed) || self.seen.contains(uid, Role::Overheard)
    }

    /// Whether an arrival of `uid` in `role` would be dropped as a duplicate.
    pub fn is_duplicate(&self, uid: PacketUid, role: Role) -> bool {
        self.seen.contains(uid, role)
    }

    /// Takes a freshly generated packet from a local source.
    pub fn originate(&mut self, packet: NativePacket) -> Reception {
        let mut out = Reception::default();
        self.seen.insert(packet.uid, Role::Addressed);
        if self.store(&packet) {
            out.buffered.push(packet.uid);
        }
        out.push(Transition::Queued(packet.uid));
        self.input_queue.push_back(Packet::Native(packet));
        out.queue_changed = true;
        out
    }

    fn store(&mut self, p: &NativePacket) -> bool {
        if self.buffer.contains_key(&p.uid) {
            return false;
        }
        self.buffer.insert(p.uid, p.clone());
        true
    }

    /// Handles a packet delivered by the channel.
    ///
    /// Branches are tried in order: duplicate, overheard, final destination,
    /// relay.
    pub fn on_receive(&mut self, env: &NodeEnv<'_>, packet: &Packet, role: Role, now: SimTime) -> Reception {
        match packet {
            Packet::Native(p) => self.receive_native(env, p, role, now),
            Packet::Encoded(e) => self.receive_encoded(e, role),
        }
    }

    fn receive_native(&mut self, env: &NodeEnv<'_>, p: &NativePacket, role: Role, now: SimTime) -> Reception {
        let mut out = Reception::default();
        if !self.seen.insert(p.uid, role) {
            self.stats.duplicates += 1;
            out.push(Transition::Discarded);
            return out;
        }
        if role == Role::Overheard {
            self.stats.overhears += 1;
            let stored = self.store(p);
            if stored {
                out.buffered.push(p.uid);
            }
            out.push(Transition::Overheard { stored });
            return out;
        }
        if self.store(p) {
            out.buffered.push(p.uid);
        }
        if p.dst() == self.id {
            self.stats.deliveries += 1;
            out.push(Transition::Delivered(Box::new(p.clone())));
            return out;
        }
        out.queue_changed = true;
        let start = self.coding_window_start(p);
        let ctx = CodingContext {
            node: self.id,
            topology: env.topology,
            reports: &self.reports,
        };
        match find_partner(p, self.input_queue.range(start..), env.scheme, &ctx) {
            Some(offset) => {
                let slot = start + offset;
                let Packet::Native(q) = &self.input_queue[slot] else {
                    unreachable!("partners are always natives")
                };
                let partner = q.uid;
                let mut e = xor_encode(p, q).expect("partners come from distinct flows with equal sizes");
                e.created_at = now;
                self.encoded_buffer.insert(e.key(), e.clone());
                self.input_queue[slot] = Packet::Encoded(e);
                self.stats.encodes += 1;
                out.push(Transition::Encoded {
                    arriving: p.uid,
                    partner,
                });
            }
            None => {
                self.input_queue.push_back(Packet::Native(p.clone()));
                out.push(Transition::Queued(p.uid));
            }
        }
        out
    }

    /// First input-queue index a partner for `p` may occupy: anything
    /// earlier would let `p` overtake a queued packet of its own flow.
    pub fn coding_window_start(&self, p: &NativePacket) -> usize {
        self.input_queue
            .iter()
            .rposition(|q| q.carries_flow(p.flow()))
            .map_or(0, |i| i + 1)
    }

    /// Natives in the partner-search window for `p`, in scan order.
    pub fn partner_candidates<'a>(&'a self, p: &NativePacket) -> impl Iterator<Item = &'a NativePacket> + 'a {
        let start = self.coding_window_start(p);
        self.input_queue.range(start..).filter_map(Packet::as_native)
    }

    fn receive_encoded(&mut self, e: &EncodedPacket, role: Role) -> Reception {
        let mut out = Reception::default();
        let addressed: Vec<usize> = (0..2)
            .filter(|&i| e.constituents[i].active && e.constituents[i].custodian() == self.id)
            .collect();
        let fresh = match role {
            Role::Overheard => self.seen.encoded.insert(e.key()),
            Role::Addressed => addressed
                .iter()
                .map(|&i| self.seen.insert(e.constituents[i].uid, Role::Addressed))
                .fold(false, |acc, new| acc | new),
        };
        if !fresh {
            self.stats.duplicates += 1;
            out.push(Transition::Discarded);
            return out;
        }
        if role == Role::Overheard {
            self.stats.overhears += 1;
            out.push(Transition::Overheard { stored: true });
        }
        self.encoded_buffer.entry(e.key()).or_insert_with(|| e.clone());
        self.recover_missing(e, &mut out);
        if role == Role::Overheard {
            return out;
        }

        for &i in &addressed {
            let c = &e.constituents[i];
            if !c.at_destination() {
                continue;
            }
            match self.buffer.get(&c.uid) {
                Some(native) => {
                    let mut delivered = native.clone();
                    delivered.hop_index = c.hop_index;
                    self.stats.deliveries += 1;
                    out.push(Transition::Delivered(Box::new(delivered)));
                }
                None => {
                    self.stats.decode_failures += 1;
                    out.push(Transition::DecodeImpossible(c.uid));
                }
            }
        }
        if let Some(active) = self.forward_encoded(e) {
            out.queue_changed = true;
            out.push(Transition::ForwardEncoded { active });
        }
        out
    }

    /// Decodes the unknown constituent into the buffer when exactly one is held.
    fn recover_missing(&mut self, e: &EncodedPacket, out: &mut Reception) {
        let held: Vec<&NativePacket> = e.constituents.iter().filter_map(|c| self.buffer.get(&c.uid)).collect();
        if held.len() != 1 {
            return;
        }
        let Ok(native) = xor_decode(e, held[0]) else {
            return;
        };
        let uid = native.uid;
        self.seen.insert(uid, Role::Overheard);
        self.buffer.insert(uid, native);
        self.stats.decodes += 1;
        out.buffered.push(uid);
        out.push(Transition::Decoded(uid));
    }

    /// Queues `e` for onward broadcast with only the branches this node
    /// relays left active. Returns those branches, or `None` if the node
    /// relays none of them. Never re-encodes.
    pub fn forward_encoded(&mut self, e: &EncodedPacket) -> Option<SmallVec<[PacketUid; 2]>> {
        let mut fwd = e.clone();
        for c in fwd.constituents.iter_mut() {
            c.active = c.active && c.custodian() == self.id && !c.at_destination();
        }
        let active: SmallVec<[PacketUid; 2]> = fwd.active().map(|c| c.uid).collect();
        if active.is_empty() {
            return None;
        }
        self.input_queue.push_back(Packet::Encoded(fwd));
        Some(active)
    }

    /// Pops the next packet and prepares its broadcast. Natives get this node
    /// and its neighbors added to their holder set; encoded packets go out
    /// unchanged apart from routing state.
    pub fn on_send(&mut self, env: &NodeEnv<'_>, channel: &Channel) -> Option<Transmission> {
        if self.output_queue.is_empty() {
            let head = self.input_queue.pop_front()?;
            self.output_queue.push_back(head);
        }
        let packet = self.output_queue.pop_front()?;
        let neighbors = env.topology.neighbors(self.id);
        let (packet, addressed) = match packet {
            Packet::Native(p) => {
                let mut p = annotate_holders(p, self.id, neighbors);
                p.hop_index += 1;
                let next = p.custodian();
                (Packet::Native(p), smallvec![next])
            }
            Packet::Encoded(mut e) => {
                let mut addressed = SmallVec::new();
                for c in e.constituents.iter_mut().filter(|c| c.active) {
                    c.hop_index += 1;
                    let next = c.custodian();
                    if !addressed.contains(&next) {
                        addressed.push(next);
                    }
                }
                addressed.sort_unstable();
                self.stats.encoded_transmissions += 1;
                (Packet::Encoded(e), addressed)
            }
        };
        self.stats.transmissions += 1;
        let header_bytes = if env.scheme == Scheme::Excode {
            packet.holder_bytes()
        } else {
            0
        };
        Some(Transmission {
            sender: self.id,
            duration: channel.airtime(packet.payload_len(), header_bytes),
            packet,
            addressed,
            header_bytes,
        })
    }

    /// Snapshot of the natives this node stores.
    pub fn publish_reception_report(&self) -> ReceptionReport {
        ReceptionReport {
            from: self.id,
            uids: self.buffer.keys().collect(),
        }
    }

    /// Packet uids this node is currently responsible for forwarding.
    pub fn custody(&self) -> impl Iterator<Item = PacketUid> + '_ {
        self.output_queue
            .iter()
            .chain(self.input_queue.iter())
            .flat_map(packet_custody)
    }
}

/// Uids whose forwarding responsibility travels with `packet`.
pub fn packet_custody(packet: &Packet) -> Vec<PacketUid> {
    match packet {
        Packet::Native(p) => alloc::vec![p.uid],
        Packet::Encoded(e) => e.active().map(|c| c.uid).collect(),
    }
}
