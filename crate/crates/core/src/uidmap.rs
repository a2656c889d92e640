//! Containers keyed by packet uid.
//!
//! Sequence numbers are dense within a flow, so each flow gets a flat array
//! indexed by sequence number. Lookups cost one small ordered-map probe on
//! the flow id plus an index.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::packet::{FlowId, PacketUid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UidMap<T> {
    flows: BTreeMap<FlowId, Vec<Option<T>>>,
    len: usize,
}

impl<T> Default for UidMap<T> {
    fn default() -> Self {
        UidMap {
            flows: BTreeMap::new(),
            len: 0,
        }
    }
}

impl<T> UidMap<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, uid: &PacketUid) -> Option<&T> {
        self.flows.get(&uid.flow)?.get(uid.seq as usize)?.as_ref()
    }

    pub fn get_mut(&mut self, uid: &PacketUid) -> Option<&mut T> {
        self.flows.get_mut(&uid.flow)?.get_mut(uid.seq as usize)?.as_mut()
    }

    pub fn contains_key(&self, uid: &PacketUid) -> bool {
        self.get(uid).is_some()
    }

    /// Returns the previous value, if any.
    pub fn insert(&mut self, uid: PacketUid, value: T) -> Option<T> {
        let slots = self.flows.entry(uid.flow).or_default();
        let i = uid.seq as usize;
        if i >= slots.len() {
            slots.resize_with(i + 1, || None);
        }
        let old = slots[i].replace(value);
        if old.is_none() {
            self.len += 1;
        }
        old
    }

    /// The value for `uid`, inserting `f()` first if absent.
    pub fn get_or_insert_with(&mut self, uid: PacketUid, f: impl FnOnce() -> T) -> &mut T {
        let slots = self.flows.entry(uid.flow).or_default();
        let i = uid.seq as usize;
        if i >= slots.len() {
            slots.resize_with(i + 1, || None);
        }
        if slots[i].is_none() {
            self.len += 1;
        }
        slots[i].get_or_insert_with(f)
    }

    pub fn remove(&mut self, uid: &PacketUid) -> Option<T> {
        let old = self.flows.get_mut(&uid.flow)?.get_mut(uid.seq as usize)?.take();
        if old.is_some() {
            self.len -= 1;
        }
        old
    }

    /// Entries in ascending uid order.
    pub fn iter(&self) -> impl Iterator<Item = (PacketUid, &T)> + '_ {
        self.flows.iter().flat_map(|(&flow, slots)| {
            slots
                .iter()
                .enumerate()
                .filter_map(move |(seq, v)| v.as_ref().map(|v| (PacketUid { flow, seq: seq as u64 }, v)))
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = PacketUid> + '_ {
        self.iter().map(|(k, _)| k)
    }

    pub fn values(&self) -> impl Iterator<Item = &T> + '_ {
        self.iter().map(|(_, v)| v)
    }
}

/// A set of packet uids, one bit per sequence number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UidSet {
    flows: BTreeMap<FlowId, Vec<u64>>,
    len: usize,
}

impl UidSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, uid: &PacketUid) -> bool {
        let (word, bit) = ((uid.seq / 64) as usize, uid.seq % 64);
        self.flows
            .get(&uid.flow)
            .and_then(|w| w.get(word))
            .is_some_and(|w| w & (1 << bit) != 0)
    }

    /// Returns `false` if `uid` was already present.
    pub fn insert(&mut self, uid: PacketUid) -> bool {
        let (word, bit) = ((uid.seq / 64) as usize, uid.seq % 64);
        let words = self.flows.entry(uid.flow).or_default();
        if word >= words.len() {
            words.resize(word + 1, 0);
        }
        let fresh = words[word] & (1 << bit) == 0;
        words[word] |= 1 << bit;
        if fresh {
            self.len += 1;
        }
        fresh
    }

    /// Members in ascending uid order.
    pub fn iter(&self) -> impl Iterator<Item = PacketUid> + '_ {
        self.flows.iter().flat_map(|(&flow, words)| {
            words.iter().enumerate().flat_map(move |(i, &w)| {
                (0..64u64).filter(move |b| w & (1 << b) != 0).map(move |b| PacketUid {
                    flow,
                    seq: i as u64 * 64 + b,
                })
            })
        })
    }
}

impl FromIterator<PacketUid> for UidSet {
    fn from_iter<I: IntoIterator<Item = PacketUid>>(iter: I) -> Self {
        let mut set = UidSet::new();
        for uid in iter {
            set.insert(uid);
        }
        set
    }
}
