//! Routing protocols. Each implements [`netsim::Protocol`](crate::netsim::Protocol)
//! and owns all of its per-node state.

pub mod aodv;
pub mod dsr;
pub mod eelar;
pub mod lar;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::hash::Hash;

use crate::netsim::{NodeId, Packet};

pub use aodv::Aodv;
pub use dsr::{SourceRouting, Variant};
pub use eelar::Eelar;

/// A duplicate-suppression set that forgets its oldest entries once full.
#[derive(Debug, Clone)]
pub struct SeenSet<K> {
    set: HashSet<K>,
    order: VecDeque<K>,
    capacity: usize,
}

impl<K: Hash + Eq + Clone> SeenSet<K> {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            set: HashSet::new(),
            order: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn contains(&self, k: &K) -> bool {
        self.set.contains(k)
    }

    /// Returns false if `k` was already present.
    pub fn insert(&mut self, k: K) -> bool {
        if !self.set.insert(k.clone()) {
            return false;
        }
        self.order.push_back(k);
        if self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.set.remove(&old);
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

impl<K: Hash + Eq + Clone> Default for SeenSet<K> {
    fn default() -> Self {
        Self::with_capacity(4096)
    }
}

/// What to do when a discovery timer fires.
#[derive(Debug)]
pub(crate) enum Timeout<M> {
    /// The discovery already finished or was superseded.
    Stale,
    Retry {
        attempt: u32,
        serial: u64,
    },
    GiveUp(Vec<Packet<M>>),
}

#[derive(Debug)]
struct Pending<M> {
    attempt: u32,
    serial: u64,
    buffer: Vec<Packet<M>>,
}

/// DATA waiting on a route, keyed by (source, destination), with the
/// bookkeeping for bounded retries.
#[derive(Debug)]
pub(crate) struct SendBuffer<M> {
    pending: BTreeMap<(NodeId, NodeId), Pending<M>>,
    next_serial: u64,
}

impl<M> Default for SendBuffer<M> {
    fn default() -> Self {
        Self {
            pending: BTreeMap::new(),
            next_serial: 0,
        }
    }
}

impl<M> SendBuffer<M> {
    /// Buffers `packet`. Returns the serial of a discovery the caller must
    /// start, or `None` if one is already in flight.
    pub fn enqueue(&mut self, src: NodeId, dst: NodeId, packet: Packet<M>) -> Option<u64> {
        if let Some(p) = self.pending.get_mut(&(src, dst)) {
            p.buffer.push(packet);
            return None;
        }
        self.next_serial += 1;
        let serial = self.next_serial;
        self.pending.insert(
            (src, dst),
            Pending {
                attempt: 0,
                serial,
                buffer: vec![packet],
            },
        );
        Some(serial)
    }

    pub fn is_pending(&self, src: NodeId, dst: NodeId) -> bool {
        self.pending.contains_key(&(src, dst))
    }

    /// A route arrived; hand back everything waiting on it.
    pub fn take(&mut self, src: NodeId, dst: NodeId) -> Vec<Packet<M>> {
        self.pending.remove(&(src, dst)).map(|p| p.buffer).unwrap_or_default()
    }

    pub fn on_timeout(&mut self, src: NodeId, dst: NodeId, serial: u64, retries: u32) -> Timeout<M> {
        let Some(p) = self.pending.get_mut(&(src, dst)) else {
            return Timeout::Stale;
        };
        if p.serial != serial {
            return Timeout::Stale;
        }
        if p.attempt < retries {
            p.attempt += 1;
            self.next_serial += 1;
            p.serial = self.next_serial;
            return Timeout::Retry {
                attempt: p.attempt,
                serial: p.serial,
            };
        }
        Timeout::GiveUp(self.pending.remove(&(src, dst)).map(|p| p.buffer).unwrap_or_default())
    }
}
