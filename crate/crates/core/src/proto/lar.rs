//! Location-aided routing helpers: request zones (scheme 1), the distance
//! rule (scheme 2), and the per-node destination location cache.

use std::collections::BTreeMap;

use crate::geometry::{Position, Rect};
use crate::netsim::NodeId;

/// Smallest axis-aligned rectangle holding the source and the expected zone
/// `disk(dst_expected, dst_radius)`.
pub fn lar1_request_zone(src_pos: Position, dst_expected: Position, dst_radius: f64) -> Rect {
    Rect::around_disk(dst_expected, dst_radius.max(0.0)).including(src_pos)
}

/// Expected-zone radius after `elapsed` seconds at speed `vmax`.
pub fn expected_radius(vmax: f64, elapsed: f64) -> f64 {
    (vmax * elapsed).max(0.0)
}

/// Receiver at distance `d_j` from the destination's last known location
/// forwards a request sent from distance `d_i` iff `d_j <= d_i + delta`.
pub fn lar2_forward(d_j: f64, d_i: f64, delta: f64) -> bool {
    d_j <= d_i + delta
}

/// Which LAR scheme a request is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LarScheme {
    One,
    Two,
}

/// Last heard location of other nodes, keyed by node.
#[derive(Debug, Clone, Default)]
pub struct LocationCache {
    entries: BTreeMap<NodeId, (Position, f64)>,
}

impl LocationCache {
    /// Keeps the newer of the stored and offered observation.
    pub fn observe(&mut self, node: NodeId, pos: Position, at: f64) {
        match self.entries.get(&node) {
            Some(&(_, t)) if t > at => {}
            _ => {
                self.entries.insert(node, (pos, at));
            }
        }
    }

    pub fn get(&self, node: NodeId) -> Option<(Position, f64)> {
        self.entries.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The last known location of `dst` and when it was observed, if `src`'s
/// cache has one. `None` means the discovery falls back to flooding.
pub fn locate_destination_baseline(cache: &LocationCache, dst: NodeId) -> Option<(Position, f64)> {
    cache.get(dst)
}
