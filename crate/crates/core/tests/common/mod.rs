//! Helpers shared by the integration test targets.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use eelar_core::config::Protocol as ProtocolId;
use eelar_core::mobility::Mobility;
use eelar_core::netsim::trace::{Shared, TraceEvent, TraceRecord};
use eelar_core::netsim::{Entity, Network, PacketSizes, Protocol, RadioModel, Simulation};
use eelar_core::scenario::{RunOutput, ScenarioBuilder};
use eelar_core::traffic::CbrFlow;
use eelar_core::{NodeId, Position, ScenarioConfig};

pub fn p(x: f64, y: f64) -> Position {
    Position::new(x, y)
}

/// Lossless static-friendly setup on a `side`×`side` field.
pub fn config(protocol: ProtocolId, side: f64, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        protocol,
        area_w_m: side,
        area_h_m: side,
        duration_s: duration,
        loss_probability: 0.0,
        ..ScenarioConfig::desk()
    }
}

/// `count` packets from `src` to `dst`, one per second starting at `start`.
pub fn flow(src: u32, dst: u32, start: f64, count: u32) -> CbrFlow {
    CbrFlow {
        source: NodeId(src),
        destination: NodeId(dst),
        rate: 1.0,
        packet_size: 512,
        start,
        end: start + f64::from(count) - 0.5,
    }
}

pub fn traced(builder: ScenarioBuilder) -> (RunOutput, Vec<TraceRecord>) {
    let sink = Shared::new(Vec::new());
    let out = builder.trace(Box::new(sink.clone())).run().expect("valid scenario");
    let records = sink.into_inner().expect("run released the sink");
    (out, records)
}

pub fn count(records: &[TraceRecord], f: impl Fn(&TraceRecord) -> bool) -> usize {
    records.iter().filter(|r| f(r)).count()
}

pub fn is_data(r: &TraceRecord, ev: TraceEvent) -> bool {
    r.event == ev && r.kind == eelar_core::PacketKind::Data
}

/// A hand-built simulation, for tests that inspect protocol state afterwards.
pub fn simulation<P: Protocol>(
    c: &ScenarioConfig,
    mobility: Vec<Mobility>,
    flows: Vec<CbrFlow>,
    proto: P,
) -> Simulation<P> {
    let radio = RadioModel {
        tx_range: c.tx_range_m,
        per_hop_latency: c.per_hop_latency_s,
        loss_probability: c.loss_probability,
    };
    let sizes = PacketSizes {
        data: c.data_bytes,
        control: c.control_bytes,
    };
    let net = Network::new(mobility, c.bs_position(), radio, sizes, flows.len(), c.seed);
    Simulation::new(net, proto, flows)
}

pub fn statics(pos: &[Position]) -> Vec<Mobility> {
    pos.iter().copied().map(Mobility::Static).collect()
}

pub fn entity(n: u32) -> Entity {
    Entity::Node(NodeId(n))
}

/// Is `dst` reachable from `src` over unit-disk links, relaying only
/// through nodes accepted by `relay`?
pub fn bfs_reachable(pos: &[Position], range: f64, src: usize, dst: usize, relay: impl Fn(usize) -> bool) -> bool {
    let linked = |a: usize, b: usize| {
        let (dx, dy) = (pos[a].x - pos[b].x, pos[a].y - pos[b].y);
        (dx * dx + dy * dy).sqrt() <= range
    };
    let mut seen = vec![false; pos.len()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for v in 0..pos.len() {
            if seen[v] || !linked(u, v) {
                continue;
            }
            if v == dst {
                return true;
            }
            if relay(v) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Sector index 1..=k of `q` around `center`, straight from the angle.
pub fn sector(center: Position, q: Position, k: u32) -> u32 {
    let mut theta = (q.y - center.y).atan2(q.x - center.x);
    if theta < 0.0 {
        theta += std::f64::consts::TAU;
    }
    let width = std::f64::consts::TAU / f64::from(k);
    ((theta / width).floor() as u32).min(k - 1) + 1
}

pub fn dist(a: Position, b: Position) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}
