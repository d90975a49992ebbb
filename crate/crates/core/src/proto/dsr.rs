//! Source routing, shared by DSR-lite and the two LAR schemes.
//!
//! DSR floods route requests network-wide, lets the destination answer every
//! copy, and lets intermediate nodes answer from routes they learned while
//! relaying replies. LAR uses the same request/reply/data machinery but
//! restricts request flooding geographically, answers only the first copy at
//! the destination, and never replies from intermediate caches.

use std::collections::{BTreeMap, HashSet};

use crate::config::ScenarioConfig;
use crate::geometry::{distance, Rect};
use crate::netsim::{Addr, Entity, Network, NodeId, Packet, PacketKind, Protocol};

use super::lar::{expected_radius, lar1_request_zone, lar2_forward, locate_destination_baseline, LocationCache};
use super::{SeenSet, SendBuffer, Timeout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Dsr,
    Lar1,
    Lar2,
}

impl Variant {
    fn is_lar(self) -> bool {
        self != Variant::Dsr
    }

    fn rreq_kind(self) -> PacketKind {
        if self.is_lar() {
            PacketKind::LarRreq
        } else {
            PacketKind::Rreq
        }
    }

    fn rrep_kind(self) -> PacketKind {
        if self.is_lar() {
            PacketKind::LarRrep
        } else {
            PacketKind::Rrep
        }
    }
}

/// A loop-free hop list, source first, destination last.
pub type SourceRoute = Vec<NodeId>;

pub fn is_loop_free(route: &[NodeId]) -> bool {
    let mut seen = HashSet::with_capacity(route.len());
    route.iter().all(|n| seen.insert(*n))
}

#[derive(Debug, Clone, Default)]
pub enum SrMsg {
    /// `route` is filled in by the source; `index` is the holder's position.
    #[default]
    Data,
    Routed {
        route: SourceRoute,
        index: usize,
    },
    Rreq {
        id: u32,
        target: NodeId,
        record: SourceRoute,
        /// LAR2: the sender's distance to the target's last known location.
        sender_distance: Option<f64>,
    },
    /// Travels from `route[index + 1]` back towards `route[0]`.
    Rrep {
        route: SourceRoute,
        index: usize,
    },
    /// `path` runs from the node that saw the break back to the source.
    Rerr {
        from: NodeId,
        to: NodeId,
        path: SourceRoute,
        index: usize,
    },
}

#[derive(Debug, Clone)]
pub enum SrTimer {
    Discovery { dst: NodeId, serial: u64 },
}

#[derive(Debug, Default)]
pub struct SrNode {
    rreq_id: u32,
    seen: SeenSet<(NodeId, u32)>,
    answered: SeenSet<(NodeId, u32)>,
    cache: BTreeMap<NodeId, SourceRoute>,
    pub locations: LocationCache,
}

impl SrNode {
    pub fn cached_route(&self, dst: NodeId) -> Option<&SourceRoute> {
        self.cache.get(&dst)
    }

    pub fn cached_routes(&self) -> impl Iterator<Item = &SourceRoute> {
        self.cache.values()
    }

    /// Keeps the shorter of the stored and offered route.
    fn learn(&mut self, route: SourceRoute) {
        let Some(&dst) = route.last() else { return };
        if route.len() < 2 || !is_loop_free(&route) {
            return;
        }
        match self.cache.get(&dst) {
            Some(r) if r.len() <= route.len() => {}
            _ => {
                self.cache.insert(dst, route);
            }
        }
    }

    fn purge_link(&mut self, a: NodeId, b: NodeId) {
        self.cache.retain(|_, r| {
            !r.windows(2)
                .any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrParams {
    pub variant: Variant,
    pub discovery_timeout: f64,
    pub retries: u32,
    pub lar_delta: f64,
    pub lar_vmax: f64,
    pub flood_on_retry: bool,
    pub area: Rect,
}

impl SrParams {
    pub fn from_config(c: &ScenarioConfig, variant: Variant) -> Self {
        Self {
            variant,
            discovery_timeout: c.aodv_discovery_timeout_s,
            retries: c.aodv_retries,
            lar_delta: c.lar_delta_m,
            lar_vmax: c.lar_vmax(),
            flood_on_retry: c.lar_flood_on_retry,
            area: Rect {
                x_min: 0.0,
                x_max: c.area_w_m,
                y_min: 0.0,
                y_max: c.area_h_m,
            },
        }
    }
}

pub struct SourceRouting {
    params: SrParams,
    nodes: Vec<SrNode>,
    buffer: SendBuffer<SrMsg>,
    discoveries: u64,
    flooded_discoveries: u64,
}

impl SourceRouting {
    pub fn new(params: SrParams, n_nodes: usize) -> Self {
        Self {
            params,
            nodes: (0..n_nodes).map(|_| SrNode::default()).collect(),
            buffer: SendBuffer::default(),
            discoveries: 0,
            flooded_discoveries: 0,
        }
    }

    pub fn from_config(c: &ScenarioConfig, variant: Variant) -> Self {
        Self::new(SrParams::from_config(c, variant), c.n_nodes as usize)
    }

    pub fn variant(&self) -> Variant {
        self.params.variant
    }

    pub fn node(&self, n: NodeId) -> &SrNode {
        &self.nodes[n.index()]
    }

    /// Route discoveries started, retries included.
    pub fn discoveries(&self) -> u64 {
        self.discoveries
    }

    /// Discoveries sent without a location restriction.
    pub fn flooded_discoveries(&self) -> u64 {
        self.flooded_discoveries
    }

    /// Seeds every node's location cache with every other node's position
    /// at the current time, as if a location service had been consulted.
    pub fn prime_locations(&mut self, net: &mut Network<Self>) {
        let now = net.now();
        let positions: Vec<_> = net
            .nodes()
            .collect::<Vec<_>>()
            .into_iter()
            .map(|n| (n, net.position_of(n)))
            .collect();
        for node in &mut self.nodes {
            for &(n, p) in &positions {
                node.locations.observe(n, p, now);
            }
        }
    }

    fn observe_origin(&mut self, x: NodeId, packet: &Packet<SrMsg>) {
        if !self.params.variant.is_lar() {
            return;
        }
        if let (Entity::Node(o), Some(p)) = (packet.origin, packet.origin_position) {
            if o != x {
                self.nodes[x.index()].locations.observe(o, p, packet.created_at);
            }
        }
    }

    fn stamp(&self, net: &mut Network<Self>, x: NodeId, packet: &mut Packet<SrMsg>) {
        if self.params.variant.is_lar() {
            packet.origin_position = Some(net.position_of(x));
        }
    }

    /// Start (or retry) a route discovery from `src` to `dst`.
    pub fn dsr_route_discovery(
        &mut self,
        net: &mut Network<Self>,
        src: NodeId,
        dst: NodeId,
        attempt: u32,
        serial: u64,
    ) {
        self.discoveries += 1;
        let variant = self.params.variant;
        let node = &mut self.nodes[src.index()];
        node.rreq_id += 1;
        let id = node.rreq_id;
        node.seen.insert((src, id));
        let known = locate_destination_baseline(&node.locations, dst);
        let restrict = variant.is_lar() && known.is_some() && !(attempt > 0 && self.params.flood_on_retry);
        let mut packet = net.new_packet(
            variant.rreq_kind(),
            Entity::Node(src),
            Addr::Node(dst),
            SrMsg::Rreq {
                id,
                target: dst,
                record: vec![src],
                sender_distance: None,
            },
        );
        self.stamp(net, src, &mut packet);
        let here = net.position_of(src);
        match (variant, known) {
            (Variant::Lar1, Some((loc, t))) if restrict => {
                let r = expected_radius(self.params.lar_vmax, net.now() - t);
                packet.request_zone = Some(lar1_request_zone(here, loc, r));
            }
            (Variant::Lar2, Some((loc, _))) if restrict => {
                packet.dest_position = Some(loc);
                if let SrMsg::Rreq { sender_distance, .. } = &mut packet.msg {
                    *sender_distance = Some(distance(here, loc));
                }
            }
            (Variant::Lar1, _) => {
                self.flooded_discoveries += 1;
                packet.request_zone = Some(self.params.area);
            }
            _ => self.flooded_discoveries += 1,
        }
        net.broadcast(Entity::Node(src), packet);
        net.set_timer(
            Entity::Node(src),
            self.params.discovery_timeout,
            SrTimer::Discovery { dst, serial },
        );
    }

    fn send_from_source(&mut self, net: &mut Network<Self>, src: NodeId, mut packet: Packet<SrMsg>) {
        let dst = packet.dest_node().expect("DATA is addressed to a node");
        if self.buffer.is_pending(src, dst) {
            self.buffer.enqueue(src, dst, packet);
            return;
        }
        match self.nodes[src.index()].cache.get(&dst) {
            Some(route) => {
                packet.msg = SrMsg::Routed {
                    route: route.clone(),
                    index: 0,
                };
                self.stamp(net, src, &mut packet);
                self.forward_data(net, src, packet);
            }
            None => {
                let serial = self.buffer.enqueue(src, dst, packet).expect("nothing pending");
                self.dsr_route_discovery(net, src, dst, 0, serial);
            }
        }
    }

    fn forward_data(&mut self, net: &mut Network<Self>, x: NodeId, mut packet: Packet<SrMsg>) {
        let SrMsg::Routed { route, index } = &mut packet.msg else {
            return;
        };
        if *index + 1 >= route.len() {
            net.drop_packet(Entity::Node(x), &packet);
            return;
        }
        let next = route[*index + 1];
        *index += 1;
        let route = route.clone();
        let at = *index - 1;
        if at > 0 {
            packet.hop_count += 1;
        }
        if let Err((_, packet)) = net.unicast(Entity::Node(x), Entity::Node(next), packet) {
            net.drop_packet(Entity::Node(x), &packet);
            self.route_error(net, x, next, &route[..=at]);
        }
    }

    /// `x` failed to reach `next`; purge the link and tell the source.
    fn route_error(&mut self, net: &mut Network<Self>, x: NodeId, next: NodeId, prefix: &[NodeId]) {
        self.nodes[x.index()].purge_link(x, next);
        if prefix.len() < 2 {
            return;
        }
        let path: SourceRoute = prefix.iter().rev().copied().collect();
        let src = path[path.len() - 1];
        let mut p = net.new_packet(
            PacketKind::Rerr,
            Entity::Node(x),
            Addr::Node(src),
            SrMsg::Rerr {
                from: x,
                to: next,
                path: path.clone(),
                index: 1,
            },
        );
        self.stamp(net, x, &mut p);
        if let Err((_, p)) = net.unicast(Entity::Node(x), Entity::Node(path[1]), p) {
            net.drop_packet(Entity::Node(x), &p);
        }
    }

    fn on_rreq(&mut self, net: &mut Network<Self>, x: NodeId, packet: Packet<SrMsg>) {
        let SrMsg::Rreq {
            id,
            target,
            ref record,
            sender_distance,
        } = packet.msg
        else {
            return;
        };
        let origin = packet.origin.node().expect("requests originate at nodes");
        if origin == x || record.contains(&x) {
            return;
        }
        let variant = self.params.variant;
        if x == target {
            if variant.is_lar() && !self.nodes[x.index()].answered.insert((origin, id)) {
                return;
            }
            let mut route = record.clone();
            route.push(x);
            self.send_rrep(net, x, route);
            return;
        }
        if self.nodes[x.index()].seen.contains(&(origin, id)) {
            return;
        }
        let here = net.position_of(x);
        let mut my_distance = None;
        match variant {
            Variant::Lar1 => {
                if packet.request_zone.is_some_and(|z| !z.contains(here)) {
                    net.drop_packet(Entity::Node(x), &packet);
                    return;
                }
            }
            Variant::Lar2 => {
                if let (Some(loc), Some(d_i)) = (packet.dest_position, sender_distance) {
                    let d_j = distance(here, loc);
                    if !lar2_forward(d_j, d_i, self.params.lar_delta) {
                        net.drop_packet(Entity::Node(x), &packet);
                        return;
                    }
                    my_distance = Some(d_j);
                }
            }
            Variant::Dsr => {}
        }
        self.nodes[x.index()].seen.insert((origin, id));
        if variant == Variant::Dsr {
            if let Some(suffix) = self.nodes[x.index()].cache.get(&target) {
                let mut route = record.clone();
                route.extend_from_slice(suffix);
                if is_loop_free(&route) {
                    self.send_rrep(net, x, route);
                    return;
                }
            }
        }
        let mut p = packet.clone();
        if let SrMsg::Rreq {
            record,
            sender_distance,
            ..
        } = &mut p.msg
        {
            record.push(x);
            if my_distance.is_some() {
                *sender_distance = my_distance;
            }
        }
        p.hop_count += 1;
        net.broadcast(Entity::Node(x), p);
    }

    /// Send a reply for `route` from `x`, which sits somewhere on it, back
    /// towards `route[0]`.
    fn send_rrep(&mut self, net: &mut Network<Self>, x: NodeId, route: SourceRoute) {
        let at = route.iter().position(|&n| n == x).expect("replier is on the route");
        if at == 0 {
            return;
        }
        let back = route[at - 1];
        let mut p = net.new_packet(
            self.params.variant.rrep_kind(),
            Entity::Node(x),
            Addr::Node(route[0]),
            SrMsg::Rrep { route, index: at - 1 },
        );
        self.stamp(net, x, &mut p);
        if let Err((_, p)) = net.unicast(Entity::Node(x), Entity::Node(back), p) {
            net.drop_packet(Entity::Node(x), &p);
            self.nodes[x.index()].purge_link(x, back);
        }
    }

    fn on_rrep(&mut self, net: &mut Network<Self>, x: NodeId, mut packet: Packet<SrMsg>) {
        let SrMsg::Rrep { route, index } = &mut packet.msg else {
            return;
        };
        if route.get(*index) != Some(&x) {
            return;
        }
        let i = *index;
        let dst = *route.last().expect("non-empty");
        if self.params.variant == Variant::Dsr || i == 0 {
            self.nodes[x.index()].learn(route[i..].to_vec());
        }
        if i == 0 {
            if self.params.variant.is_lar() {
                self.nodes[x.index()].cache.insert(dst, route.clone());
            }
            for p in self.buffer.take(x, dst) {
                self.send_from_source(net, x, p);
            }
            return;
        }
        let back = route[i - 1];
        *index = i - 1;
        packet.hop_count += 1;
        if let Err((_, p)) = net.unicast(Entity::Node(x), Entity::Node(back), packet) {
            net.drop_packet(Entity::Node(x), &p);
            self.nodes[x.index()].purge_link(x, back);
        }
    }

    fn on_rerr(&mut self, net: &mut Network<Self>, y: NodeId, mut packet: Packet<SrMsg>) {
        let SrMsg::Rerr { from, to, path, index } = &mut packet.msg else {
            return;
        };
        self.nodes[y.index()].purge_link(*from, *to);
        if *index + 1 >= path.len() {
            return;
        }
        let next = path[*index + 1];
        *index += 1;
        packet.hop_count += 1;
        if let Err((_, p)) = net.unicast(Entity::Node(y), Entity::Node(next), packet) {
            net.drop_packet(Entity::Node(y), &p);
        }
    }
}

impl Protocol for SourceRouting {
    type Msg = SrMsg;
    type Timer = SrTimer;

    fn start(&mut self, _net: &mut Network<Self>) {}

    fn originate(&mut self, net: &mut Network<Self>, packet: Packet<SrMsg>) {
        let src = packet.origin.node().expect("DATA originates at a node");
        self.send_from_source(net, src, packet);
    }

    fn receive(&mut self, net: &mut Network<Self>, at: Entity, _from: Entity, packet: Packet<SrMsg>) {
        let Entity::Node(x) = at else { return };
        self.observe_origin(x, &packet);
        match packet.msg {
            SrMsg::Data => {}
            SrMsg::Routed { .. } if packet.dest_node() == Some(x) => {
                net.deliver(x, &packet);
            }
            SrMsg::Routed { .. } => self.forward_data(net, x, packet),
            SrMsg::Rreq { .. } => self.on_rreq(net, x, packet),
            SrMsg::Rrep { .. } => self.on_rrep(net, x, packet),
            SrMsg::Rerr { .. } => self.on_rerr(net, x, packet),
        }
    }

    fn timer(&mut self, net: &mut Network<Self>, at: Entity, timer: SrTimer) {
        let Entity::Node(x) = at else { return };
        let SrTimer::Discovery { dst, serial } = timer;
        match self.buffer.on_timeout(x, dst, serial, self.params.retries) {
            Timeout::Stale => {}
            Timeout::Retry { attempt, serial } => self.dsr_route_discovery(net, x, dst, attempt, serial),
            Timeout::GiveUp(dropped) => {
                for p in &dropped {
                    net.drop_packet(at, p);
                }
            }
        }
    }
}
