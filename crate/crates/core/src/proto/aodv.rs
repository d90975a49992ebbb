//! AODV-lite: flooded route requests, replies along reverse routes,
//! destination sequence numbers for freshness, and route errors sent to
//! active predecessors when a next hop disappears.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::ScenarioConfig;
use crate::netsim::{Addr, Entity, Network, NodeId, Packet, PacketKind, Protocol};

use super::{SeenSet, SendBuffer, Timeout};

#[derive(Debug, Clone, PartialEq)]
pub struct RouteTableEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub seq_no: u32,
    pub expiry: f64,
    pub valid: bool,
    /// Neighbors that route through this node towards `destination`.
    pub precursors: BTreeSet<NodeId>,
}

impl RouteTableEntry {
    pub fn usable(&self, now: f64) -> bool {
        self.valid && self.expiry >= now
    }

    /// Whether an offered (seq, hops) should replace this entry.
    pub fn superseded_by(&self, seq_no: u32, hop_count: u32, now: f64) -> bool {
        !self.usable(now) || seq_no > self.seq_no || (seq_no == self.seq_no && hop_count < self.hop_count)
    }
}

#[derive(Debug, Clone, Default)]
pub enum AodvMsg {
    #[default]
    Data,
    Rreq {
        id: u32,
        origin_seq: u32,
        dst: NodeId,
        dst_seq: Option<u32>,
    },
    Rrep {
        dst: NodeId,
        dst_seq: u32,
        requester: NodeId,
        hops: u32,
    },
    Rerr {
        unreachable: Vec<(NodeId, u32)>,
    },
    Hello,
}

#[derive(Debug, Clone)]
pub enum AodvTimer {
    Discovery { dst: NodeId, serial: u64 },
    Hello,
}

#[derive(Debug, Default)]
pub struct AodvNode {
    seq: u32,
    rreq_id: u32,
    routes: BTreeMap<NodeId, RouteTableEntry>,
    seen: SeenSet<(NodeId, u32)>,
    last_heard: BTreeMap<NodeId, f64>,
}

impl AodvNode {
    pub fn routes(&self) -> impl Iterator<Item = &RouteTableEntry> {
        self.routes.values()
    }

    pub fn route(&self, dst: NodeId) -> Option<&RouteTableEntry> {
        self.routes.get(&dst)
    }

    fn usable_route(&self, dst: NodeId, now: f64) -> Option<&RouteTableEntry> {
        self.routes.get(&dst).filter(|r| r.usable(now))
    }

    /// Installs the route if it is fresher or shorter. Returns whether it did.
    fn offer(&mut self, dst: NodeId, next_hop: NodeId, hop_count: u32, seq_no: u32, expiry: f64, now: f64) -> bool {
        match self.routes.get_mut(&dst) {
            Some(r) if !r.superseded_by(seq_no, hop_count, now) => {
                if r.next_hop == next_hop && r.seq_no == seq_no {
                    r.expiry = r.expiry.max(expiry);
                }
                false
            }
            Some(r) => {
                r.next_hop = next_hop;
                r.hop_count = hop_count;
                r.seq_no = seq_no;
                r.expiry = expiry;
                r.valid = true;
                true
            }
            None => {
                self.routes.insert(
                    dst,
                    RouteTableEntry {
                        destination: dst,
                        next_hop,
                        hop_count,
                        seq_no,
                        expiry,
                        valid: true,
                        precursors: BTreeSet::new(),
                    },
                );
                true
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AodvParams {
    pub discovery_timeout: f64,
    pub retries: u32,
    pub active_route_timeout: f64,
    pub hello: Option<f64>,
}

impl AodvParams {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            discovery_timeout: c.aodv_discovery_timeout_s,
            retries: c.aodv_retries,
            active_route_timeout: c.aodv_active_route_timeout_s,
            hello: c.hello_enabled.then_some(c.hello_interval_s),
        }
    }
}

pub struct Aodv {
    params: AodvParams,
    nodes: Vec<AodvNode>,
    buffer: SendBuffer<AodvMsg>,
    discoveries: u64,
}

impl Aodv {
    pub fn new(params: AodvParams, n_nodes: usize) -> Self {
        Self {
            params,
            nodes: (0..n_nodes).map(|_| AodvNode::default()).collect(),
            buffer: SendBuffer::default(),
            discoveries: 0,
        }
    }

    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self::new(AodvParams::from_config(c), c.n_nodes as usize)
    }

    pub fn node(&self, n: NodeId) -> &AodvNode {
        &self.nodes[n.index()]
    }

    /// Route discoveries started, retries included.
    pub fn discoveries(&self) -> u64 {
        self.discoveries
    }

    /// Follows next hops from `from` towards `dst`. `None` if a hop repeats
    /// or the chain breaks before reaching `dst`.
    pub fn trace_route(&self, from: NodeId, dst: NodeId, now: f64) -> Option<Vec<NodeId>> {
        let mut path = vec![from];
        let mut cur = from;
        while cur != dst {
            let next = self.nodes[cur.index()].usable_route(dst, now)?.next_hop;
            if path.contains(&next) {
                return None;
            }
            path.push(next);
            cur = next;
        }
        Some(path)
    }

    /// Flood a route request for `dst` from `src`.
    pub fn aodv_route_discovery(&mut self, net: &mut Network<Self>, src: NodeId, dst: NodeId, serial: u64) {
        self.discoveries += 1;
        let node = &mut self.nodes[src.index()];
        node.seq += 1;
        node.rreq_id += 1;
        let id = node.rreq_id;
        node.seen.insert((src, id));
        let msg = AodvMsg::Rreq {
            id,
            origin_seq: node.seq,
            dst,
            dst_seq: node.routes.get(&dst).map(|r| r.seq_no),
        };
        let p = net.new_packet(PacketKind::Rreq, Entity::Node(src), Addr::Broadcast, msg);
        net.broadcast(Entity::Node(src), p);
        net.set_timer(
            Entity::Node(src),
            self.params.discovery_timeout,
            AodvTimer::Discovery { dst, serial },
        );
    }

    /// `node` could not reach `next_hop`: invalidate every route through it
    /// and tell the predecessors, if any.
    pub fn aodv_link_break(&mut self, net: &mut Network<Self>, node: NodeId, next_hop: NodeId) {
        let mut unreachable = Vec::new();
        let mut precursors = BTreeSet::new();
        for r in self.nodes[node.index()].routes.values_mut() {
            if r.valid && r.next_hop == next_hop {
                r.valid = false;
                r.seq_no += 1;
                unreachable.push((r.destination, r.seq_no));
                precursors.append(&mut r.precursors);
            }
        }
        self.send_rerr(net, node, unreachable, &precursors);
    }

    fn send_rerr(
        &self,
        net: &mut Network<Self>,
        node: NodeId,
        unreachable: Vec<(NodeId, u32)>,
        precursors: &BTreeSet<NodeId>,
    ) {
        if unreachable.is_empty() || precursors.is_empty() {
            return;
        }
        let p = net.new_packet(
            PacketKind::Rerr,
            Entity::Node(node),
            Addr::Broadcast,
            AodvMsg::Rerr { unreachable },
        );
        net.broadcast(Entity::Node(node), p);
    }

    fn forward_data(&mut self, net: &mut Network<Self>, x: NodeId, prev: Option<NodeId>, mut packet: Packet<AodvMsg>) {
        let dst = packet.dest_node().expect("DATA is addressed to a node");
        if dst == x {
            net.deliver(x, &packet);
            return;
        }
        let now = net.now();
        let lifetime = now + self.params.active_route_timeout;
        let node = &mut self.nodes[x.index()];
        let Some(route) = node.routes.get_mut(&dst).filter(|r| r.usable(now)) else {
            match prev {
                None => {
                    if let Some(serial) = self.buffer.enqueue(x, dst, packet) {
                        self.aodv_route_discovery(net, x, dst, serial);
                    }
                }
                Some(p) => {
                    net.drop_packet(Entity::Node(x), &packet);
                    let seq = node.routes.get(&dst).map_or(0, |r| r.seq_no);
                    let unreachable = vec![(dst, seq)];
                    self.send_rerr(net, x, unreachable, &BTreeSet::from([p]));
                }
            }
            return;
        };
        let next = route.next_hop;
        route.expiry = route.expiry.max(lifetime);
        if let Some(p) = prev {
            route.precursors.insert(p);
            if let Some(back) = node.routes.get_mut(&p) {
                back.expiry = back.expiry.max(lifetime);
            }
        }
        if prev.is_some() {
            packet.hop_count += 1;
        }
        if let Err((_, packet)) = net.unicast(Entity::Node(x), Entity::Node(next), packet) {
            net.drop_packet(Entity::Node(x), &packet);
            self.aodv_link_break(net, x, next);
        }
    }

    fn on_rreq(&mut self, net: &mut Network<Self>, x: NodeId, from: NodeId, packet: Packet<AodvMsg>) {
        let AodvMsg::Rreq {
            id,
            origin_seq,
            dst,
            dst_seq,
        } = packet.msg
        else {
            return;
        };
        let origin = packet.origin.node().expect("RREQs originate at nodes");
        if origin == x {
            return;
        }
        let now = net.now();
        let lifetime = now + self.params.active_route_timeout;
        let node = &mut self.nodes[x.index()];
        if !node.seen.insert((origin, id)) {
            return;
        }
        node.offer(origin, from, packet.hop_count + 1, origin_seq, lifetime, now);
        let reply = if x == dst {
            node.seq = node.seq.max(dst_seq.unwrap_or(0));
            Some((node.seq, 0))
        } else {
            node.usable_route(dst, now)
                .filter(|r| dst_seq.is_none_or(|s| r.seq_no >= s))
                .map(|r| (r.seq_no, r.hop_count))
        };
        match reply {
            Some((seq, hops)) => {
                if x != dst {
                    let fwd_next = node.routes[&dst].next_hop;
                    node.routes.get_mut(&dst).expect("usable").precursors.insert(from);
                    node.routes
                        .get_mut(&origin)
                        .expect("just offered")
                        .precursors
                        .insert(fwd_next);
                }
                let msg = AodvMsg::Rrep {
                    dst,
                    dst_seq: seq,
                    requester: origin,
                    hops,
                };
                let p = net.new_packet(PacketKind::Rrep, Entity::Node(x), Addr::Node(origin), msg);
                if let Err((_, p)) = net.unicast(Entity::Node(x), Entity::Node(from), p) {
                    net.drop_packet(Entity::Node(x), &p);
                }
            }
            None => {
                let mut p = packet;
                p.hop_count += 1;
                net.broadcast(Entity::Node(x), p);
            }
        }
    }

    fn on_rrep(&mut self, net: &mut Network<Self>, x: NodeId, from: NodeId, mut packet: Packet<AodvMsg>) {
        let AodvMsg::Rrep {
            dst,
            dst_seq,
            requester,
            hops,
        } = packet.msg
        else {
            return;
        };
        let now = net.now();
        let lifetime = now + self.params.active_route_timeout;
        let node = &mut self.nodes[x.index()];
        node.offer(dst, from, hops + 1, dst_seq, lifetime, now);
        if x == requester {
            for p in self.buffer.take(x, dst) {
                self.forward_data(net, x, None, p);
            }
            return;
        }
        let Some(back) = node.usable_route(requester, now).map(|r| r.next_hop) else {
            net.drop_packet(Entity::Node(x), &packet);
            return;
        };
        if let Some(r) = node.routes.get_mut(&dst) {
            r.precursors.insert(back);
        }
        if let Some(r) = node.routes.get_mut(&requester) {
            r.precursors.insert(from);
        }
        packet.msg = AodvMsg::Rrep {
            dst,
            dst_seq,
            requester,
            hops: hops + 1,
        };
        packet.hop_count += 1;
        if let Err((_, p)) = net.unicast(Entity::Node(x), Entity::Node(back), packet) {
            net.drop_packet(Entity::Node(x), &p);
            self.aodv_link_break(net, x, back);
        }
    }

    fn on_rerr(&mut self, net: &mut Network<Self>, y: NodeId, from: NodeId, unreachable: Vec<(NodeId, u32)>) {
        let node = &mut self.nodes[y.index()];
        let mut affected = Vec::new();
        let mut precursors = BTreeSet::new();
        for (dst, seq) in unreachable {
            if let Some(r) = node.routes.get_mut(&dst) {
                if r.valid && r.next_hop == from {
                    r.valid = false;
                    r.seq_no = r.seq_no.max(seq);
                    affected.push((dst, r.seq_no));
                    precursors.append(&mut r.precursors);
                }
            }
        }
        self.send_rerr(net, y, affected, &precursors);
    }

    fn hello_tick(&mut self, net: &mut Network<Self>, x: NodeId, interval: f64) {
        let p = net.new_packet(PacketKind::Hello, Entity::Node(x), Addr::Broadcast, AodvMsg::Hello);
        net.broadcast(Entity::Node(x), p);
        let now = net.now();
        let node = &self.nodes[x.index()];
        let silent: BTreeSet<NodeId> = node
            .routes
            .values()
            .filter(|r| r.usable(now))
            .map(|r| r.next_hop)
            .filter(|nh| node.last_heard.get(nh).is_some_and(|&t| now - t > 2.0 * interval))
            .collect();
        for nh in silent {
            self.aodv_link_break(net, x, nh);
        }
        net.set_timer(Entity::Node(x), interval, AodvTimer::Hello);
    }
}

impl Protocol for Aodv {
    type Msg = AodvMsg;
    type Timer = AodvTimer;

    fn start(&mut self, net: &mut Network<Self>) {
        if let Some(interval) = self.params.hello {
            let n = net.n_nodes().max(1) as f64;
            for x in net.nodes().collect::<Vec<_>>() {
                net.set_timer(Entity::Node(x), interval * x.0 as f64 / n, AodvTimer::Hello);
            }
        }
    }

    fn originate(&mut self, net: &mut Network<Self>, packet: Packet<AodvMsg>) {
        let src = packet.origin.node().expect("DATA originates at a node");
        if self.buffer.is_pending(src, packet.dest_node().expect("addressed")) {
            let dst = packet.dest_node().expect("addressed");
            self.buffer.enqueue(src, dst, packet);
            return;
        }
        self.forward_data(net, src, None, packet);
    }

    fn receive(&mut self, net: &mut Network<Self>, at: Entity, from: Entity, packet: Packet<AodvMsg>) {
        let (Entity::Node(x), Entity::Node(from)) = (at, from) else {
            return;
        };
        if self.params.hello.is_some() {
            let now = net.now();
            self.nodes[x.index()].last_heard.insert(from, now);
        }
        match packet.msg {
            AodvMsg::Data => self.forward_data(net, x, Some(from), packet),
            AodvMsg::Rreq { .. } => self.on_rreq(net, x, from, packet),
            AodvMsg::Rrep { .. } => self.on_rrep(net, x, from, packet),
            AodvMsg::Rerr { unreachable } => self.on_rerr(net, x, from, unreachable),
            AodvMsg::Hello => {}
        }
    }

    fn timer(&mut self, net: &mut Network<Self>, at: Entity, timer: AodvTimer) {
        let Entity::Node(x) = at else { return };
        match timer {
            AodvTimer::Discovery { dst, serial } => match self.buffer.on_timeout(x, dst, serial, self.params.retries) {
                Timeout::Stale => {}
                Timeout::Retry { serial, .. } => self.aodv_route_discovery(net, x, dst, serial),
                Timeout::GiveUp(dropped) => {
                    for p in &dropped {
                        net.drop_packet(at, p);
                    }
                }
            },
            AodvTimer::Hello => {
                if let Some(interval) = self.params.hello {
                    self.hello_tick(net, x, interval);
                }
            }
        }
    }
}
