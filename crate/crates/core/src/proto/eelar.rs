//! EELAR: the base station keeps a position table of every node, split into
//! `k` angular areas around itself. A source asks the base station where its
//! destination is; same-area traffic is flooded greedily inside the source's
//! area, cross-area traffic is relayed through the base station.

use std::collections::BTreeMap;

use crate::config::{BsRelay, ForwardRule, ScenarioConfig};
use crate::geometry::{area_of_position, distance, AreaId, Position};
use crate::netsim::{Addr, Entity, Network, NodeId, Packet, PacketId, PacketKind, Protocol};

use super::SeenSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionTableEntry {
    pub node: NodeId,
    pub position: Position,
    pub area: AreaId,
    pub last_update: f64,
    pub reachable: bool,
}

#[derive(Debug, Clone)]
pub struct BaseStationState {
    pub position: Position,
    pub n_areas: u32,
    table: BTreeMap<NodeId, PositionTableEntry>,
    /// Destinations being refreshed, with the sources waiting on them.
    awaiting: BTreeMap<NodeId, Vec<NodeId>>,
}

impl BaseStationState {
    pub fn new(position: Position, n_areas: u32) -> Self {
        Self {
            position,
            n_areas,
            table: BTreeMap::new(),
            awaiting: BTreeMap::new(),
        }
    }

    pub fn entry(&self, node: NodeId) -> Option<&PositionTableEntry> {
        self.table.get(&node)
    }

    pub fn entries(&self) -> impl Iterator<Item = &PositionTableEntry> {
        self.table.values()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn area_of(&self, p: Position) -> AreaId {
        area_of_position(self.position, p, self.n_areas).expect("n_areas >= 1 is validated")
    }

    fn is_stale(&self, node: NodeId, t: f64, staleness: f64) -> bool {
        self.table.get(&node).is_none_or(|e| t - e.last_update > staleness)
    }
}

/// Insert or refresh `from`'s entry and return its area.
pub fn bs_handle_pos_req(bs: &mut BaseStationState, from: NodeId, pos: Position, t: f64) -> AreaId {
    let area = bs.area_of(pos);
    bs.table.insert(
        from,
        PositionTableEntry {
            node: from,
            position: pos,
            area,
            last_update: t,
            reachable: true,
        },
    );
    area
}

/// Marks nodes silent for longer than `unreachable_timeout`. Returns how
/// many entries changed state.
pub fn bs_beacon_tick(bs: &mut BaseStationState, t: f64, unreachable_timeout: f64) -> usize {
    let mut changed = 0;
    for e in bs.table.values_mut() {
        if e.reachable && t - e.last_update > unreachable_timeout {
            e.reachable = false;
            changed += 1;
        }
    }
    changed
}

/// What the base station tells a source about its destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstReply {
    pub reachable: bool,
    pub src_area: AreaId,
    pub dst_area: AreaId,
    pub dst_position: Position,
}

impl DstReply {
    pub fn same_area(&self) -> bool {
        self.reachable && self.src_area == self.dst_area
    }
}

fn dst_reply(bs: &BaseStationState, src: NodeId, dst: NodeId) -> DstReply {
    let s = bs.table[&src];
    match bs.table.get(&dst) {
        Some(d) if d.reachable => DstReply {
            reachable: true,
            src_area: s.area,
            dst_area: d.area,
            dst_position: d.position,
        },
        _ => DstReply {
            reachable: false,
            src_area: s.area,
            dst_area: s.area,
            dst_position: s.position,
        },
    }
}

/// Why a node asks the base station to record its position.
/// The base station answers with an IDRp on join and whenever the reported
/// position moves the node into another area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    Join,
    Periodic,
    /// Answer to a targeted beacon.
    Refresh,
}

#[derive(Debug, Clone)]
pub enum EelarMsg {
    /// `area`: the area an intra-area flood is confined to.
    Data {
        area: Option<AreaId>,
    },
    Beacon {
        targeted: bool,
    },
    PosReq {
        position: Position,
        report: Report,
    },
    IdRp {
        area: AreaId,
    },
    DstPosReq {
        dst: NodeId,
        src_position: Position,
    },
    DstIdRp {
        dst: NodeId,
        reply: DstReply,
    },
}

impl Default for EelarMsg {
    fn default() -> Self {
        EelarMsg::Data { area: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Forward,
    DropFlagged,
    DropDuplicate,
    DropOtherArea,
    DropNotCloser,
}

/// Intra-area forwarding rule for a non-destination node `b` at `b_pos`.
/// `packet.origin_position` is the reference point (the source, or the
/// previous hop under the previous-hop rule).
pub fn mn_forward_decision(
    b_pos: Position,
    b_area: Option<AreaId>,
    packet: &Packet<EelarMsg>,
    already_seen: bool,
) -> Decision {
    if packet.to_bs {
        return Decision::DropFlagged;
    }
    if already_seen {
        return Decision::DropDuplicate;
    }
    if let EelarMsg::Data { area: Some(a) } = packet.msg {
        if b_area != Some(a) {
            return Decision::DropOtherArea;
        }
    }
    let (Some(reference), Some(dest)) = (packet.origin_position, packet.dest_position) else {
        return Decision::DropNotCloser;
    };
    if distance(b_pos, dest) < distance(reference, dest) {
        Decision::Forward
    } else {
        Decision::DropNotCloser
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    ViaBs,
    IntraArea,
}

#[derive(Debug)]
enum Session {
    Querying(Vec<Packet<EelarMsg>>),
    Active {
        route: Route,
        dst_position: Position,
        since: f64,
    },
}

#[derive(Debug, Default)]
pub struct EelarNodeState {
    pub my_area: Option<AreaId>,
    seen: SeenSet<PacketId>,
    sessions: BTreeMap<NodeId, Session>,
}

impl EelarNodeState {
    /// Packets waiting on a destination lookup.
    pub fn pending_sends(&self) -> usize {
        self.sessions
            .values()
            .map(|s| match s {
                Session::Querying(q) => q.len(),
                Session::Active { .. } => 0,
            })
            .sum()
    }

    pub fn route_to(&self, dst: NodeId) -> Option<Route> {
        match self.sessions.get(&dst) {
            Some(Session::Active { route, .. }) => Some(*route),
            _ => None,
        }
    }

    fn set_area(&mut self, area: AreaId) {
        if self.my_area.is_some_and(|a| a != area) {
            self.sessions.retain(|_, s| matches!(s, Session::Querying(_)));
        }
        self.my_area = Some(area);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EelarParams {
    pub beacon_period: f64,
    pub staleness: f64,
    pub unreachable_timeout: f64,
    pub forward_rule: ForwardRule,
    pub bs_relay: BsRelay,
}

impl EelarParams {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            beacon_period: c.beacon_period_s,
            staleness: c.staleness_s,
            unreachable_timeout: c.unreachable_timeout_s,
            forward_rule: c.forward_rule,
            bs_relay: c.bs_relay,
        }
    }
}

#[derive(Debug, Clone)]
pub enum EelarTimer {
    Beacon,
}

pub struct Eelar {
    params: EelarParams,
    bs: BaseStationState,
    nodes: Vec<EelarNodeState>,
}

impl Eelar {
    pub fn new(params: EelarParams, bs_position: Position, n_areas: u32, n_nodes: usize) -> Self {
        Self {
            params,
            bs: BaseStationState::new(bs_position, n_areas),
            nodes: (0..n_nodes).map(|_| EelarNodeState::default()).collect(),
        }
    }

    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self::new(
            EelarParams::from_config(c),
            c.bs_position(),
            c.n_areas,
            c.n_nodes as usize,
        )
    }

    pub fn base_station(&self) -> &BaseStationState {
        &self.bs
    }

    pub fn node(&self, n: NodeId) -> &EelarNodeState {
        &self.nodes[n.index()]
    }

    fn send_to_bs(&self, net: &mut Network<Self>, from: NodeId, kind: PacketKind, msg: EelarMsg) {
        let p = net.new_packet(kind, Entity::Node(from), Addr::BaseStation, msg);
        net.unicast(Entity::Node(from), Entity::BaseStation, p)
            .expect("links to the base station never fail");
    }

    fn send_from_bs(&self, net: &mut Network<Self>, to: NodeId, kind: PacketKind, msg: EelarMsg) {
        let p = net.new_packet(kind, Entity::BaseStation, Addr::Node(to), msg);
        net.unicast(Entity::BaseStation, Entity::Node(to), p)
            .expect("links from the base station never fail");
    }

    fn report_position(&self, net: &mut Network<Self>, n: NodeId, report: Report) {
        let position = net.position_of(n);
        self.send_to_bs(net, n, PacketKind::PosReq, EelarMsg::PosReq { position, report });
    }

    /// Reply to a beacon with the node's current position.
    pub fn mn_handle_beacon(&mut self, net: &mut Network<Self>, n: NodeId, targeted: bool) {
        let report = if targeted { Report::Refresh } else { Report::Periodic };
        self.report_position(net, n, report);
    }

    /// Periodic poll: expire silent nodes, then beacon everyone.
    pub fn bs_beacon_tick(&mut self, net: &mut Network<Self>) {
        bs_beacon_tick(&mut self.bs, net.now(), self.params.unreachable_timeout);
        let p = net.new_packet(
            PacketKind::Beacon,
            Entity::BaseStation,
            Addr::Broadcast,
            EelarMsg::Beacon { targeted: false },
        );
        net.broadcast(Entity::BaseStation, p);
        net.set_timer(Entity::BaseStation, self.params.beacon_period, EelarTimer::Beacon);
    }

    fn bs_pos_req(&mut self, net: &mut Network<Self>, from: NodeId, position: Position, report: Report) {
        let before = self.bs.entry(from).map(|e| e.area);
        let area = bs_handle_pos_req(&mut self.bs, from, position, net.now());
        if report == Report::Join || before.is_some_and(|a| a != area) {
            self.send_from_bs(net, from, PacketKind::IdRp, EelarMsg::IdRp { area });
        }
        if let Some(waiting) = self.bs.awaiting.remove(&from) {
            for src in waiting {
                self.send_dst_reply(net, src, from);
            }
        }
    }

    fn send_dst_reply(&self, net: &mut Network<Self>, src: NodeId, dst: NodeId) {
        let reply = dst_reply(&self.bs, src, dst);
        self.send_from_bs(net, src, PacketKind::DstIdRp, EelarMsg::DstIdRp { dst, reply });
    }

    /// Look up `dst` for `from`, refreshing a stale entry with a targeted
    /// beacon before answering.
    pub fn bs_handle_dst_pos_req(
        &mut self,
        net: &mut Network<Self>,
        from: NodeId,
        dst: NodeId,
        src_position: Position,
    ) {
        let now = net.now();
        bs_handle_pos_req(&mut self.bs, from, src_position, now);
        let known_reachable = self.bs.entry(dst).is_some_and(|e| e.reachable);
        if !known_reachable || !self.bs.is_stale(dst, now, self.params.staleness) {
            self.send_dst_reply(net, from, dst);
            return;
        }
        let waiting = self.bs.awaiting.entry(dst).or_default();
        let first = waiting.is_empty();
        waiting.push(from);
        if first {
            self.send_from_bs(net, dst, PacketKind::Beacon, EelarMsg::Beacon { targeted: true });
        }
    }

    /// Cross-area DATA arriving at the base station.
    pub fn bs_relay_data(&mut self, net: &mut Network<Self>, mut packet: Packet<EelarMsg>) {
        let Some(dst) = packet.dest_node() else {
            net.drop_packet(Entity::BaseStation, &packet);
            return;
        };
        let entry = match self.bs.entry(dst) {
            Some(e) if e.reachable => *e,
            _ => {
                net.drop_packet(Entity::BaseStation, &packet);
                return;
            }
        };
        packet.hop_count += 1;
        packet.to_bs = false;
        match self.params.bs_relay {
            BsRelay::Direct => {
                net.unicast(Entity::BaseStation, Entity::Node(dst), packet)
                    .expect("links from the base station never fail");
            }
            BsRelay::FloodDestArea => {
                packet.msg = EelarMsg::Data { area: Some(entry.area) };
                packet.origin_position = Some(self.bs.position);
                packet.dest_position = Some(entry.position);
                net.broadcast(Entity::BaseStation, packet);
            }
        }
    }

    fn query(&mut self, net: &mut Network<Self>, src: NodeId, dst: NodeId) {
        let src_position = net.position_of(src);
        self.send_to_bs(
            net,
            src,
            PacketKind::DstPosReq,
            EelarMsg::DstPosReq { dst, src_position },
        );
    }

    fn originate_at(&mut self, net: &mut Network<Self>, src: NodeId, packet: Packet<EelarMsg>) {
        let dst = packet.dest_node().expect("DATA is addressed to a node");
        let now = net.now();
        let staleness = self.params.staleness;
        let state = &mut self.nodes[src.index()];
        match state.sessions.get_mut(&dst) {
            Some(Session::Querying(q)) => q.push(packet),
            Some(Session::Active {
                route,
                dst_position,
                since,
            }) if *route == Route::ViaBs || now - *since <= staleness => {
                let (route, dst_position) = (*route, *dst_position);
                self.mn_send_data(net, src, route, dst_position, packet);
            }
            _ => {
                state.sessions.insert(dst, Session::Querying(vec![packet]));
                self.query(net, src, dst);
            }
        }
    }

    /// Transmit one DATA packet along an established session.
    pub fn mn_send_data(
        &mut self,
        net: &mut Network<Self>,
        src: NodeId,
        route: Route,
        dst_position: Position,
        mut packet: Packet<EelarMsg>,
    ) {
        match route {
            Route::ViaBs => {
                packet.to_bs = true;
                net.unicast(Entity::Node(src), Entity::BaseStation, packet)
                    .expect("links to the base station never fail");
            }
            Route::IntraArea => {
                let state = &mut self.nodes[src.index()];
                state.seen.insert(packet.id);
                packet.msg = EelarMsg::Data { area: state.my_area };
                packet.dest_position = Some(dst_position);
                packet.origin_position = Some(net.position_of(src));
                net.broadcast(Entity::Node(src), packet);
            }
        }
    }

    fn on_dst_reply(&mut self, net: &mut Network<Self>, src: NodeId, dst: NodeId, reply: DstReply) {
        let now = net.now();
        let state = &mut self.nodes[src.index()];
        state.set_area(reply.src_area);
        let pending = match state.sessions.remove(&dst) {
            Some(Session::Querying(q)) => q,
            Some(active) => {
                state.sessions.insert(dst, active);
                return;
            }
            None => return,
        };
        if !reply.reachable {
            for p in &pending {
                net.drop_packet(Entity::Node(src), p);
            }
            return;
        }
        let route = if reply.same_area() {
            Route::IntraArea
        } else {
            Route::ViaBs
        };
        state.sessions.insert(
            dst,
            Session::Active {
                route,
                dst_position: reply.dst_position,
                since: now,
            },
        );
        for p in pending {
            self.mn_send_data(net, src, route, reply.dst_position, p);
        }
    }

    fn on_data(&mut self, net: &mut Network<Self>, b: NodeId, mut packet: Packet<EelarMsg>) {
        if packet.dest_node() == Some(b) {
            net.deliver(b, &packet);
            return;
        }
        let pos = net.position_of(b);
        let state = &mut self.nodes[b.index()];
        let seen = state.seen.contains(&packet.id);
        match mn_forward_decision(pos, state.my_area, &packet, seen) {
            Decision::Forward => {
                state.seen.insert(packet.id);
                packet.hop_count += 1;
                if self.params.forward_rule == ForwardRule::PrevHopDistance {
                    packet.origin_position = Some(pos);
                }
                net.broadcast(Entity::Node(b), packet);
            }
            Decision::DropNotCloser | Decision::DropOtherArea => {
                state.seen.insert(packet.id);
                net.drop_packet(Entity::Node(b), &packet);
            }
            Decision::DropDuplicate => {}
            Decision::DropFlagged => net.drop_packet(Entity::Node(b), &packet),
        }
    }
}

impl Protocol for Eelar {
    type Msg = EelarMsg;
    type Timer = EelarTimer;

    fn start(&mut self, net: &mut Network<Self>) {
        for n in net.nodes().collect::<Vec<_>>() {
            self.report_position(net, n, Report::Join);
        }
        net.set_timer(Entity::BaseStation, self.params.beacon_period, EelarTimer::Beacon);
    }

    fn originate(&mut self, net: &mut Network<Self>, packet: Packet<EelarMsg>) {
        let src = packet.origin.node().expect("DATA originates at a node");
        self.originate_at(net, src, packet);
    }

    fn receive(&mut self, net: &mut Network<Self>, at: Entity, from: Entity, packet: Packet<EelarMsg>) {
        match at {
            Entity::BaseStation => {
                let Some(from) = from.node() else { return };
                match packet.msg {
                    EelarMsg::PosReq { position, report } => self.bs_pos_req(net, from, position, report),
                    EelarMsg::DstPosReq { dst, src_position } => {
                        self.bs_handle_dst_pos_req(net, from, dst, src_position)
                    }
                    EelarMsg::Data { .. } => self.bs_relay_data(net, packet),
                    _ => {}
                }
            }
            Entity::Node(n) => match packet.msg {
                EelarMsg::Beacon { targeted } => self.mn_handle_beacon(net, n, targeted),
                EelarMsg::IdRp { area } => self.nodes[n.index()].set_area(area),
                EelarMsg::DstIdRp { dst, reply } => self.on_dst_reply(net, n, dst, reply),
                EelarMsg::Data { .. } => self.on_data(net, n, packet),
                _ => {}
            },
        }
    }

    fn timer(&mut self, net: &mut Network<Self>, _at: Entity, timer: EelarTimer) {
        match timer {
            EelarTimer::Beacon => self.bs_beacon_tick(net),
        }
    }
}
