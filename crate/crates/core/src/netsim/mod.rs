//! Discrete-event engine with a unit-disk radio and an omnipresent base
//! station.
//!
//! Mobile nodes hear each other iff they are within `tx_range` at the moment
//! of transmission. The base station reaches, and is reached by, every node.
//! Every transmission takes a fixed per-hop latency; mobile-to-mobile links
//! may additionally drop packets with an independent loss probability.

pub mod event;
mod packet;
pub mod trace;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use event::{EventQueue, ScheduleError};
pub use packet::{Addr, Entity, NodeId, Packet, PacketId, PacketKind};

use crate::geometry::{distance, Position};
use crate::metrics::{Counters, MetricEvent};
use crate::mobility::Mobility;
use crate::traffic::CbrFlow;
use trace::{TraceEvent, TraceRecord, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub tx_range: f64,
    pub per_hop_latency: f64,
    pub loss_probability: f64,
}

impl RadioModel {
    /// Boundary distance counts as in range.
    pub fn in_range(&self, a: Position, b: Position) -> bool {
        distance(a, b) <= self.tx_range
    }
}

/// Why a unicast did not reach its next hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkFailure {
    OutOfRange,
    Lost,
}

/// Header sizes used when building packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSizes {
    pub data: u32,
    pub control: u32,
}

pub(crate) enum EventKind<M, T> {
    Arrival {
        to: Entity,
        from: Entity,
        packet: Packet<M>,
    },
    /// Copies of one broadcast reaching several receivers at the same
    /// instant, handled in order.
    Fanout {
        to: Vec<Entity>,
        from: Entity,
        packet: Packet<M>,
    },
    Timer {
        at: Entity,
        timer: T,
    },
    TrafficTick {
        flow: usize,
    },
}

/// A routing protocol driven by the engine. All protocol state lives in the
/// implementor; the engine only moves packets and fires timers.
pub trait Protocol: Sized {
    type Msg: Clone + fmt::Debug + Default;
    type Timer: Clone + fmt::Debug;

    /// Called once before the first event.
    fn start(&mut self, net: &mut Network<Self>);

    /// A CBR source produced a new DATA packet at `packet.origin`.
    fn originate(&mut self, net: &mut Network<Self>, packet: Packet<Self::Msg>);

    /// `packet` arrived at `at`, transmitted by `from`.
    fn receive(&mut self, net: &mut Network<Self>, at: Entity, from: Entity, packet: Packet<Self::Msg>);

    fn timer(&mut self, net: &mut Network<Self>, at: Entity, timer: Self::Timer);
}

pub struct Network<P: Protocol> {
    queue: EventQueue<EventKind<P::Msg, P::Timer>>,
    mobility: Vec<Mobility>,
    bs_position: Position,
    radio: RadioModel,
    sizes: PacketSizes,
    loss_rng: ChaCha8Rng,
    counters: Counters,
    trace: Option<Box<dyn TraceSink>>,
    node_seq: Vec<u64>,
    bs_seq: u64,
}

impl<P: Protocol> Network<P> {
    pub fn new(
        mobility: Vec<Mobility>,
        bs_position: Position,
        radio: RadioModel,
        sizes: PacketSizes,
        n_flows: usize,
        loss_seed: u64,
    ) -> Self {
        let n = mobility.len();
        Self {
            queue: EventQueue::new(),
            mobility,
            bs_position,
            radio,
            sizes,
            loss_rng: ChaCha8Rng::seed_from_u64(loss_seed),
            counters: Counters::new(n, n_flows),
            trace: None,
            node_seq: vec![0; n],
            bs_seq: 0,
        }
    }

    pub fn set_trace(&mut self, sink: Box<dyn TraceSink>) {
        self.trace = Some(sink);
    }

    pub fn take_trace(&mut self) -> Option<Box<dyn TraceSink>> {
        self.trace.take()
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn n_nodes(&self) -> usize {
        self.mobility.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.mobility.len() as u32).map(NodeId)
    }

    pub fn radio(&self) -> &RadioModel {
        &self.radio
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn bs_position(&self) -> Position {
        self.bs_position
    }

    pub fn position_of(&mut self, node: NodeId) -> Position {
        let t = self.now();
        self.mobility[node.index()].position(t)
    }

    pub fn position(&mut self, e: Entity) -> Position {
        match e {
            Entity::Node(n) => self.position_of(n),
            Entity::BaseStation => self.bs_position,
        }
    }

    /// Whether `a` and `b` can hear each other right now.
    pub fn linked(&mut self, a: Entity, b: Entity) -> bool {
        match (a, b) {
            (Entity::BaseStation, _) | (_, Entity::BaseStation) => true,
            (Entity::Node(x), Entity::Node(y)) => {
                let (pa, pb) = (self.position_of(x), self.position_of(y));
                self.radio.in_range(pa, pb)
            }
        }
    }

    /// Mobile nodes within range of `node` right now, in id order.
    pub fn neighbors(&mut self, node: NodeId) -> Vec<NodeId> {
        let me = self.position_of(node);
        let t = self.now();
        let range = self.radio.tx_range;
        self.mobility
            .iter_mut()
            .enumerate()
            .filter(|&(i, _)| i != node.index())
            .filter_map(|(i, m)| (distance(me, m.position(t)) <= range).then_some(NodeId(i as u32)))
            .collect()
    }

    /// A new packet originated at `origin`, with a fresh per-origin id.
    pub fn new_packet(&mut self, kind: PacketKind, origin: Entity, destination: Addr, msg: P::Msg) -> Packet<P::Msg> {
        let seq = match origin {
            Entity::Node(n) => {
                let s = &mut self.node_seq[n.index()];
                *s += 1;
                *s
            }
            Entity::BaseStation => {
                self.bs_seq += 1;
                self.bs_seq
            }
        };
        Packet {
            kind,
            id: PacketId { origin, seq },
            origin,
            destination,
            hop_count: 0,
            size: if kind.is_control() {
                self.sizes.control
            } else {
                self.sizes.data
            },
            to_bs: false,
            dest_position: None,
            origin_position: None,
            request_zone: None,
            created_at: self.now(),
            flow: None,
            msg,
        }
    }

    fn emit(&mut self, event: TraceEvent, packet: &Packet<P::Msg>, node: Entity) {
        if let Some(sink) = self.trace.as_mut() {
            sink.record(&TraceRecord {
                time: self.queue.now(),
                event,
                kind: packet.kind,
                origin: packet.origin,
                destination: packet.destination,
                node,
                hop_count: packet.hop_count,
                seq: packet.id.seq,
            });
        }
    }

    fn count_tx(&mut self, sender: Entity, packet: &Packet<P::Msg>) {
        if packet.kind.is_control() {
            self.counters.record(MetricEvent::ControlSent(packet.kind));
        }
        match sender {
            Entity::Node(n) => self.counters.record(MetricEvent::Tx(n.index())),
            Entity::BaseStation => self.counters.record(MetricEvent::BaseStationTx),
        };
        self.emit(TraceEvent::Tx, packet, sender);
    }

    fn lost(&mut self) -> bool {
        let p = self.radio.loss_probability;
        p > 0.0 && self.loss_rng.random::<f64>() < p
    }

    fn enqueue_arrival(&mut self, from: Entity, to: Entity, packet: Packet<P::Msg>) {
        let at = self.now() + self.radio.per_hop_latency;
        self.queue
            .schedule(at, EventKind::Arrival { to, from, packet })
            .expect("arrivals are never in the past");
    }

    /// One physical broadcast. The base station reaches every node; a mobile
    /// node reaches the other mobile nodes in range. Counted as a single
    /// transmission. Returns the receivers that will get a copy.
    pub fn broadcast(&mut self, sender: Entity, packet: Packet<P::Msg>) -> Vec<Entity> {
        self.count_tx(sender, &packet);
        let receivers: Vec<Entity> = match sender {
            Entity::BaseStation => self.nodes().map(Entity::Node).collect(),
            Entity::Node(n) => self.neighbors(n).into_iter().map(Entity::Node).collect(),
        };
        let mut delivered = Vec::with_capacity(receivers.len());
        for r in receivers {
            if sender != Entity::BaseStation && self.lost() {
                continue;
            }
            delivered.push(r);
        }
        match delivered.len() {
            0 => {}
            1 => self.enqueue_arrival(sender, delivered[0], packet),
            _ => {
                let at = self.now() + self.radio.per_hop_latency;
                let ev = EventKind::Fanout {
                    to: delivered.clone(),
                    from: sender,
                    packet,
                };
                self.queue.schedule(at, ev).expect("arrivals are never in the past");
            }
        }
        delivered
    }

    /// One addressed transmission. Links with the base station always work;
    /// mobile-to-mobile links need range at send time and survive loss.
    /// On failure the packet is handed back to the caller.
    #[allow(clippy::result_large_err)]
    pub fn unicast(
        &mut self,
        sender: Entity,
        receiver: Entity,
        packet: Packet<P::Msg>,
    ) -> Result<(), (LinkFailure, Packet<P::Msg>)> {
        self.count_tx(sender, &packet);
        let via_bs = sender == Entity::BaseStation || receiver == Entity::BaseStation;
        if !via_bs {
            if !self.linked(sender, receiver) {
                return Err((LinkFailure::OutOfRange, packet));
            }
            if self.lost() {
                return Err((LinkFailure::Lost, packet));
            }
        }
        self.enqueue_arrival(sender, receiver, packet);
        Ok(())
    }

    pub fn set_timer(&mut self, at: Entity, delay: f64, timer: P::Timer) {
        let t = self.now() + delay.max(0.0);
        self.queue
            .schedule(t, EventKind::Timer { at, timer })
            .expect("timers are never in the past");
    }

    /// Hand a DATA packet to its destination. Only the first copy counts.
    pub fn deliver(&mut self, node: NodeId, packet: &Packet<P::Msg>) -> bool {
        debug_assert_eq!(packet.destination, Addr::Node(node));
        let flow = packet.flow.expect("DATA packets carry their flow");
        let first = self.counters.record(MetricEvent::DataDelivered { flow, id: packet.id });
        if first {
            self.emit(TraceEvent::Deliver, packet, Entity::Node(node));
        }
        first
    }

    /// Record that `at` discarded `packet` (trace only).
    pub fn drop_packet(&mut self, at: Entity, packet: &Packet<P::Msg>) {
        self.emit(TraceEvent::Drop, packet, at);
    }

    pub fn is_delivered(&self, id: &PacketId) -> bool {
        self.counters.is_delivered(id)
    }
}

/// A protocol instance bound to a network and its traffic.
pub struct Simulation<P: Protocol> {
    pub net: Network<P>,
    pub proto: P,
    flows: Vec<CbrFlow>,
    started: bool,
}

impl<P: Protocol> Simulation<P> {
    pub fn new(mut net: Network<P>, proto: P, flows: Vec<CbrFlow>) -> Self {
        net.counters.reserve_flows(flows.len());
        Self {
            net,
            proto,
            flows,
            started: false,
        }
    }

    pub fn flows(&self) -> &[CbrFlow] {
        &self.flows
    }

    pub fn now(&self) -> f64 {
        self.net.now()
    }

    fn ensure_started(&mut self) {
        if self.started {
            return;
        }
        self.started = true;
        for (i, f) in self.flows.iter().enumerate() {
            if f.start < f.end {
                self.net
                    .queue
                    .schedule(f.start, EventKind::TrafficTick { flow: i })
                    .expect("flows start at t >= 0");
            }
        }
        self.proto.start(&mut self.net);
    }

    /// Process every event with time `<= t_end`, then set the clock to `t_end`.
    pub fn run_until(&mut self, t_end: f64) {
        self.ensure_started();
        while let Some(t) = self.net.queue.peek_time() {
            if t > t_end {
                break;
            }
            let (_, _, ev) = self.net.queue.pop().expect("peeked");
            self.dispatch(ev);
        }
        self.net.queue.advance_to(t_end);
    }

    fn arrive(&mut self, to: Entity, from: Entity, packet: Packet<P::Msg>) {
        match to {
            Entity::Node(n) => self.net.counters.record(MetricEvent::Rx(n.index())),
            Entity::BaseStation => self.net.counters.record(MetricEvent::BaseStationRx),
        };
        self.net.emit(TraceEvent::Rx, &packet, to);
        self.proto.receive(&mut self.net, to, from, packet);
    }

    fn dispatch(&mut self, ev: EventKind<P::Msg, P::Timer>) {
        match ev {
            EventKind::Arrival { to, from, packet } => self.arrive(to, from, packet),
            EventKind::Fanout { to, from, packet } => {
                if let Some((&last, rest)) = to.split_last() {
                    for &r in rest {
                        self.arrive(r, from, packet.clone());
                    }
                    self.arrive(last, from, packet);
                }
            }
            EventKind::Timer { at, timer } => self.proto.timer(&mut self.net, at, timer),
            EventKind::TrafficTick { flow } => {
                let f = &self.flows[flow];
                let (src, dst, next) = (f.source, f.destination, self.net.now() + f.interval());
                let end = f.end;
                let mut packet =
                    self.net
                        .new_packet(PacketKind::Data, Entity::Node(src), Addr::Node(dst), P::Msg::default());
                packet.flow = Some(flow);
                self.net.counters.record(MetricEvent::DataSent { flow });
                self.net.emit(TraceEvent::Orig, &packet, Entity::Node(src));
                if next < end {
                    self.net
                        .queue
                        .schedule(next, EventKind::TrafficTick { flow })
                        .expect("next tick is in the future");
                }
                self.proto.originate(&mut self.net, packet);
            }
        }
    }
}
