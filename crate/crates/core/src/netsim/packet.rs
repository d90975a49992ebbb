use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Position, Rect};

/// Index of a mobile node, `0..n_nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Anything that can send or receive: a mobile node or the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Node(NodeId),
    BaseStation,
}

impl Entity {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Entity::Node(n) => Some(n),
            Entity::BaseStation => None,
        }
    }
}

impl From<NodeId> for Entity {
    fn from(n: NodeId) -> Self {
        Entity::Node(n)
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Node(n) => write!(f, "{n}"),
            Entity::BaseStation => f.write_str("BS"),
        }
    }
}

/// Link-level destination of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Addr {
    Node(NodeId),
    BaseStation,
    Broadcast,
}

impl From<Entity> for Addr {
    fn from(e: Entity) -> Self {
        match e {
            Entity::Node(n) => Addr::Node(n),
            Entity::BaseStation => Addr::BaseStation,
        }
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addr::Node(n) => write!(f, "{n}"),
            Addr::BaseStation => f.write_str("BS"),
            Addr::Broadcast => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PacketKind {
    Data,
    Beacon,
    PosReq,
    IdRp,
    DstPosReq,
    DstIdRp,
    Rreq,
    Rrep,
    Rerr,
    Hello,
    LarRreq,
    LarRrep,
}

impl PacketKind {
    pub const ALL: [PacketKind; 12] = [
        PacketKind::Data,
        PacketKind::Beacon,
        PacketKind::PosReq,
        PacketKind::IdRp,
        PacketKind::DstPosReq,
        PacketKind::DstIdRp,
        PacketKind::Rreq,
        PacketKind::Rrep,
        PacketKind::Rerr,
        PacketKind::Hello,
        PacketKind::LarRreq,
        PacketKind::LarRrep,
    ];

    pub fn is_control(self) -> bool {
        self != PacketKind::Data
    }

    pub fn name(self) -> &'static str {
        match self {
            PacketKind::Data => "DATA",
            PacketKind::Beacon => "BEACON",
            PacketKind::PosReq => "PosReq",
            PacketKind::IdRp => "IDRp",
            PacketKind::DstPosReq => "DstPosReq",
            PacketKind::DstIdRp => "DstIDRp",
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Hello => "HELLO",
            PacketKind::LarRreq => "LAR_RREQ",
            PacketKind::LarRrep => "LAR_RREP",
        }
    }

    pub fn from_name(s: &str) -> Option<PacketKind> {
        PacketKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unique per originating entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId {
    pub origin: Entity,
    pub seq: u64,
}

/// A packet on the air. The header fields are shared by every protocol;
/// `msg` carries the protocol-specific part.
#[derive(Debug, Clone)]
pub struct Packet<M> {
    pub kind: PacketKind,
    pub id: PacketId,
    pub origin: Entity,
    pub destination: Addr,
    pub hop_count: u32,
    pub size: u32,
    /// Set on cross-area EELAR data that must travel through the base station.
    pub to_bs: bool,
    pub dest_position: Option<Position>,
    /// Reference position for distance-based forwarding; stamped by the source.
    pub origin_position: Option<Position>,
    pub request_zone: Option<Rect>,
    pub created_at: f64,
    /// CBR flow index for DATA packets.
    pub flow: Option<usize>,
    pub msg: M,
}

impl<M> Packet<M> {
    pub fn is_data(&self) -> bool {
        self.kind == PacketKind::Data
    }

    /// Final destination node of a DATA packet.
    pub fn dest_node(&self) -> Option<NodeId> {
        match self.destination {
            Addr::Node(n) => Some(n),
            _ => None,
        }
    }
}
