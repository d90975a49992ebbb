//! Discrete-event simulation of a base-station-assisted, location-aided MANET
//! routing protocol (EELAR) and its reactive baselines (LAR1, LAR2, AODV, DSR).
//!
//! The crate is layered bottom-up:
//!
//! * [`geometry`]: positions, bearings, and sector ("network area") math.
//! * [`mobility`]: random waypoint, scripted, and static node motion.
//! * [`netsim`]: event queue, unit-disk radio, packets, trace output.
//! * [`proto`]: the routing protocols.
//! * [`traffic`], [`metrics`]: CBR sources and per-run counters.
//! * [`scenario`], [`sweep`]: single runs and parameter sweeps.

pub mod config;
pub mod geometry;
pub mod metrics;
pub mod mobility;
pub mod netsim;
pub mod proto;
pub mod scenario;
pub mod sweep;
pub mod traffic;

pub use config::{ConfigError, Protocol, ScenarioConfig};
pub use geometry::{AreaId, Position, Rect};
pub use metrics::{MetricsReport, Ratio};
pub use netsim::{NodeId, PacketKind};
pub use scenario::{run_scenario, ScenarioBuilder};
