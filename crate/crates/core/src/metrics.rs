//! Per-run counters and the derived delivery ratio and control overhead.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::netsim::{PacketId, PacketKind};

/// A ratio that may be undefined (zero denominator). Serializes as `NA`
/// when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ratio(Option<f64>);

impl Ratio {
    pub const UNDEFINED: Ratio = Ratio(None);

    pub fn of(num: f64, den: f64) -> Ratio {
        if den == 0.0 {
            Ratio(None)
        } else {
            Ratio(Some(num / den))
        }
    }

    pub fn defined(v: f64) -> Ratio {
        Ratio(Some(v))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("NA"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("NA"),
        }
    }
}

/// Something worth counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricEvent {
    DataSent {
        flow: usize,
    },
    DataDelivered {
        flow: usize,
        id: PacketId,
    },
    ControlSent(PacketKind),
    /// A mobile node transmitted.
    Tx(usize),
    /// A mobile node received.
    Rx(usize),
    BaseStationTx,
    BaseStationRx,
}

/// Monotone counters owned by one run.
#[derive(Debug, Clone, Default)]
pub struct Counters {
    data_sent: u64,
    data_delivered: u64,
    flow_sent: Vec<u64>,
    flow_delivered: Vec<u64>,
    control: BTreeMap<PacketKind, u64>,
    tx: Vec<u64>,
    rx: Vec<u64>,
    bs_tx: u64,
    bs_rx: u64,
    delivered: HashSet<PacketId>,
}

impl Counters {
    pub fn new(n_nodes: usize, n_flows: usize) -> Self {
        Self {
            flow_sent: vec![0; n_flows],
            flow_delivered: vec![0; n_flows],
            tx: vec![0; n_nodes],
            rx: vec![0; n_nodes],
            ..Default::default()
        }
    }

    /// Makes room for at least `n_flows` flows.
    pub fn reserve_flows(&mut self, n_flows: usize) {
        if self.flow_sent.len() < n_flows {
            self.flow_sent.resize(n_flows, 0);
            self.flow_delivered.resize(n_flows, 0);
        }
    }

    /// Returns false when the event was ignored (repeat delivery).
    pub fn record(&mut self, ev: MetricEvent) -> bool {
        match ev {
            MetricEvent::DataSent { flow } => {
                self.data_sent += 1;
                self.flow_sent[flow] += 1;
            }
            MetricEvent::DataDelivered { flow, id } => {
                if !self.delivered.insert(id) {
                    return false;
                }
                self.data_delivered += 1;
                self.flow_delivered[flow] += 1;
            }
            MetricEvent::ControlSent(kind) => *self.control.entry(kind).or_default() += 1,
            MetricEvent::Tx(n) => self.tx[n] += 1,
            MetricEvent::Rx(n) => self.rx[n] += 1,
            MetricEvent::BaseStationTx => self.bs_tx += 1,
            MetricEvent::BaseStationRx => self.bs_rx += 1,
        }
        true
    }

    pub fn data_sent(&self) -> u64 {
        self.data_sent
    }

    pub fn data_delivered(&self) -> u64 {
        self.data_delivered
    }

    pub fn control(&self, kind: PacketKind) -> u64 {
        self.control.get(&kind).copied().unwrap_or(0)
    }

    pub fn control_total(&self) -> u64 {
        self.control.values().sum()
    }

    pub fn is_delivered(&self, id: &PacketId) -> bool {
        self.delivered.contains(id)
    }

    pub fn finalize(&self, energy: EnergyModel) -> MetricsReport {
        let control_total = self.control_total();
        let control_sent = self
            .control
            .iter()
            .filter(|(_, &v)| v > 0)
            .map(|(k, &v)| (k.name().to_string(), v))
            .collect();
        let energy_total = self.tx.iter().zip(&self.rx).map(|(&t, &r)| energy.cost(t, r)).sum();
        MetricsReport {
            data_sent: self.data_sent,
            data_delivered: self.data_delivered,
            control_sent,
            control_total,
            control_overhead: Ratio::of(control_total as f64, self.data_delivered as f64),
            delivery_ratio: Ratio::of(self.data_delivered as f64, self.data_sent as f64),
            flow_sent: self.flow_sent.clone(),
            flow_delivered: self.flow_delivered.clone(),
            node_tx: self.tx.clone(),
            node_rx: self.rx.clone(),
            bs_tx: self.bs_tx,
            bs_rx: self.bs_rx,
            energy_total,
        }
    }
}

/// Linear per-packet radio energy: `tx·e_tx + rx·e_rx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub e_tx: f64,
    pub e_rx: f64,
}

impl EnergyModel {
    pub fn cost(&self, tx: u64, rx: u64) -> f64 {
        tx as f64 * self.e_tx + rx as f64 * self.e_rx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub data_sent: u64,
    pub data_delivered: u64,
    /// Control transmissions per packet kind (kinds with zero omitted).
    pub control_sent: BTreeMap<String, u64>,
    pub control_total: u64,
    /// Control transmissions per delivered data packet.
    pub control_overhead: Ratio,
    /// Delivered over originated data packets.
    pub delivery_ratio: Ratio,
    pub flow_sent: Vec<u64>,
    pub flow_delivered: Vec<u64>,
    pub node_tx: Vec<u64>,
    pub node_rx: Vec<u64>,
    pub bs_tx: u64,
    pub bs_rx: u64,
    pub energy_total: f64,
}

impl MetricsReport {
    pub fn node_energy(&self, energy: EnergyModel) -> Vec<f64> {
        self.node_tx
            .iter()
            .zip(&self.node_rx)
            .map(|(&t, &r)| energy.cost(t, r))
            .collect()
    }
}
