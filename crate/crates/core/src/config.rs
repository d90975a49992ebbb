//! Scenario configuration.
//!
//! Stored as a flat TOML document whose keys are exactly the field names of
//! [`ScenarioConfig`]. Missing keys take the defaults below, which follow
//! the reference NS-2 setup (1500 m square, 250 m radios, 2 pkt/s CBR from
//! 20% of nodes, random waypoint with 0–3 s pauses, 500 s).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Position;
use crate::metrics::EnergyModel;
use crate::mobility::MobilityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "EELAR")]
    Eelar,
    #[serde(rename = "LAR1")]
    Lar1,
    #[serde(rename = "LAR2")]
    Lar2,
    #[serde(rename = "AODV")]
    Aodv,
    #[serde(rename = "DSR")]
    Dsr,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Eelar,
        Protocol::Lar1,
        Protocol::Lar2,
        Protocol::Aodv,
        Protocol::Dsr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Eelar => "EELAR",
            Protocol::Lar1 => "LAR1",
            Protocol::Lar2 => "LAR2",
            Protocol::Aodv => "AODV",
            Protocol::Dsr => "DSR",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown {what} {value:?}")]
pub struct ParseEnumError {
    pub(crate) what: &'static str,
    pub(crate) value: String,
}

impl FromStr for Protocol {
    type Err = ParseEnumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseEnumError {
                what: "protocol",
                value: s.to_string(),
            })
    }
}

/// Reference distance an EELAR forwarder must beat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardRule {
    /// Closer to the destination than the original source was.
    SourceDistance,
    /// Closer to the destination than the node it heard the packet from.
    PrevHopDistance,
}

impl FromStr for ForwardRule {
    type Err = ParseEnumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source-distance" => Ok(ForwardRule::SourceDistance),
            "prev-hop-distance" => Ok(ForwardRule::PrevHopDistance),
            _ => Err(ParseEnumError {
                what: "forward rule",
                value: s.to_string(),
            }),
        }
    }
}

/// How the base station hands cross-area data to its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BsRelay {
    Direct,
    FloodDestArea,
}

impl FromStr for BsRelay {
    type Err = ParseEnumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(BsRelay::Direct),
            "flood-dest-area" => Ok(BsRelay::FloodDestArea),
            _ => Err(ParseEnumError {
                what: "relay mode",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub area_w_m: f64,
    pub area_h_m: f64,
    pub n_nodes: u32,
    pub tx_range_m: f64,
    pub data_bytes: u32,
    pub control_bytes: u32,
    pub cbr_fraction: f64,
    pub cbr_rate_pps: f64,
    /// Leg speeds are uniform in `[speed_mps - speed_spread_mps, speed_mps + speed_spread_mps]`.
    pub speed_mps: f64,
    pub speed_spread_mps: f64,
    pub pause_min_s: f64,
    pub pause_max_s: f64,
    pub protocol: Protocol,
    pub n_areas: u32,
    pub seed: u64,

    pub per_hop_latency_s: f64,
    pub loss_probability: f64,

    pub beacon_period_s: f64,
    pub staleness_s: f64,
    pub unreachable_timeout_s: f64,
    pub forward_rule: ForwardRule,
    pub bs_relay: BsRelay,

    pub aodv_discovery_timeout_s: f64,
    pub aodv_retries: u32,
    pub aodv_active_route_timeout_s: f64,
    pub hello_enabled: bool,
    pub hello_interval_s: f64,

    pub lar_delta_m: f64,
    /// Speed bound for the LAR expected zone; the scenario's top leg speed
    /// when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lar_vmax_mps: Option<f64>,
    /// Retry a failed zone-limited LAR discovery by flooding.
    pub lar_flood_on_retry: bool,

    pub energy_tx: f64,
    pub energy_rx: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 500.0,
            area_w_m: 1500.0,
            area_h_m: 1500.0,
            n_nodes: 100,
            tx_range_m: 250.0,
            data_bytes: 512,
            control_bytes: 64,
            cbr_fraction: 0.20,
            cbr_rate_pps: 2.0,
            speed_mps: 15.0,
            speed_spread_mps: 0.0,
            pause_min_s: 0.0,
            pause_max_s: 3.0,
            protocol: Protocol::Eelar,
            n_areas: 6,
            seed: 1,
            per_hop_latency_s: 0.002,
            loss_probability: 0.0,
            beacon_period_s: 1.0,
            staleness_s: 2.0,
            unreachable_timeout_s: 3.0,
            forward_rule: ForwardRule::SourceDistance,
            bs_relay: BsRelay::Direct,
            aodv_discovery_timeout_s: 2.0,
            aodv_retries: 2,
            aodv_active_route_timeout_s: 3.0,
            hello_enabled: false,
            hello_interval_s: 1.0,
            lar_delta_m: 0.0,
            lar_vmax_mps: None,
            lar_flood_on_retry: true,
            energy_tx: 1.0,
            energy_rx: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", format_fields(.0))]
    Invalid(Vec<FieldError>),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("unknown configuration field {0:?}")]
    UnknownField(String),
}

fn format_fields(errs: &[FieldError]) -> String {
    errs.iter()
        .map(|e| format!("{} ({})", e.field, e.reason))
        .collect::<Vec<_>>()
        .join(", ")
}

impl ConfigError {
    pub fn single(field: &str, reason: &str) -> Self {
        ConfigError::Invalid(vec![FieldError {
            field: field.to_string(),
            reason: reason.to_string(),
        }])
    }

    /// Names of the offending fields, for validation failures.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            ConfigError::Invalid(v) => v.iter().map(|e| e.field.as_str()).collect(),
            ConfigError::UnknownField(f) => vec![f.as_str()],
            ConfigError::Parse(_) => Vec::new(),
        }
    }
}

impl ScenarioConfig {
    /// The full-size reference setup.
    pub fn full() -> Self {
        Self::default()
    }

    /// Small, fast variant: 500 m square, 25 nodes, 100 s.
    pub fn desk() -> Self {
        Self {
            area_w_m: 500.0,
            area_h_m: 500.0,
            n_nodes: 25,
            duration_s: 100.0,
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full" => Some(Self::full()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, reason: &str| {
            if !ok {
                errs.push(FieldError {
                    field: field.to_string(),
                    reason: reason.to_string(),
                });
            }
        };
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(nonneg(self.duration_s), "duration_s", "must be finite and >= 0");
        check(pos(self.area_w_m), "area_w_m", "must be > 0");
        check(pos(self.area_h_m), "area_h_m", "must be > 0");
        check(pos(self.tx_range_m), "tx_range_m", "must be > 0");
        check(self.data_bytes > 0, "data_bytes", "must be > 0");
        check(self.control_bytes > 0, "control_bytes", "must be > 0");
        check(
            self.cbr_fraction.is_finite() && (0.0..=1.0).contains(&self.cbr_fraction),
            "cbr_fraction",
            "must be in [0, 1]",
        );
        check(pos(self.cbr_rate_pps), "cbr_rate_pps", "must be > 0");
        check(
            pos(self.speed_mps - self.speed_spread_mps),
            "speed_mps",
            "minimum leg speed must be > 0",
        );
        check(nonneg(self.speed_spread_mps), "speed_spread_mps", "must be >= 0");
        check(nonneg(self.pause_min_s), "pause_min_s", "must be >= 0");
        check(
            nonneg(self.pause_max_s) && self.pause_max_s >= self.pause_min_s,
            "pause_max_s",
            "must be >= pause_min_s",
        );
        check(self.n_areas >= 1, "n_areas", "must be >= 1");
        check(nonneg(self.per_hop_latency_s), "per_hop_latency_s", "must be >= 0");
        check(
            (0.0..=1.0).contains(&self.loss_probability),
            "loss_probability",
            "must be in [0, 1]",
        );
        check(pos(self.beacon_period_s), "beacon_period_s", "must be > 0");
        check(nonneg(self.staleness_s), "staleness_s", "must be >= 0");
        check(pos(self.unreachable_timeout_s), "unreachable_timeout_s", "must be > 0");
        check(
            pos(self.aodv_discovery_timeout_s),
            "aodv_discovery_timeout_s",
            "must be > 0",
        );
        check(
            pos(self.aodv_active_route_timeout_s),
            "aodv_active_route_timeout_s",
            "must be > 0",
        );
        check(pos(self.hello_interval_s), "hello_interval_s", "must be > 0");
        check(nonneg(self.lar_delta_m), "lar_delta_m", "must be >= 0");
        check(self.lar_vmax_mps.is_none_or(nonneg), "lar_vmax_mps", "must be >= 0");
        check(nonneg(self.energy_tx), "energy_tx", "must be >= 0");
        check(nonneg(self.energy_rx), "energy_rx", "must be >= 0");
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Every field name, in declaration order.
    pub const FIELDS: [&'static str; 33] = [
        "duration_s",
        "area_w_m",
        "area_h_m",
        "n_nodes",
        "tx_range_m",
        "data_bytes",
        "control_bytes",
        "cbr_fraction",
        "cbr_rate_pps",
        "speed_mps",
        "speed_spread_mps",
        "pause_min_s",
        "pause_max_s",
        "protocol",
        "n_areas",
        "seed",
        "per_hop_latency_s",
        "loss_probability",
        "beacon_period_s",
        "staleness_s",
        "unreachable_timeout_s",
        "forward_rule",
        "bs_relay",
        "aodv_discovery_timeout_s",
        "aodv_retries",
        "aodv_active_route_timeout_s",
        "hello_enabled",
        "hello_interval_s",
        "lar_delta_m",
        "lar_vmax_mps",
        "lar_flood_on_retry",
        "energy_tx",
        "energy_rx",
    ];

    /// Fields missing from `s` take the full-size defaults.
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Self::default().overlay_toml(s)
    }

    /// `self` with every field present in the TOML document `s` replaced.
    pub fn overlay_toml(&self, s: &str) -> Result<Self, ConfigError> {
        let parse = |e: toml::de::Error| ConfigError::Parse(e.message().to_string());
        let mut table: toml::Table = toml::from_str(&self.to_toml_string()).map_err(parse)?;
        let overlay: toml::Table = toml::from_str(s).map_err(parse)?;
        if let Some(unknown) = overlay.keys().find(|k| !Self::FIELDS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownField(unknown.clone()));
        }
        table.extend(overlay);
        toml::Value::Table(table).try_into().map_err(parse)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Override one field by name, parsing `value` as that field's type.
    pub fn set_field(&mut self, name: &str, value: &str) -> Result<(), ConfigError> {
        let mut table: toml::Table = toml::from_str(&self.to_toml_string())
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        let current = match table.get(name) {
            Some(v) => v.clone(),
            None if name == "lar_vmax_mps" => toml::Value::Float(0.0),
            None => return Err(ConfigError::UnknownField(name.to_string())),
        };
        let parsed = match current {
            toml::Value::String(_) if name == "protocol" => {
                let p: Protocol = value
                    .parse()
                    .map_err(|e: ParseEnumError| ConfigError::single(name, &e.to_string()))?;
                toml::Value::String(p.name().to_string())
            }
            toml::Value::String(_) => toml::Value::String(value.to_string()),
            toml::Value::Integer(_) => toml::Value::Integer(
                value
                    .parse()
                    .map_err(|_| ConfigError::single(name, "expected an integer"))?,
            ),
            toml::Value::Float(_) => toml::Value::Float(
                value
                    .parse()
                    .map_err(|_| ConfigError::single(name, "expected a number"))?,
            ),
            toml::Value::Boolean(_) => toml::Value::Boolean(
                value
                    .parse()
                    .map_err(|_| ConfigError::single(name, "expected true or false"))?,
            ),
            _ => return Err(ConfigError::UnknownField(name.to_string())),
        };
        table.insert(name.to_string(), parsed);
        *self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        Ok(())
    }

    pub fn speed_min(&self) -> f64 {
        self.speed_mps - self.speed_spread_mps
    }

    pub fn speed_max(&self) -> f64 {
        self.speed_mps + self.speed_spread_mps
    }

    pub fn mobility_params(&self) -> MobilityParams {
        MobilityParams {
            width: self.area_w_m,
            height: self.area_h_m,
            speed_min: self.speed_min(),
            speed_max: self.speed_max(),
            pause_min: self.pause_min_s,
            pause_max: self.pause_max_s,
        }
    }

    /// The base station sits at the center of the area.
    pub fn bs_position(&self) -> Position {
        Position::new(self.area_w_m / 2.0, self.area_h_m / 2.0)
    }

    pub fn lar_vmax(&self) -> f64 {
        self.lar_vmax_mps.unwrap_or_else(|| self.speed_max())
    }

    pub fn energy_model(&self) -> EnergyModel {
        EnergyModel {
            e_tx: self.energy_tx,
            e_rx: self.energy_rx,
        }
    }
}
