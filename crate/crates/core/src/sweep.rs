//! Parameter sweeps over protocols, one swept parameter, and seeds, with
//! CSV and plot-series output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ParseEnumError, Protocol, ScenarioConfig};
use crate::metrics::Ratio;
use crate::scenario::run_scenario_audited;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    OverheadVsSpeed,
    DeliveryVsSpeed,
    OverheadVsN,
    DeliveryVsN,
    OverheadVsAreas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Overhead,
    Delivery,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::OverheadVsSpeed,
        Experiment::DeliveryVsSpeed,
        Experiment::OverheadVsN,
        Experiment::DeliveryVsN,
        Experiment::OverheadVsAreas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::OverheadVsSpeed => "overhead-vs-speed",
            Experiment::DeliveryVsSpeed => "delivery-vs-speed",
            Experiment::OverheadVsN => "overhead-vs-n",
            Experiment::DeliveryVsN => "delivery-vs-n",
            Experiment::OverheadVsAreas => "overhead-vs-areas",
        }
    }

    /// The config field being swept.
    pub fn param_name(self) -> &'static str {
        match self {
            Experiment::OverheadVsSpeed | Experiment::DeliveryVsSpeed => "speed_mps",
            Experiment::OverheadVsN | Experiment::DeliveryVsN => "n_nodes",
            Experiment::OverheadVsAreas => "n_areas",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Experiment::DeliveryVsSpeed | Experiment::DeliveryVsN => Metric::Delivery,
            _ => Metric::Overhead,
        }
    }

    fn apply(self, config: &mut ScenarioConfig, value: f64) {
        match self.param_name() {
            "speed_mps" => config.speed_mps = value,
            "n_nodes" => config.n_nodes = value as u32,
            _ => config.n_areas = value as u32,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ParseEnumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ParseEnumError {
                what: "experiment",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    /// Every field except the swept one and `protocol`/`seed`.
    pub base: ScenarioConfig,
    pub protocols: Vec<Protocol>,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

const COMPARED: [Protocol; 4] = [Protocol::Eelar, Protocol::Lar1, Protocol::Aodv, Protocol::Dsr];

impl SweepSpec {
    /// 500 m square, 100 s, five seeds.
    pub fn desk(experiment: Experiment) -> Self {
        let base = ScenarioConfig::desk();
        let seeds = (1..=5).collect();
        match experiment {
            Experiment::OverheadVsSpeed | Experiment::DeliveryVsSpeed => Self {
                experiment,
                base: ScenarioConfig { n_nodes: 50, ..base },
                protocols: COMPARED.to_vec(),
                values: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                seeds,
            },
            Experiment::OverheadVsN | Experiment::DeliveryVsN => Self {
                experiment,
                base: ScenarioConfig {
                    speed_mps: 15.0,
                    ..base
                },
                protocols: COMPARED.to_vec(),
                values: vec![25.0, 50.0, 75.0, 100.0, 125.0],
                seeds,
            },
            Experiment::OverheadVsAreas => Self {
                experiment,
                base: ScenarioConfig {
                    n_nodes: 125,
                    speed_mps: 15.0,
                    ..base
                },
                protocols: vec![Protocol::Eelar],
                values: vec![1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0],
                seeds,
            },
        }
    }

    /// The full-size setup: 1500 m square, 500 s.
    pub fn full(experiment: Experiment) -> Self {
        let base = ScenarioConfig::full();
        let seeds = (1..=5).collect();
        match experiment {
            Experiment::OverheadVsSpeed | Experiment::DeliveryVsSpeed => Self {
                experiment,
                base: ScenarioConfig { n_nodes: 100, ..base },
                protocols: COMPARED.to_vec(),
                values: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                seeds,
            },
            Experiment::OverheadVsN | Experiment::DeliveryVsN => Self {
                experiment,
                base: ScenarioConfig {
                    speed_mps: 15.0,
                    ..base
                },
                protocols: COMPARED.to_vec(),
                values: vec![50.0, 100.0, 150.0, 200.0, 250.0],
                seeds,
            },
            Experiment::OverheadVsAreas => Self {
                experiment,
                base: ScenarioConfig {
                    n_nodes: 250,
                    speed_mps: 15.0,
                    ..base
                },
                protocols: vec![Protocol::Eelar],
                values: (1..=20).map(f64::from).collect(),
                seeds,
            },
        }
    }

    pub fn preset(name: &str, experiment: Experiment) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk(experiment)),
            "full" => Some(Self::full(experiment)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.seeds.is_empty() {
            return Err(SweepError::Empty("seeds"));
        }
        if self.values.is_empty() {
            return Err(SweepError::Empty("values"));
        }
        if self.protocols.is_empty() {
            return Err(SweepError::Empty("protocols"));
        }
        if self.experiment == Experiment::OverheadVsAreas && self.protocols.iter().any(|&p| p != Protocol::Eelar) {
            return Err(SweepError::AreasNeedEelar);
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(SweepError::BadValue(*v));
        }
        Ok(())
    }

    /// Every run, in output order.
    pub fn runs(&self) -> Vec<(Protocol, f64, u64, ScenarioConfig)> {
        let mut out = Vec::new();
        for &protocol in &self.protocols {
            for &value in &self.values {
                for &seed in &self.seeds {
                    let mut c = self.base.clone();
                    c.protocol = protocol;
                    c.seed = seed;
                    self.experiment.apply(&mut c, value);
                    out.push((protocol, value, seed, c));
                }
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep has no {0}")]
    Empty(&'static str),
    #[error("overhead-vs-areas only runs EELAR")]
    AreasNeedEelar,
    #[error("sweep value {0} is not finite")]
    BadValue(f64),
    #[error("run {protocol} {param}={value} seed {seed}: {source}")]
    Run {
        protocol: Protocol,
        param: &'static str,
        value: f64,
        seed: u64,
        source: ConfigError,
    },
    #[error("run {protocol} {param}={value} seed {seed}: trace does not conserve counters")]
    Conservation {
        protocol: Protocol,
        param: &'static str,
        value: f64,
        seed: u64,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `seed` is `None` on the per-point mean rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment: Experiment,
    pub protocol: Protocol,
    pub param_name: &'static str,
    pub param_value: f64,
    pub seed: Option<u64>,
    pub data_sent: f64,
    pub data_delivered: f64,
    pub control_total: f64,
    pub control_overhead: Ratio,
    pub delivery_ratio: Ratio,
}

impl SweepRow {
    pub fn is_mean(&self) -> bool {
        self.seed.is_none()
    }

    pub fn metric(&self, m: Metric) -> Ratio {
        match m {
            Metric::Overhead => self.control_overhead,
            Metric::Delivery => self.delivery_ratio,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Mean of the defined values; undefined if none are.
fn mean_ratio(xs: &[Ratio]) -> Ratio {
    let defined: Vec<f64> = xs.iter().filter_map(|r| r.value()).collect();
    if defined.is_empty() {
        Ratio::UNDEFINED
    } else {
        Ratio::defined(mean(defined.into_iter()))
    }
}

fn mean_row(group: &[SweepRow]) -> SweepRow {
    let first = &group[0];
    let overheads: Vec<Ratio> = group.iter().map(|r| r.control_overhead).collect();
    let deliveries: Vec<Ratio> = group.iter().map(|r| r.delivery_ratio).collect();
    SweepRow {
        seed: None,
        data_sent: mean(group.iter().map(|r| r.data_sent)),
        data_delivered: mean(group.iter().map(|r| r.data_delivered)),
        control_total: mean(group.iter().map(|r| r.control_total)),
        control_overhead: mean_ratio(&overheads),
        delivery_ratio: mean_ratio(&deliveries),
        ..first.clone()
    }
}

/// Runs every (protocol, value, seed) and appends a mean row after each
/// (protocol, value) group. Runs execute in parallel; row order does not
/// depend on completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let exp = spec.experiment;
    let raw: Vec<SweepRow> = spec
        .runs()
        .into_par_iter()
        .map(|(protocol, value, seed, config)| {
            let out = run_scenario_audited(&config).map_err(|source| SweepError::Run {
                protocol,
                param: exp.param_name(),
                value,
                seed,
                source,
            })?;
            if !out.conserved() {
                return Err(SweepError::Conservation {
                    protocol,
                    param: exp.param_name(),
                    value,
                    seed,
                });
            }
            let r = out.report;
            Ok(SweepRow {
                experiment: exp,
                protocol,
                param_name: exp.param_name(),
                param_value: value,
                seed: Some(seed),
                data_sent: r.data_sent as f64,
                data_delivered: r.data_delivered as f64,
                control_total: r.control_total as f64,
                control_overhead: r.control_overhead,
                delivery_ratio: r.delivery_ratio,
            })
        })
        .collect::<Result<_, SweepError>>()?;
    let mut rows = Vec::with_capacity(raw.len() + raw.len() / spec.seeds.len());
    for group in raw.chunks(spec.seeds.len()) {
        rows.extend_from_slice(group);
        rows.push(mean_row(group));
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "protocol",
    "param_name",
    "param_value",
    "seed",
    "data_sent",
    "data_delivered",
    "control_total",
    "control_overhead",
    "delivery_ratio",
];

pub fn write_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.name().to_string(),
            r.protocol.name().to_string(),
            r.param_name.to_string(),
            r.param_value.to_string(),
            r.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
            r.data_sent.to_string(),
            r.data_delivered.to_string(),
            r.control_total.to_string(),
            r.control_overhead.to_string(),
            r.delivery_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String, SweepError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Mean-row series per protocol for the experiment's metric, sorted by x.
pub fn plot_series(rows: &[SweepRow], experiment: Experiment) -> BTreeMap<Protocol, Vec<(f64, Ratio)>> {
    let mut series: BTreeMap<Protocol, Vec<(f64, Ratio)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_mean() && r.experiment == experiment) {
        series
            .entry(r.protocol)
            .or_default()
            .push((r.param_value, r.metric(experiment.metric())));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Writes one `<experiment>_<protocol>.dat` file per protocol into `dir`,
/// two whitespace-separated columns: parameter value and mean metric.
pub fn emit_plot_data(rows: &[SweepRow], experiment: Experiment, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (protocol, points) in plot_series(rows, experiment) {
        let path = dir.join(format!("{}_{}.dat", experiment.name(), protocol.name()));
        let mut text = format!("# {} {}\n", experiment.param_name(), experiment.name());
        for (x, y) in points {
            text.push_str(&format!("{x} {y}\n"));
        }
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
