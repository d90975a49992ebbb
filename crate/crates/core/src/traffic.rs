//! Constant-bit-rate traffic sources.

use rand::seq::index::sample;
use rand::Rng;

use crate::config::{ConfigError, ScenarioConfig};
use crate::netsim::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct CbrFlow {
    pub source: NodeId,
    pub destination: NodeId,
    pub rate: f64,
    pub packet_size: u32,
    pub start: f64,
    pub end: f64,
}

impl CbrFlow {
    pub fn interval(&self) -> f64 {
        1.0 / self.rate
    }

    /// Send instants `start + i/rate` strictly before `end`.
    pub fn send_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..)
            .map(move |i| self.start + i as f64 / self.rate)
            .take_while(move |&t| t < self.end)
    }

    pub fn send_count(&self) -> usize {
        self.send_times().count()
    }
}

/// Number of CBR sources for `n_nodes` at the configured fraction.
pub fn flow_count(n_nodes: u32, fraction: f64) -> usize {
    (fraction * f64::from(n_nodes)).round() as usize
}

/// Picks `round(cbr_fraction·n)` distinct sources, each with a destination
/// drawn uniformly from the other nodes. Start offsets are uniform within one
/// send interval so sources do not tick in lockstep.
pub fn generate_flows<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<CbrFlow>, ConfigError> {
    let n = config.n_nodes;
    if n < 2 {
        return Err(ConfigError::single("n_nodes", "traffic needs at least 2 nodes"));
    }
    let count = flow_count(n, config.cbr_fraction).min(n as usize);
    let interval = 1.0 / config.cbr_rate_pps;
    let mut sources: Vec<usize> = sample(rng, n as usize, count).into_vec();
    sources.sort_unstable();
    let flows = sources
        .into_iter()
        .map(|s| {
            let mut d = rng.random_range(0..n - 1) as usize;
            if d >= s {
                d += 1;
            }
            CbrFlow {
                source: NodeId(s as u32),
                destination: NodeId(d as u32),
                rate: config.cbr_rate_pps,
                packet_size: config.data_bytes,
                start: rng.random_range(0.0..interval),
                end: config.duration_s,
            }
        })
        .collect();
    Ok(flows)
}
