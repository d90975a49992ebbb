//! Fixtures shared by the benchmarks.

use eelar_core::{Protocol, ScenarioConfig};

/// A short desk-scale scenario for one protocol.
pub fn short_run(protocol: Protocol, n_nodes: u32) -> ScenarioConfig {
    ScenarioConfig {
        protocol,
        n_nodes,
        duration_s: 20.0,
        ..ScenarioConfig::desk()
    }
}
