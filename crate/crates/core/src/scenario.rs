//! One simulation run: build nodes, traffic and a protocol from a
//! [`ScenarioConfig`], run it to the end, and report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, Protocol as ProtocolId, ScenarioConfig};
use crate::geometry::Position;
use crate::metrics::MetricsReport;
use crate::mobility::{Mobility, Trajectory};
use crate::netsim::trace::{Shared, Tee, TraceAudit, TraceSink};
use crate::netsim::{Network, PacketSizes, Protocol, RadioModel, Simulation};
use crate::proto::{Aodv, Eelar, SourceRouting, Variant};
use crate::traffic::{generate_flows, CbrFlow};

const TRAFFIC_STREAM: u64 = 0;
const LOSS_STREAM: u64 = 1;
const MOBILITY_STREAM: u64 = 2;

/// Independent deterministic generator for one purpose within a run.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Random waypoint motion for every node, one generator per node.
pub fn waypoint_mobility(config: &ScenarioConfig) -> Vec<Mobility> {
    let params = config.mobility_params();
    (0..u64::from(config.n_nodes))
        .map(|i| {
            Mobility::Waypoint(Box::new(Trajectory::new(
                params,
                stream(config.seed, MOBILITY_STREAM + i),
            )))
        })
        .collect()
}

pub struct RunOutput {
    pub report: MetricsReport,
    /// Conservation checks over every trace record the run produced.
    pub audit: TraceAudit,
}

impl RunOutput {
    /// The trace is self-consistent and agrees with the counters.
    pub fn conserved(&self) -> bool {
        let (a, r) = (&self.audit, &self.report);
        a.is_consistent()
            && a.data_sent == r.data_sent
            && a.data_delivered == r.data_delivered
            && a.control_total() == r.control_total
            && r.flow_sent.iter().sum::<u64>() == r.data_sent
            && r.flow_delivered.iter().sum::<u64>() == r.data_delivered
            && r.flow_sent.iter().zip(&r.flow_delivered).all(|(s, d)| d <= s)
    }
}

/// A scenario with optional hand-placed nodes and flows.
pub struct ScenarioBuilder {
    config: ScenarioConfig,
    mobility: Option<Vec<Mobility>>,
    flows: Option<Vec<CbrFlow>>,
    trace: Option<Box<dyn TraceSink>>,
    prime_locations: bool,
}

impl ScenarioBuilder {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            config,
            mobility: None,
            flows: None,
            trace: None,
            prime_locations: false,
        }
    }

    /// Fixed node positions; `n_nodes` follows the list length.
    pub fn static_positions(self, positions: &[Position]) -> Self {
        self.mobility(positions.iter().copied().map(Mobility::Static).collect())
    }

    pub fn mobility(mut self, mobility: Vec<Mobility>) -> Self {
        self.config.n_nodes = mobility.len() as u32;
        self.mobility = Some(mobility);
        self
    }

    pub fn flows(mut self, flows: Vec<CbrFlow>) -> Self {
        self.flows = Some(flows);
        self
    }

    pub fn trace(mut self, sink: Box<dyn TraceSink>) -> Self {
        self.trace = Some(sink);
        self
    }

    /// LAR only: start every node with every other node's t=0 location.
    pub fn prime_lar_locations(mut self, yes: bool) -> Self {
        self.prime_locations = yes;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn run(self) -> Result<RunOutput, ConfigError> {
        let config = self.config;
        config.validate()?;
        let flows = match self.flows {
            Some(f) => f,
            None => generate_flows(&config, &mut stream(config.seed, TRAFFIC_STREAM))?,
        };
        let mobility = self.mobility.unwrap_or_else(|| waypoint_mobility(&config));
        let audit = Shared::new(TraceAudit::new());
        let sink: Box<dyn TraceSink> = match self.trace {
            Some(t) => Box::new(Tee(audit.clone(), t)),
            None => Box::new(audit.clone()),
        };
        let env = Env {
            config: &config,
            mobility,
            flows,
            sink,
        };
        let report = match config.protocol {
            ProtocolId::Eelar => env.run(Eelar::from_config(&config), |_, _| {}),
            ProtocolId::Aodv => env.run(Aodv::from_config(&config), |_, _| {}),
            ProtocolId::Dsr => env.run(SourceRouting::from_config(&config, Variant::Dsr), |_, _| {}),
            ProtocolId::Lar1 | ProtocolId::Lar2 => {
                let variant = if config.protocol == ProtocolId::Lar1 {
                    Variant::Lar1
                } else {
                    Variant::Lar2
                };
                let prime = self.prime_locations;
                env.run(SourceRouting::from_config(&config, variant), move |p, net| {
                    if prime {
                        p.prime_locations(net);
                    }
                })
            }
        };
        let audit = audit.into_inner().expect("simulation dropped its trace handle");
        Ok(RunOutput { report, audit })
    }
}

struct Env<'a> {
    config: &'a ScenarioConfig,
    mobility: Vec<Mobility>,
    flows: Vec<CbrFlow>,
    sink: Box<dyn TraceSink>,
}

impl Env<'_> {
    fn run<P: Protocol>(self, mut proto: P, setup: impl FnOnce(&mut P, &mut Network<P>)) -> MetricsReport {
        let c = self.config;
        let radio = RadioModel {
            tx_range: c.tx_range_m,
            per_hop_latency: c.per_hop_latency_s,
            loss_probability: c.loss_probability,
        };
        let sizes = PacketSizes {
            data: c.data_bytes,
            control: c.control_bytes,
        };
        let loss_seed = stream(c.seed, LOSS_STREAM).random();
        let mut net = Network::new(
            self.mobility,
            c.bs_position(),
            radio,
            sizes,
            self.flows.len(),
            loss_seed,
        );
        net.set_trace(self.sink);
        setup(&mut proto, &mut net);
        let mut sim = Simulation::new(net, proto, self.flows);
        if c.duration_s > 0.0 {
            sim.run_until(c.duration_s);
        }
        drop(sim.net.take_trace());
        sim.net.counters().finalize(c.energy_model())
    }
}

/// Run `config` with generated nodes and traffic.
pub fn run_scenario(config: &ScenarioConfig) -> Result<MetricsReport, ConfigError> {
    Ok(ScenarioBuilder::new(config.clone()).run()?.report)
}

/// Like [`run_scenario`], also returning the trace audit.
pub fn run_scenario_audited(config: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    ScenarioBuilder::new(config.clone()).run()
}
