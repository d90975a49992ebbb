mod args;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use eelar_core::netsim::trace::{LineTrace, Shared};
use eelar_core::scenario::RunOutput;
use eelar_core::sweep::{emit_plot_data, run_sweep, write_csv, SweepError, SweepSpec};
use eelar_core::{ConfigError, MetricsReport, PacketKind, ScenarioBuilder, ScenarioConfig};

use args::{Cli, Format, ScenarioArgs, Verb};

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Usage(String),
    Io(io::Error),
    Sweep(SweepError),
    /// The run finished but its trace disagrees with its counters.
    Conservation,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Usage(_) => 2,
            Failure::Sweep(
                SweepError::Run { .. } | SweepError::Empty(_) | SweepError::AreasNeedEelar | SweepError::BadValue(_),
            ) => 2,
            Failure::Conservation | Failure::Sweep(SweepError::Conservation { .. }) => 3,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Usage(s) => f.write_str(s),
            Failure::Io(e) => write!(f, "{e}"),
            Failure::Sweep(e) => write!(f, "{e}"),
            Failure::Conservation => f.write_str("trace audit failed: counters are not conserved"),
        }
    }
}

fn resolve(base: ScenarioConfig, args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let mut c = base;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        c = c.overlay_toml(&text)?;
    }
    for (k, v) in args.assignments.iter().chain(&args.fields.0) {
        c.set_field(k, v)?;
    }
    Ok(c)
}

fn preset(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let name = args.preset.as_deref().unwrap_or("full");
    ScenarioConfig::preset(name)
        .ok_or_else(|| Failure::Usage(format!("unknown preset {name:?} (expected full or desk)")))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn control_kinds() -> impl Iterator<Item = PacketKind> {
    PacketKind::ALL.into_iter().filter(|k| k.is_control())
}

fn write_text(c: &ScenarioConfig, r: &MetricsReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "protocol          {}", c.protocol)?;
    writeln!(out, "seed              {}", c.seed)?;
    writeln!(out, "nodes             {}", c.n_nodes)?;
    writeln!(out, "data_sent         {}", r.data_sent)?;
    writeln!(out, "data_delivered    {}", r.data_delivered)?;
    writeln!(out, "delivery_ratio    {}", r.delivery_ratio)?;
    writeln!(out, "control_total     {}", r.control_total)?;
    writeln!(out, "control_overhead  {}", r.control_overhead)?;
    writeln!(out, "energy_total      {}", r.energy_total)?;
    for (kind, n) in &r.control_sent {
        writeln!(out, "  {kind:<16}{n}")?;
    }
    Ok(())
}

fn write_run_csv(c: &ScenarioConfig, r: &MetricsReport, out: &mut dyn Write) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "protocol",
        "seed",
        "data_sent",
        "data_delivered",
        "control_total",
        "control_overhead",
        "delivery_ratio",
        "energy_total",
    ]
    .map(String::from)
    .to_vec();
    header.extend(control_kinds().map(|k| format!("control_{}", k.name())));
    w.write_record(&header)?;
    let mut row = vec![
        c.protocol.to_string(),
        c.seed.to_string(),
        r.data_sent.to_string(),
        r.data_delivered.to_string(),
        r.control_total.to_string(),
        r.control_overhead.to_string(),
        r.delivery_ratio.to_string(),
        r.energy_total.to_string(),
    ];
    row.extend(control_kinds().map(|k| r.control_sent.get(k.name()).copied().unwrap_or(0).to_string()));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

fn checked(out: RunOutput) -> Result<MetricsReport, Failure> {
    if out.conserved() {
        Ok(out.report)
    } else {
        Err(Failure::Conservation)
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Verb::Run { scenario, format, out } => {
            let c = resolve(preset(&scenario)?, &scenario)?;
            c.validate()?;
            let report = checked(ScenarioBuilder::new(c.clone()).run()?)?;
            let mut w = output(out.as_deref())?;
            match format {
                Format::Text => write_text(&c, &report, &mut w)?,
                Format::Csv => write_run_csv(&c, &report, &mut w)?,
            }
            w.flush()?;
        }
        Verb::Trace { scenario, out } => {
            let c = resolve(preset(&scenario)?, &scenario)?;
            c.validate()?;
            let sink = Shared::new(LineTrace::new(output(out.as_deref())?));
            let run = ScenarioBuilder::new(c.clone()).trace(Box::new(sink.clone())).run()?;
            let mut w = sink.into_inner().expect("run released the trace sink").finish()?;
            w.flush()?;
            let report = checked(run)?;
            write_text(&c, &report, &mut io::stderr().lock())?;
        }
        Verb::Sweep {
            experiment,
            scenario,
            seeds,
            values,
            protocols,
            out,
            plot_dir,
        } => {
            let name = scenario.preset.as_deref().unwrap_or("desk");
            let mut spec = SweepSpec::preset(name, experiment)
                .ok_or_else(|| Failure::Usage(format!("unknown preset {name:?} (expected full or desk)")))?;
            spec.base = resolve(spec.base, &scenario)?;
            spec.base.validate()?;
            if !seeds.is_empty() {
                spec.seeds = seeds;
            }
            if !values.is_empty() {
                spec.values = values;
            }
            if !protocols.is_empty() {
                spec.protocols = protocols;
            }
            let rows = run_sweep(&spec).map_err(Failure::Sweep)?;
            let mut w = output(out.as_deref())?;
            write_csv(&rows, &mut w).map_err(Failure::Sweep)?;
            w.flush()?;
            if let Some(dir) = plot_dir {
                for path in emit_plot_data(&rows, experiment, &dir).map_err(Failure::Sweep)? {
                    eprintln!("wrote {}", path.display());
                }
            }
        }
        Verb::Config { scenario } => {
            let c = resolve(preset(&scenario)?, &scenario)?;
            print!("{}", c.to_toml_string());
            c.validate()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream reader went away, e.g. `eelar trace | head`
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eelar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
