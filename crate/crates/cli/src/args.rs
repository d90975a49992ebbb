use std::path::PathBuf;

use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand, ValueEnum};
use eelar_core::sweep::Experiment;
use eelar_core::{Protocol, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(
    name = "eelar",
    version,
    about = "MANET routing simulator: EELAR against LAR, AODV and DSR"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Run one scenario and print its metrics.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the metrics here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one scenario and emit its packet trace, one event per line.
    Trace {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write the trace here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment over protocols, parameter values and seeds.
    Sweep {
        /// overhead-vs-speed, delivery-vs-speed, overhead-vs-n, delivery-vs-n or overhead-vs-areas
        experiment: Experiment,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated seeds; the preset's when omitted.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Comma-separated values of the swept parameter.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated protocol names.
        #[arg(long, value_delimiter = ',')]
        protocols: Vec<Protocol>,
        /// Write the CSV here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write one two-column series file per protocol into this directory.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Print the fully resolved scenario configuration as TOML.
    Config {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

/// Where a scenario's settings come from, lowest precedence first:
/// preset, config file, `--set`, per-field flags.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Named starting point: `full` (1500 m, 100 nodes, 500 s) or `desk` (500 m, 25 nodes, 100 s).
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML file using the scenario field names; missing fields keep the preset's values.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override any field, e.g. `--set n_nodes=50`. Repeatable.
    #[arg(long = "set", value_name = "FIELD=VALUE", value_parser = parse_assignment)]
    pub assignments: Vec<(String, String)>,
    #[command(flatten)]
    pub fields: FieldFlags,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected FIELD=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// One `--<field> VALUE` flag per scenario field.
#[derive(Debug, Default)]
pub struct FieldFlags(pub Vec<(String, String)>);

impl FromArgMatches for FieldFlags {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut f = FieldFlags::default();
        f.update_from_arg_matches(m)?;
        Ok(f)
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        for name in ScenarioConfig::FIELDS {
            if let Some(v) = m.get_one::<String>(name) {
                self.0.push((name.to_string(), v.clone()));
            }
        }
        Ok(())
    }
}

impl Args for FieldFlags {
    fn augment_args(cmd: Command) -> Command {
        ScenarioConfig::FIELDS.iter().fold(cmd, |cmd, &name| {
            cmd.arg(
                Arg::new(name)
                    .long(name)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help_heading("Scenario fields"),
            )
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}
