//! `darsim`: command-line front end for the threshold-device resonance
//! toolkit.
//!
//! Every subcommand reads one JSON run configuration (overridable with
//! `--seed`, `--out`, `--format`), executes deterministically from the
//! resolved seed, writes machine-readable results into the output
//! directory, and echoes the fully resolved configuration inside its
//! summary so any run can be reproduced byte-for-byte from its own output.
//!
//! Exit codes: 0 on success, 2 for configuration/schema errors, 3 for
//! numeric/domain errors (an operating-region inequality or degenerate
//! input), 1 for i/o failures.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{CliResult, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "darsim", version, propagate_version = true)]
#[command(about = "Simulate and analyze threshold devices that restore \
                   sub-threshold signals with a carrier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration file.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Master seed, overriding the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config's `out_dir` and the
    /// DARSIM_OUT_DIR environment variable.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Tabular output format, overriding the config's `format`.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form level, timing, and region predictions as JSON.
    Predict(CommonArgs),
    /// Run the signal chain once; write the trace table and a summary
    /// comparing measured levels against the closed forms.
    Simulate(CommonArgs),
    /// Sweep the carrier amplitude; write per-amplitude transfer, region,
    /// and spectral SNR.
    Sweep(CommonArgs),
    /// Run simulated forced-choice staircase sessions; write the trial log
    /// and per-condition threshold modulations.
    Quest(CommonArgs),
    /// Paired permutation test and effect size for two columns of a CSV.
    Analyze(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Predict(a)
            | Command::Simulate(a)
            | Command::Sweep(a)
            | Command::Quest(a)
            | Command::Analyze(a) => a,
        }
    }
}

fn run(command: &Command) -> CliResult<()> {
    let args = command.args();
    let mut cfg =
        RunConfig::load(&args.config)?.resolve(args.seed, args.out.clone(), args.format);
    match command {
        Command::Predict(_) => commands::cmd_predict(&cfg),
        Command::Simulate(_) => commands::cmd_simulate(&cfg),
        Command::Sweep(_) => commands::cmd_sweep(&cfg),
        Command::Quest(_) => commands::cmd_quest(&mut cfg),
        Command::Analyze(_) => commands::cmd_analyze(&cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
