//! Experiment runner on top of the kernel mean embedding library: dataset
//! ingestion, seeded execution, and deterministic tabular output.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;

use std::time::Instant;

pub use config::{Cli, Command};
use error::CliResult;
use output::Manifest;

/// Executes a parsed invocation and writes `results.csv` plus
/// `manifest.json` into the output directory.
pub fn execute(cli: Cli) -> CliResult<std::path::PathBuf> {
    let cfg = config::ConfigFile::load(cli.config.as_deref())?;
    let common = config::resolve_common(cli.seed, cli.out, &cfg)?;
    let started = Instant::now();
    let (name, out) = match cli.command {
        Command::Estimate(args) => ("estimate", commands::run_estimate(args, &cfg, &common)?),
        Command::SynthGauss(args) => {
            ("synth-gauss", commands::run_synth_gauss(args, &cfg, &common)?)
        }
        Command::SynthT(args) => ("synth-t", commands::run_synth_t(args, &cfg, &common)?),
        Command::TwoSample(args) => {
            ("two-sample", commands::run_two_sample(args, &cfg, &common)?)
        }
        Command::Hsic(args) => ("hsic", commands::run_hsic(args, &cfg, &common)?),
        Command::Kde(args) => ("kde", commands::run_kde(args, &cfg, &common)?),
    };
    let manifest = Manifest {
        command: name.to_string(),
        seed: common.seed,
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: out.config_echo,
        summary: out.summary,
    };
    output::write_outputs(&common.out_dir, &out.table, &manifest)
}

/// Runs a parsed invocation, mapping failures to process exit codes:
/// 0 success, 1 runtime failure, 2 invalid configuration.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("run `kme --help` for usage");
            }
            e.exit_code()
        }
    }
}
