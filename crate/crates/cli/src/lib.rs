//! Command-line front end for `shapemix-core`: synthetic data, fitting,
//! density grids, certificates and an oracle self-check.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod synth;

pub use args::{Command, RunConfig};
pub use error::CliError;

/// Runs one subcommand and returns the process exit code.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    match &config.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit(a),
        Command::Density(a) => commands::density(a),
        Command::KwCert(a) => commands::kw_cert(a),
        Command::BenchOracle(a) => commands::bench_oracle(a),
    }
}
