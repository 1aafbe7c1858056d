//! Library side of the `pqk` binary: argument types, run configuration,
//! command implementations and report encoders.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use config::{Cli, Command, RunConfig};
pub use error::CliError;
pub use report::Report;

/// Resolves, executes and writes one command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = RunConfig::resolve(&cli.command)?;
    let report = commands::execute(&config)?;

    if let Some(min_slack) = report.extra_meta.get("min_slack") {
        eprintln!("{}: min slack {}", config.bound.name(), min_slack);
    }

    match &config.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            report.write(config.format, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            report.write(config.format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
