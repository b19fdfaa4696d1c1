//! `bfree-lab`: the command-line front end over `bfree-core`.
//!
//! [`run`] parses arguments, resolves a [`RunConfig`], executes the
//! subcommand inside a thread pool of the requested size and writes the
//! report. Results never depend on the thread count.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;

pub use commands::execute;
pub use config::{Cli, Command, Format, RunConfig, SetSpec};
pub use output::{Report, Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bfree_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Executes `cfg` on a pool of `cfg.threads` workers.
pub fn execute_in_pool(cfg: &RunConfig) -> Result<Report, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(cfg))
}

/// The whole program; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_CONFIG
                }
            };
            return code;
        }
    };
    let cfg = match RunConfig::resolve(cli.command, &cli.options) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "bfree-lab: {e}");
            return EXIT_CONFIG;
        }
    };
    let started = Instant::now();
    let result = execute_in_pool(&cfg).and_then(|report| {
        output::emit(&cfg, &report, stdout)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            let _ = writeln!(
                stderr,
                "bfree-lab: {} finished in {:.2} s on {} thread(s)",
                cfg.command.name(),
                started.elapsed().as_secs_f64(),
                cfg.threads
            );
            if report.passed == Some(false) {
                let _ = writeln!(stderr, "bfree-lab: verification failed");
                EXIT_VERIFY_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "bfree-lab: {e}");
            EXIT_CONFIG
        }
    }
}
