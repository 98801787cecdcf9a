//! Command-line front end for `qfall-core`.
//!
//! Scenarios: `table1`, `table2`, `arrival-sweep`, `evolve` and `oracle`.
//! Output is CSV, JSON or aligned text; the arrival sweep also writes an SVG
//! plot. Exit codes are 0 on success, 2 for usage errors, 3 when a numerical
//! procedure fails to converge and 4 for I/O failures.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use config::{resolve, RawConfig, RunConfig, ScenarioKind};
pub use error::{CliError, CliResult};
pub use plot::emit_plot;
pub use run::{build_artifacts, run};

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(config::OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Parses `cli`, merges the configuration file if one was given and validates.
pub fn configure(cli: &args::Cli, env_out_dir: Option<PathBuf>) -> CliResult<RunConfig> {
    let file = match &cli.global.config {
        Some(path) => config::load_config_file(path)?,
        None => RawConfig::default(),
    };
    resolve(cli.scenario(), cli.raw_config().overlay(file), env_out_dir)
}

/// Full program: returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return e.exit_code();
        }
    };
    let result = configure(&cli, env_out_dir()).and_then(|cfg| run(&cfg, stdout));
    match result {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(stderr, "wrote {}", p.display());
            }
            error::EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "qfall: {e}");
            e.exit_code()
        }
    }
}
