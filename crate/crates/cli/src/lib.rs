//! Command-line front end for `ose-core`: argument and config handling,
//! Matrix Market input, and JSON / CSV reports.

pub mod args;
pub mod config;
pub mod error;
pub mod mm;
pub mod report;
pub mod run;

use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::error::{CliError, CliResult};
use crate::report::{write_report, ReportEnvelope};

fn emit(bytes: &[u8], output: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => stdout.write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn run_parsed(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let output = cli.global.output.clone();
    if let Some(path) = &cli.replay {
        if cli.command.is_some() {
            let _ = writeln!(stderr, "error: --replay cannot be combined with a subcommand");
            return Ok(1);
        }
        let replayed = run::replay(path, cli.global.threads)?;
        let format = cli.global.format.unwrap_or(replayed.envelope.config.format);
        emit(&write_report(&replayed.envelope, format)?, output.as_deref(), stdout)?;
        return match replayed.matches {
            Some(false) => Err(CliError::Replay(format!(
                "payload of {} was not reproduced",
                path.display()
            ))),
            Some(true) => Ok(0),
            None => {
                let _ = writeln!(stderr, "note: timing payloads are not compared on replay");
                Ok(0)
            }
        };
    }
    let Some(command) = cli.command else {
        let _ = writeln!(stderr, "error: a subcommand or --replay is required; see `ose --help`");
        return Ok(1);
    };
    let config = args::resolve(&cli.global, command)?;
    let payload = run::execute(&config)?;
    let format = config.format;
    let envelope = ReportEnvelope::new(config, payload);
    emit(&write_report(&envelope, format)?, output.as_deref(), stdout)?;
    Ok(0)
}

/// Runs the tool on `argv` and returns the process exit code: 0 on success,
/// 1 for usage and parameter errors, 2 for numeric and rank failures.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match run_parsed(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub use config::RunConfig;
pub use report::Payload;
