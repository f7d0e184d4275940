//! `capmeter` command-line front end. [`run`] parses arguments, applies an
//! optional JSON config file and dispatches to a subcommand; it returns the
//! process exit code listed in [`error::code`].

use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, FromArgMatches};

pub mod args;
mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod selftest;
pub mod summary;

use args::{Cli, Command};
use error::{code, CliError, CliResult};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "CAPMETER_THREADS";

/// Writes `bytes` to `path` via temp file and rename, creating parent
/// directories.
pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::write(&parent.display().to_string(), &e))?;
    }
    capmeter_core::fsio::write_atomic(path, bytes).map_err(|e| CliError::write(&path.display().to_string(), &e))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialize");
    v.push(b'\n');
    v
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::invalid(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    capmeter_core::exec::configure_threads(n);
    Ok(())
}

fn command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

/// Inserts config-file flags right after the subcommand name so that flags
/// given on the command line come later and win.
fn merge_config(cmd: &clap::Command, argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config::find_config(&argv) else {
        return Ok(argv);
    };
    let Some(sub) = argv.get(1).and_then(|s| cmd.find_subcommand(s.to_string_lossy().as_ref())) else {
        return Ok(argv);
    };
    let tokens = config::config_tokens(&path, sub)?;
    let mut out = argv[..2].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Measure(a) => commands::measure(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Compare(a) => commands::compare(a),
        Command::Lowerbound(a) => commands::lowerbound(a),
        Command::Cover(a) => commands::cover(a),
        Command::Selftest(a) => commands::selftest(a),
    }
}

fn try_run(argv: Vec<OsString>) -> CliResult<()> {
    configure_threads()?;
    let mut cmd = command();
    let argv = merge_config(&cmd, argv)?;
    let matches = match cmd.try_get_matches_from_mut(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(()),
                _ => Err(CliError::usage(String::new())),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::usage(e.to_string()))?;
    dispatch(cli)
}

/// Runs the tool on `argv` (including the program name) and returns the exit
/// code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match try_run(argv.into_iter().map(Into::into).collect()) {
        Ok(()) => code::OK,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }
}
