//! `qhermit` command line front end.

mod args;
mod commands;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser};

use args::{config_to_argv, Cli, Command};
use error::CliError;
use output::{manifest_path, to_json, write_atomic, Manifest};

fn parse() -> Result<Cli, clap::Error> {
    let cli = Cli::try_parse()?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    if cli.command.is_some() {
        return Err(Cli::command().error(clap::error::ErrorKind::ArgumentConflict, "--config replaces the subcommand and its flags"));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Cli::command().error(clap::error::ErrorKind::Io, format!("{}: {e}", path.display())))?;
    let argv = config_to_argv(&text).map_err(|m| Cli::command().error(clap::error::ErrorKind::InvalidValue, m))?;
    Cli::try_parse_from(argv)
}

fn run(cmd: &Command) -> Result<(), CliError> {
    let started = Instant::now();
    let outcome = match cmd {
        Command::Scan(a) => commands::scan(a),
        Command::Metric(a) => commands::metric(a, false),
        Command::Dyson(a) => commands::metric(a, true),
        Command::Evolve(a) => commands::evolve(a),
        Command::Ep(a) => commands::ep(a),
        Command::Jordan(a) => commands::jordan(a),
        Command::Expect(a) => commands::expect(a),
    }?;
    if let Some(first) = outcome.files.first() {
        let manifest = Manifest {
            command: cmd.name(),
            inputs: cmd,
            outputs: outcome.files.iter().map(|p| p.display().to_string()).collect(),
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        write_atomic(&manifest_path(first), &to_json(&manifest))?;
    }
    std::io::stdout()
        .write_all(outcome.stdout.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Some(cmd) = &cli.command else {
        let _ = Cli::command().print_help();
        return ExitCode::from(2);
    };
    match run(cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
