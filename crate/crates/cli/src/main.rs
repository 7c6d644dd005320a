//! `ilw`: command-line driver. Exit codes: 0 pass, 1 usage, 2 numeric or
//! I/O failure, 3 verification failure.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use config::{Cli, FileConfig, RunConfig};
use error::CliError;
use output::{Metadata, Sink};

fn execute(cli: &Cli) -> Result<(bool, serde_json::Value), CliError> {
    let file = match &cli.flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let (cfg, out) = RunConfig::resolve(cli.command, &cli.flags, &file)?;
    let mut sink = Sink::new(&out, Metadata::new(&cfg))?;
    let report = commands::run(&cfg, &mut sink)?;
    let status = json!({
        "command": cfg.command.name(),
        "passed": report.passed,
        "config_hash": cfg.hash(),
        "out": out.display().to_string(),
        "files": sink.files,
        "summary": report.summary,
    });
    Ok((report.passed, status))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string())),
    };
    match execute(&cli) {
        Ok((passed, status)) => {
            let text = serde_json::to_string_pretty(&status).expect("status serializes");
            // a closed stdout (e.g. piped into `head`) is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => fail(&e),
    }
}
