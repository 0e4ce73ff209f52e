mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn main() -> ExitCode {
    let raw: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let argv: Vec<String> = raw.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let expanded = match config::expand(raw) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(expanded) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    if let Command::Replay(r) = &cli.command {
        let old = RunManifest::load(&r.run)?;
        old.verify_inputs()?;
        if matches!(old.config, Command::Replay(_)) {
            return Err(CliError::Data("a manifest cannot replay a replay".into()));
        }
        let info = commands::execute(&old.config)?;
        let target = cli.manifest.clone().unwrap_or_else(|| r.run.clone());
        return RunManifest::new(old.argv.clone(), old.config.clone(), &info)?.save(&target);
    }

    let mut info = commands::execute(&cli.command)?;
    if let Some(cfg) = &cli.config {
        info.input(cfg);
    }
    let target = cli.manifest.clone().or_else(|| RunManifest::default_path(&info));
    if let Some(path) = target {
        RunManifest::new(argv, cli.command.clone(), &info)?.save(&path)?;
    }
    Ok(())
}
