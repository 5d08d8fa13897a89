mod args;
mod config;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{resolve, Cli, Command};
use crate::error::{CliError, EXIT_USAGE};
use crate::run::{execute, Manifest};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();

    match dispatch(&cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: &Command, argv: Vec<String>) -> Result<(), CliError> {
    let cfg = match (command, resolve(command)) {
        (_, Some(cfg)) => cfg,
        (Command::Rerun(r), None) => {
            let mut cfg = Manifest::load(&r.manifest)?.config;
            if let Some(dir) = &r.out_dir {
                cfg.set_out_dir(dir.clone());
            }
            cfg
        }
        (_, None) => unreachable!("only rerun lacks its own configuration"),
    };
    let manifest = execute(&cfg, argv)?;
    log::info!(
        "{} finished; wrote {} files to {}",
        cfg.name(),
        manifest.outputs.len(),
        cfg.out_dir().display()
    );
    Ok(())
}
