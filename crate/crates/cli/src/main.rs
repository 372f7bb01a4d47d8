mod args;
mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Build(c) => commands::build(c),
        Command::Match(c) => commands::match_pair(c),
        Command::Retrieve(c) => commands::retrieve(c),
        Command::Codebook(c) => commands::codebook(c),
        Command::Embed(c) => commands::embed_dataset(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("arsrg: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("arsrg: invariant violation: internal error");
            ExitCode::from(4)
        }
    }
}
