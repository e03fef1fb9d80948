use std::process::ExitCode;

use clap::Parser;
use h2s_cli::commands::{configure_threads, execute, Cli, Status};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::UpToDate) => {
            log::info!("outputs are up to date; pass --force to recompute");
            ExitCode::SUCCESS
        }
        Ok(Status::NotConverged) => {
            eprintln!("warning: embedding did not converge; artifacts were written and flagged");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
