use std::process::ExitCode;

use clap::Parser;
use gskor_cli::{configure_threads, run, Cli, Status};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::AssertionsFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
