use std::process::ExitCode;

use clap::Parser;
use nh_sta_cli::config::OUT_ENV;
use nh_sta_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_out = std::env::var(OUT_ENV).ok();
    let outcome = run(&cli, env_out.as_deref());
    print!("{}", outcome.report);
    if let Some(e) = &outcome.failure {
        eprintln!("nh-sta {}: {e}", cli.command.name());
    }
    ExitCode::from(outcome.exit_code())
}
