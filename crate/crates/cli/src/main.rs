//! `intramix` command-line tool.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Run(a) => commands::run(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::SweepLambda(a) => commands::sweep_lambda(&a),
        Command::VerifyTheorems(a) => commands::verify_theorems(&a),
        Command::Madgap(a) => commands::madgap(&a),
        Command::NoiseAudit(a) => commands::noise_audit(&a),
        Command::Timing(a) => commands::timing(&a),
        Command::Train(a) => commands::train_only(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
