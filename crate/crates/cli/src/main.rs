mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Machine-readable tag for the JSON error line.
pub(crate) fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<ecgweak::Error>())
        .map_or("cli", ecgweak::Error::kind)
}

fn report(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let exec = cli.exec();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a, exec),
        Command::Preprocess(a) => commands::preprocess(a, exec),
        Command::Label(a) => commands::label(a, exec),
        Command::Train(a) => commands::train_model(a, exec),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Active(a) => commands::active(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
