//! `mmhash` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. On success one
//! JSON line goes to stdout; diagnostics and epoch lines go to stderr.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Failure;

const USAGE: u8 = 1;
const RUNTIME: u8 = 2;

/// Applies DCMH_THREADS before any parallel work starts.
fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("DCMH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("DCMH_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth(_) => "synth",
        Command::Inject(_) => "inject",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Sweep(_) => "sweep",
        Command::Boxplot(_) => "boxplot",
        Command::Inspect(_) => "inspect",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Inject(a) => commands::inject(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Boxplot(a) => commands::boxplot(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(mut summary) => {
            let record = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "argv": std::env::args().collect::<Vec<_>>(),
                "flags": serde_json::to_value(&cli.command).unwrap_or(Value::Null),
                "threads": rayon::current_num_threads(),
            });
            if let Value::Object(map) = &mut summary {
                map.insert("command".into(), name(&cli.command).into());
                map.insert("ok".into(), true.into());
                map.insert("repro".into(), record);
            }
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME)
        }
    }
}
