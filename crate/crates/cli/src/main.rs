//! `urllc`: command-line front end for codes, bounds, decoder complexity,
//! Monte Carlo runs and the link-design optimizers.
//!
//! Exit status: 0 on success, 1 for bad flags or inputs, 2 when the design
//! problem has no feasible solution, 3 for any other failure.

mod args;
mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command, Format};
use output::{render_json, render_table, Output};
use urllc_core::sim::SimOptions;

/// Invalid flag values or combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_FAILURE: u8 = 3;

fn ci_mode() -> bool {
    std::env::var("CI").is_ok_and(|v| !v.is_empty() && v != "0" && v != "false")
}

fn format_of(cli: &Cli) -> Format {
    if cli.global.json {
        Format::Json
    } else if cli.global.csv {
        Format::Csv
    } else {
        cli.global.format.unwrap_or(Format::Table)
    }
}

fn sim_options(cli: &Cli) -> Result<SimOptions> {
    let seed = match cli.global.seed {
        Some(s) => s,
        None if ci_mode() => {
            return Err(UsageError("--seed is required when CI is set".into()).into())
        }
        None => 0,
    };
    let workers = match cli.global.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        w => w,
    };
    Ok(SimOptions::new(seed).with_workers(workers))
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Codes(c) => commands::codes(c),
        Command::Bounds(a) => commands::bounds(a),
        Command::Complexity(a) => commands::complexity(a),
        Command::Latency(a) => commands::latency(a),
        Command::MaxOrder(a) => commands::max_order_cmd(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Simulate(s) => {
            let opts = sim_options(cli)?;
            commands::simulate(s, &opts)
        }
    }
}

fn emit(out: &Output, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => render_json(&out.json),
        Format::Table => render_table(&out.json),
        Format::Csv => match &out.csv {
            Some(c) => c.clone(),
            None => return Err(UsageError("--csv is not available for this command".into()).into()),
        },
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<urllc_core::Error>() {
        Some(urllc_core::Error::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(
            urllc_core::Error::InvalidArgument(_)
            | urllc_core::Error::InvalidOrder(_)
            | urllc_core::Error::NoSuchCode { .. }
            | urllc_core::Error::InvalidCode(_)
            | urllc_core::Error::InvalidField(_)
            | urllc_core::Error::DimensionMismatch { .. },
        ) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let raw: Vec<_> = std::env::args_os().collect();
    let argv = match config::expand_args(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let format = format_of(&cli);
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&out, format) {
                eprintln!("error: {e:#}");
                return ExitCode::from(exit_code(&e));
            }
            if out.infeasible {
                ExitCode::from(EXIT_INFEASIBLE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_INFEASIBLE && format == Format::Json {
                let _ = emit(&Output::new(json!({"feasible": false, "reason": e.to_string()})), format);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
