mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{parse_config, Format, Overrides};
use crate::error::{CliError, CliResult};
use crate::output::Reports;
use crate::validate::Status;

#[derive(Parser, Debug)]
#[command(name = "coldstandby", version, about = "Lifetime analysis of a cold-standby system with one repair device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo lifetimes: simulate.csv and simulate.json
    Simulate(RunArgs),
    /// Lifetime transforms on the configured s grid: lst.csv and lst.json
    Lst(RunArgs),
    /// Lifetime CDF by Laplace inversion: invert.csv and invert.json
    Invert(RunArgs),
    /// Fast-repair convergence sweep: sweep.csv, sweep.json and sweep.svg
    Sweep(RunArgs),
    /// Built-in oracle checks, printed as a table
    Validate(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory
    #[arg(long, env = "COLDSTANDBY_OUT")]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn run(command: Command) -> CliResult<()> {
    let (args, name) = match &command {
        Command::Simulate(a) => (a, "simulate"),
        Command::Lst(a) => (a, "lst"),
        Command::Invert(a) => (a, "invert"),
        Command::Sweep(a) => (a, "sweep"),
        Command::Validate(a) => (a, "validate"),
    };
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.apply(&Overrides {
        seed: args.seed,
        samples: args.samples,
        directory: args.out.clone(),
        formats: args.format.clone(),
    });
    let system = cfg.resolve()?;
    log::info!("{name}: resolved config {}", serde_json::to_string(&cfg).expect("config serializes"));

    let mut reports = Reports::new(&cfg);
    match command {
        Command::Simulate(_) => commands::simulate(&cfg, &system, &mut reports)?,
        Command::Lst(_) => commands::lst(&cfg, &system, &mut reports)?,
        Command::Invert(_) => commands::invert(&cfg, &system, &mut reports)?,
        Command::Sweep(_) => commands::sweep(&cfg, &system, &mut reports)?,
        Command::Validate(_) => {
            let checks = validate::run(&cfg, &system)?;
            print!("{}", validate::render(&checks));
            let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed { failed });
            }
        }
    }
    for path in reports.written() {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            let err = CliError::Parse(e.kind().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
