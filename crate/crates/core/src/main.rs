use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mommix::cli::{
    cmd_fit, cmd_simulate, parse_delimiter, parse_list, parse_scenarios, threads_from_env, FitEstimator, FitOptions,
    OutputFormat, SimulateOptions,
};
use mommix::simulation::Estimator;
use mommix::Error;

#[derive(Parser)]
#[command(name = "mommix", version, about = "Moment-based mixture of regressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a delimited file with a header row
    Fit(FitArgs),
    /// Run a Monte Carlo study over the built-in scenarios
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input file
    csv: PathBuf,
    #[arg(long)]
    response: String,
    /// Comma-separated covariate columns
    #[arg(long)]
    covariates: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// moment, em or ols
    #[arg(long, default_value = "moment")]
    estimator: String,
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// text, json or csv
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for EM restarts
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario names (comma-separated) or `all`
    #[arg(long, default_value = "gaussian_mixture")]
    scenario: String,
    /// Comma-separated sample sizes
    #[arg(long, default_value = "300,500,800,1000,1500,2000,3000")]
    n: String,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Comma-separated estimators: moment, em
    #[arg(long, alias = "estimator", default_value = "moment")]
    estimators: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for report.csv, report.json and replicates.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(a) => {
            let options = FitOptions {
                csv_path: a.csv,
                response: a.response,
                covariates: parse_list(&a.covariates).expect("string parsing is infallible"),
                level: a.level,
                estimator: a.estimator.parse::<FitEstimator>()?,
                delimiter: parse_delimiter(&a.delimiter)?,
                seed: a.seed,
            };
            let format: OutputFormat = a.format.parse()?;
            let report = cmd_fit(&options)?;
            let rendered = report.render(format)?;
            match a.out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Simulate(a) => {
            let options = SimulateOptions {
                scenarios: parse_scenarios(&a.scenario)?,
                n_list: parse_list(&a.n).map_err(|e| Error::InvalidInput(format!("--n: {e}")))?,
                p: a.p,
                beta: a.beta,
                replicates: a.replicates,
                level: a.level,
                estimators: parse_list::<Estimator>(&a.estimators)?,
                base_seed: a.seed,
                out: a.out,
                threads: threads_from_env()?,
            };
            let (study, table) = cmd_simulate(&options)?;
            print!("{table}");
            let failures: usize = study.report.cells.iter().map(|c| c.failures).sum();
            if failures > 0 {
                eprintln!("warning: {failures} failed fits excluded from the aggregates");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
