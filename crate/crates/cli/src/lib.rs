//! Command-line front end for `spde-lab`: one subcommand per experiment,
//! configured by a TOML file plus `--set section.key=value` overrides.
//!
//! Every command prints its JSON summary and writes `<out>/summary.json`;
//! `simulate`, `mc` and `compare` also write `<out>/series.csv`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
mod error;

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "spde-lab", version, about = "Stochastic reaction–diffusion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one key, e.g. `--set time.dt=1e-5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Directory for summary.json and series.csv.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Monte Carlo worker threads; 0 uses every core.
    #[arg(long, global = true, env = "SPDE_LAB_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic and discrete principal eigenvalue.
    Eig,
    /// Every applicable blow-up, positivity and existence criterion.
    Check,
    /// Upper bound on the blow-up time of the comparison moment.
    Bound,
    /// One sample path.
    Simulate,
    /// Monte Carlo ensemble statistics.
    Mc,
    /// Ensemble moments against the comparison solution.
    Compare,
}

/// Loads and validates the configuration, then runs the command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Eig => commands::eig(&config),
        Command::Check => commands::check(&config),
        Command::Bound => commands::bound(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Mc => commands::mc(&config, cli.workers),
        Command::Compare => commands::compare(&config, cli.workers),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes `summary.json` and, when present, `series.csv` under `out`.
pub fn write_outputs(out: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(io_error(out))?;
    let summary_path = out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&outcome.summary).expect("JSON value serializes");
    text.push('\n');
    std::fs::write(&summary_path, text).map_err(io_error(&summary_path))?;
    if let Some(series) = &outcome.series {
        let series_path = out.join("series.csv");
        std::fs::write(&series_path, series).map_err(io_error(&series_path))?;
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli).and_then(|outcome| {
        write_outputs(&cli.out, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let text = serde_json::to_string_pretty(&outcome.summary).expect("JSON value serializes");
            match writeln!(lock, "{text}") {
                Ok(()) => 0,
                Err(_) => 1,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
