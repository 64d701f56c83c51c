mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use majorant_core::{Error, ErrorClass};

use crate::config::Format;

/// Optimal finite-size conversions between resource states.
#[derive(Debug, Parser)]
#[command(name = "majorant", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy, variance and resonance data of a distribution.
    Stats(StatsArgs),
    /// Optimal conversion of n copies of one distribution into m copies of another.
    Convert(ConvertArgs),
    /// Work quality or work fraction of an n-qubit heat engine over a temperature grid.
    HeatEngine(SweepArgs),
    /// Infidelity of two-species mixtures against a target, over n and the mixing fraction.
    LambdaSweep(SweepArgs),
    /// Largest conversion rate within an error budget, per initial state and n.
    RateSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Distribution as inline numbers (`0.6,0.4`) or a file of numbers.
    pub dist: String,
    /// Gibbs weights (inline or file); switches to the thermodynamic functionals.
    #[arg(long)]
    pub gibbs: Option<String>,
    /// Second distribution, same reference, for the asymptotic rate and nu.
    #[arg(long)]
    pub against: Option<String>,
    /// Resource theory: entanglement, coherence or thermodynamic.
    #[arg(long)]
    pub theory: Option<String>,
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// JSON conversion config; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial distribution (inline or file).
    #[arg(long)]
    pub initial: Option<String>,
    /// Target distribution (inline or file).
    #[arg(long)]
    pub target: Option<String>,
    /// Gibbs weights shared by initial and target.
    #[arg(long)]
    pub gibbs: Option<String>,
    /// Copies of the initial distribution.
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Copies of the target (default: n).
    #[arg(short, long)]
    pub m: Option<usize>,
    /// `mixing` (final state majorized by the initial) or `sharpening` (majorizing it).
    #[arg(long)]
    pub direction: Option<String>,
    /// Conversion solver: lorenz-envelope or frank-wolfe.
    #[arg(long)]
    pub solver: Option<String>,
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the atoms of the optimal final state to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output stem; writes <stem>.csv and <stem>.json (and <stem>.svg with --svg).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed to stdout when no --out is given.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also render an SVG heatmap (needs --out).
    #[arg(long)]
    pub svg: bool,
    /// Logarithmic color scale for the SVG heatmap.
    #[arg(long)]
    pub log_scale: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Conversion solver: lorenz-envelope or frank-wolfe.
    #[arg(long)]
    pub solver: Option<String>,
    /// Exit with an error if more than this fraction of cells failed.
    #[arg(long)]
    pub max_masked: Option<f64>,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// Too many failed cells; the outputs were still written.
    Masked {
        fraction: f64,
        limit: f64,
    },
    /// Interrupted; partial outputs were written.
    Interrupted,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Domain => 3,
                ErrorClass::Convergence => 4,
            },
            Failure::Masked { .. } => 3,
            Failure::Interrupted => 130,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Masked { fraction, limit } => {
                write!(
                    f,
                    "{:.2}% of cells failed, limit is {:.2}%",
                    100.0 * fraction,
                    100.0 * limit
                )
            }
            Failure::Interrupted => write!(f, "interrupted; partial results written"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Stats(a) => commands::stats(&a),
        Command::Convert(a) => commands::convert(&a),
        Command::HeatEngine(a) => commands::sweep("heat-engine", &a),
        Command::LambdaSweep(a) => commands::sweep("lambda-sweep", &a),
        Command::RateSweep(a) => commands::sweep("rate-sweep", &a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn help_documents_every_flag() {
        let mut cli = Cli::command();
        for sub in cli.get_subcommands_mut() {
            let help = sub.render_long_help().to_string();
            for arg in sub.get_arguments() {
                if let Some(long) = arg.get_long() {
                    assert!(
                        help.contains(&format!("--{long}")),
                        "{}: --{long}",
                        sub.get_name()
                    );
                }
                assert!(
                    arg.get_help().is_some(),
                    "{}: {}",
                    sub.get_name(),
                    arg.get_id()
                );
            }
        }
    }

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
