//! `hothand`: reproducible batch analytics over free-throw trip data.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or convergence error.

mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CommandError;
use config::Defaults;
use format::OutputFormat;
use hothand::classical::SeFormula;

#[derive(Parser)]
#[command(
    name = "hothand",
    version,
    about = "Free-throw trip analytics: classical tables, profile-mixture fitting, displacement models, smoothing, and simulation"
)]
struct Cli {
    /// Cap worker threads (default: logical cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeFormulaArg {
    Independent,
    Mcnemar,
}

impl From<SeFormulaArg> for SeFormula {
    fn from(arg: SeFormulaArg) -> Self {
        match arg {
            SeFormulaArg::Independent => SeFormula::Independent,
            SeFormulaArg::Mcnemar => SeFormula::McNemar,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in Celtics two-season dataset as event CSV.
    Celtics {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse and validate an event file; print dataset summary counts.
    IngestCheck {
        /// Event CSV path, or `-` for stdin.
        input: String,
    },
    /// Pairwise 1st/2nd-shot table (per player plus total, or pooled only).
    PairStats(PairStatsArgs),
    /// Trip-length breakdown (1, 2, 3+ shot trips and pooled totals).
    TripTable(TripTableArgs),
    /// First vs. second trip of 2+ shots within a game.
    RepeatTrips(RepeatTripsArgs),
    /// Recover raw 2x2 counts from rounded conditional percentages.
    RecoverGvt(RecoverGvtArgs),
    /// Fit the profile mixture by EM and write the model as JSON.
    FitModel1(FitModel1Args),
    /// Posterior profile weights and conditional expectations for one player.
    Posterior(PosteriorArgs),
    /// Trips needed for a target power of the conditional-difference test.
    Power(PowerArgs),
    /// Fit per-trip-index displacements and their prior covariance.
    FitModel2(FitModel2Args),
    /// Fit per-(trip-index, minute-bin) displacements under a fixed prior.
    FitModel3(FitModel3Args),
    /// Kalman-smooth binned displacement estimates into a plot-ready series.
    Smooth(SmoothArgs),
    /// Mahalanobis trend statistic between two bins of the smoothed series.
    Trends(TrendsArgs),
    /// Per-player serial-correlation statistics with weighted summaries.
    CorrStats(CorrStatsArgs),
    /// Generate a synthetic dataset in the event CSV format.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TripTableArgs {
    /// Event CSV path, or `-` for stdin.
    input: String,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PairStatsArgs {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Only the pooled row (all players combined).
    #[arg(long)]
    pooled: bool,
    #[arg(long, value_enum)]
    se_formula: Option<SeFormulaArg>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RepeatTripsArgs {
    /// Event CSV path, or `-` for stdin.
    input: String,
    #[arg(long, value_enum)]
    se_formula: Option<SeFormulaArg>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverGvtArgs {
    /// Summary CSV (label,n_miss1,n_hit1,pct_hit2_given_miss1,pct_hit2_given_hit1),
    /// or `-` for stdin. Blank percentages mean the condition never occurred.
    input: String,
    /// Decimal places of the published percentages.
    #[arg(long, default_value_t = 1)]
    precision: i32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FitModel1Args {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Number of mixture components.
    #[arg(long, default_value_t = 8)]
    components: usize,
    /// Fit each listed component count and report log-likelihood, AIC, BIC.
    #[arg(long)]
    select_m: Option<String>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Relative log-likelihood tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, default_value_t = 50)]
    inner_iters: usize,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    /// Model JSON destination (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PosteriorArgs {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Fitted model JSON from fit-model1.
    #[arg(long)]
    model: PathBuf,
    /// Player identifier to report.
    #[arg(long)]
    player: String,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct PowerArgs {
    /// Expected first-shot success probability under the null.
    #[arg(long)]
    base1: f64,
    /// Expected second-shot success probability under the null.
    #[arg(long)]
    base2: f64,
    /// Conditional difference under the alternative (probability points).
    #[arg(long, allow_hyphen_values = true)]
    gap: f64,
    /// One-sided rejection threshold on the standard score.
    #[arg(long, default_value_t = 2.0)]
    z: f64,
    /// Target power.
    #[arg(long, default_value_t = 0.5)]
    power: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated datasets per evaluated trip count.
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    /// Give up once the search passes this many trips.
    #[arg(long, default_value_t = 1 << 20)]
    cap: usize,
}

#[derive(Args)]
struct FitModel2Args {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Fitted model JSON from fit-model1.
    #[arg(long)]
    model: PathBuf,
    /// Top trip-index stratum; deeper trips pool into it.
    #[arg(long)]
    h_max: Option<u32>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, default_value_t = 40)]
    max_outer: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 80)]
    inner_iters: usize,
    /// Hold the prior covariance fixed at `s11,s12,s22` instead of fitting it.
    #[arg(long, allow_hyphen_values = true)]
    fixed_sigma: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitModel3Args {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Fitted model JSON from fit-model1.
    #[arg(long)]
    model: PathBuf,
    /// Fit JSON from fit-model2 (provides the displacement prior).
    #[arg(long)]
    model2: PathBuf,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, default_value_t = 40)]
    max_outer: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 80)]
    inner_iters: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    /// Binned estimates JSON from fit-model3.
    #[arg(long)]
    bins: PathBuf,
    /// Process noise: `auto` or a scalar for q * identity.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrendsArgs {
    /// Binned estimates JSON from fit-model3.
    #[arg(long)]
    bins: PathBuf,
    /// Process noise: `auto` or a scalar for q * identity.
    #[arg(long)]
    q: Option<String>,
    /// Trip-index stratum (1 = first trip of a game, 2 = later trips).
    #[arg(long)]
    stratum: u8,
    /// Starting bin of the trend.
    #[arg(long)]
    from: u8,
    /// Ending bin of the trend.
    #[arg(long)]
    to: u8,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct CorrStatsArgs {
    /// Event CSV path, or `-` for stdin.
    input: String,
    /// Optional fitted model JSON; adds the expected-value column.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    players: usize,
    /// Games per player.
    #[arg(long)]
    games: usize,
    /// Fixed count (`2`) or categorical spec (`1:0.3,2:0.5,3:0.2`).
    #[arg(long, default_value = "2")]
    trips_per_game: String,
    /// Fixed count or categorical spec over 1..=3.
    #[arg(long, default_value = "2")]
    shots_per_trip: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability a trip lands in overtime.
    #[arg(long, default_value_t = 0.0)]
    overtime_prob: f64,
    /// Mixture model JSON to draw profiles from.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Point-mass first-shot probability (with --p2, instead of --model).
    #[arg(long)]
    p1: Option<f64>,
    /// Point-mass second-shot probability.
    #[arg(long)]
    p2: Option<f64>,
    /// Fixed per-trip-index displacements, e.g. `-0.1,-0.1;0.1,0.1`.
    #[arg(long, allow_hyphen_values = true)]
    deltas: Option<String>,
    /// Draw per-trip-index displacements from N(0, `s11,s12,s22`).
    #[arg(long, allow_hyphen_values = true)]
    sigma_delta: Option<String>,
    /// Trip-index strata when drawing displacements.
    #[arg(long)]
    h_max: Option<u32>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let defaults = match Defaults::from_env() {
        Ok(d) => d,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(2);
        }
    };

    if let Some(threads) = cli.threads.or(defaults.threads) {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: configuring {threads} worker threads: {err}");
            return ExitCode::from(1);
        }
    }

    match commands::run(cli.command, &defaults) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CommandError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CommandError::Run(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
