use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphon_core::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "graphon-kit", version, about = "Sample W-random graphs, fit block models and measure graph distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a W-random graph and write it in .ssm form
    Sample(SampleArgs),
    /// Fit a block model to a graph
    Estimate(EstimateArgs),
    /// Distance between two matrices, a matrix and a graphon, or two block models
    Distance(DistanceArgs),
    /// Run an experiment described by a JSON config
    Experiment(ExperimentArgs),
    /// Analytic quantities of a graphon
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Graphon definition (JSON)
    #[arg(long)]
    graphon: PathBuf,
    /// Number of vertices
    #[arg(long)]
    n: usize,
    /// Target density ρ in (0, 1]
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output graph (.ssm); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the probability matrix Q (.ssm)
    #[arg(long)]
    emit_q: Option<PathBuf>,
    /// Also write the latent positions, one vertex per line
    #[arg(long)]
    emit_latent: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Ls,
    Cut,
    Degsort,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EstimateMode {
    Exact,
    Search,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Input graph (.ssm or dense text)
    #[arg(long = "in")]
    input: PathBuf,
    /// Minimum class fraction κ; degree sorting turns it into a class count
    #[arg(long, conflicts_with = "k", required_unless_present = "k")]
    kappa: Option<f64>,
    /// Number of classes; least squares and least cut use κ = 1/k
    #[arg(long)]
    k: Option<usize>,
    /// Ignored by degree sorting
    #[arg(long, value_enum, default_value_t = EstimateMode::Search)]
    mode: EstimateMode,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Cap on improving moves per restart
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model (JSON); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DistanceKind {
    /// ‖A − B‖_p
    Lp,
    /// ‖A − B‖_□
    Cut,
    /// min over relabelings of ‖A^σ − B‖_p
    HatLp,
    /// min over relabelings of ‖A^σ − B‖_□
    HatCut,
    /// min over relabelings of ‖W[A^σ] − W‖_p against --graphon
    LpVsGraphon,
    /// δ_p upper bound between two block models (JSON)
    DeltaStep,
    /// Lévy–Prokhorov distance between normalized degree distributions
    LpLevy,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DistanceMode {
    Exact,
    Heuristic,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(long, value_enum)]
    kind: DistanceKind,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = DistanceMode::Exact)]
    mode: DistanceMode,
    /// First matrix, or block model JSON for delta-step
    #[arg(long)]
    a: PathBuf,
    /// Second matrix, or block model JSON for delta-step
    #[arg(long)]
    b: Option<PathBuf>,
    /// Graphon definition (JSON) for lp-vs-graphon, or for lp-levy without --b
    #[arg(long)]
    graphon: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output field
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(subcommand)]
    op: OracleOp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    Sum,
    Product,
}

#[derive(Subcommand, Debug)]
enum OracleOp {
    /// Upper bound on the distance to the nearest block model with masses ≥ κ
    OracleError {
        /// Step graphon or block model (JSON)
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// ‖W − min{W, 1/ρ}‖_p by quadrature
    TailRho {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Rate exponents for a Hölder graphon
    HolderRates {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        alpha: f64,
        /// Moment exponent of the latent measure; required unless --compact
        #[arg(long, required_unless_present = "compact")]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Latent space is compact
        #[arg(long)]
        compact: bool,
        /// Latent measure is uniform
        #[arg(long)]
        uniform: bool,
    },
    /// Rate exponents for the power-law graphons
    PowerLawRates {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum)]
        variant: Variant,
    },
    /// Round a block model's masses to the grid (1/n)ℤ
    RoundToGrid {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kappa: f64,
    },
}

/// Failures outside the core library.
#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::Parameter(_) | Error::Mismatch(_) | Error::Parse { .. } | Error::Json(_) => 2,
                Error::Size { .. } => 3,
                Error::Domain(_) | Error::Integrability(_) | Error::Degenerate(_) | Error::Construction(_) => 4,
                Error::Io { .. } => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRAPHON_KIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("GRAPHON_KIT_THREADS must be a non-negative integer, got {raw:?}")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Distance(a) => commands::distance(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Oracle(a) => commands::oracle(a.op),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("graphon-kit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
