//! `spherevar`: variances of errors on spheres from the command line.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use report::Format;
use spherevar_core::quadrature::QuadratureConfig;
use spherevar_core::Error;

/// Seed used when neither `--seed` nor the environment variable is set.
pub const DEFAULT_SEED: u64 = 12345;

#[derive(Debug, Parser)]
#[command(name = "spherevar", version, about = "Variances of errors modeled as random points on spheres")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Random seed for every sampling subcommand.
    #[arg(long, global = true, env = "SPHEREVAR_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Starting quadrature nodes per axis (doubled until converged).
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Node budget per axis; refinement past it reports non-convergence.
    #[arg(long, global = true)]
    pub max_nodes: Option<usize>,
    /// Relative gap between refinement levels that counts as converged.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Timing and diagnostics on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance of one density: closed form where known, and quadrature.
    Variance(SpecArg),
    /// Density and variance of the sum of two isotropic (or circle) errors.
    Convolve(PairArgs),
    /// Variance of a non-isotropic error plus an isotropic one, by reduced quadrature.
    SumGeneral(SumGeneralArgs),
    /// Accumulated variance after k independent steps.
    Accumulate(AccumulateArgs),
    /// Per-step variance keeping k accumulated steps below a target.
    Threshold(ThresholdArgs),
    /// Predicted interval for the variance of a sum, by input cell.
    Classify(ClassifyArgs),
    /// Seeded sample of error points (CSV: x0..xd).
    Sample(SampleArgs),
    /// Monte Carlo variance of a sum against the variance-sum law.
    SimulateSum(SimulateArgs),
    /// Exact check of the double-factorial identity and the tree counts behind it.
    VerifyIdentities(IdentityArgs),
    /// Cos-power pairs: sum variance by quadrature against the exact rational.
    VerifyLemma(LemmaArgs),
    /// Density matrix, quantum variance and fidelity bounds of a sampled law.
    Quantum(QuantumArgs),
    /// Accumulation curves for the reference per-step variances (CSV: k,sigma,variance).
    Figure2(CurveArgs),
    /// The worked S^7 example: two variances and the variance of their sum.
    ReproduceExample,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Density spec: a JSON file path or inline JSON.
    #[arg(long)]
    pub spec: String,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// First summand (file path or inline JSON).
    #[arg(long)]
    pub first: String,
    /// Second summand (file path or inline JSON).
    #[arg(long)]
    pub second: String,
    /// Points in the output density table.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct SumGeneralArgs {
    /// Isotropic first summand, handled by the general route; default is the S^7 example density.
    #[arg(long)]
    pub first: Option<String>,
    /// Isotropic second summand; default is the degree-1 cos-power density on S^7.
    #[arg(long)]
    pub second: Option<String>,
}

#[derive(Debug, Args)]
pub struct AccumulateArgs {
    /// Equal per-step variance.
    #[arg(long, conflicts_with = "sigmas", required_unless_present = "sigmas")]
    pub sigma: Option<f64>,
    /// Number of steps (with --sigma).
    #[arg(long, requires = "sigma")]
    pub k: Option<usize>,
    /// Comma-separated per-step variances.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Emit the running variance after every step.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Largest acceptable accumulated variance.
    #[arg(long)]
    pub sigma_max: f64,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub v1: f64,
    #[arg(long)]
    pub v2: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, short, default_value_t = 1000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// First summand; omit both summands for the S^7 example pair.
    #[arg(long, requires = "second")]
    pub first: Option<String>,
    #[arg(long, requires = "first")]
    pub second: Option<String>,
    #[arg(long, short, default_value_t = 100_000)]
    pub n: usize,
    /// Orientation of the second error at the first point.
    #[arg(long, value_enum, default_value = "canonical")]
    pub completion: CompletionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CompletionArg {
    Canonical,
    Random,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 8)]
    pub max_ab: u32,
    #[arg(long, default_value_t = 9)]
    pub max_d: usize,
    /// Largest tree size (edges) to enumerate.
    #[arg(long, default_value_t = 6)]
    pub max_tree: usize,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Largest cos-power degree in the sweep.
    #[arg(long, default_value_t = 7)]
    pub max_k: u32,
    /// Sphere dimensions in the sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 7])]
    pub dims: Vec<usize>,
    /// Largest accepted gap to the exact value.
    #[arg(long, default_value_t = 1e-8)]
    pub max_gap: f64,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, short, default_value_t = 100_000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Comma-separated per-step variances.
    #[arg(long, value_delimiter = ',', default_values_t = spherevar_core::calculus::CURVE_SIGMAS)]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = spherevar_core::calculus::CURVE_K_MAX)]
    pub k_max: usize,
}

impl Cli {
    /// Quadrature settings with the `--nodes` / `--tolerance` overrides applied.
    pub fn quadrature(&self, base: QuadratureConfig) -> QuadratureConfig {
        let mut cfg = base;
        if let Some(n) = self.nodes {
            cfg.nodes = n;
            cfg.panels = if n % base.panels == 0 { base.panels } else { 1 };
            cfg.max_nodes = cfg.max_nodes.max(n * 4);
        }
        if let Some(m) = self.max_nodes {
            cfg.max_nodes = m;
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        cfg
    }
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::NonConvergence { .. }) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let outcome = commands::run(&cli).and_then(|report| {
        report
            .write(cli.format, cli.output.as_deref())
            .map_err(|e| Failure::Io(format!("cannot write output: {e}")))?;
        Ok(report.violation)
    });
    if cli.verbose > 0 {
        eprintln!("finished in {:.3} s", start.elapsed().as_secs_f64());
    }
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: a checked identity or bound does not hold (see report)");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
