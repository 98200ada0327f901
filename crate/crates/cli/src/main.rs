//! `specden`: command-line front end for the spectral density laboratory.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use specden::Error;

#[derive(Parser, Debug)]
#[command(name = "specden", version, about = "Spectral density estimation laboratory")]
pub struct Cli {
    /// Base seed; every random quantity derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a hard-instance graph as an edge list.
    Gen(GenArgs),
    /// Exact spectrum of a graph file, a hard-instance pair or a ring.
    Spectrum(SpectrumArgs),
    /// Exact or walk-estimated moments.
    Moments(MomentsArgs),
    /// Moment-matching reconstruction from given moments.
    Reconstruct(ReconstructArgs),
    /// Walk-based spectral density estimation of a graph.
    Sde(SdeArgs),
    /// Difference spectrum of two graphs sharing a degree vector.
    Diff(DiffArgs),
    /// Lazy-labelling coupling experiment.
    Couple(CoupleArgs),
    /// Distinguishing games: loop detector, adaptive probe, marbles.
    Distinguish(DistinguishArgs),
    /// Chebyshev witness pair and its lower bound.
    Cheb(ChebArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantArg {
    Mom,
    Rw,
    Mixture,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhichArg {
    G1,
    G2,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub ell: usize,
    /// Cycle scale; defaults to the variant's standard size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mixture weight, required for `mixture`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum)]
    pub which: WhichArg,
    /// Apply a uniformly random vertex relabelling drawn from the seed.
    #[arg(long)]
    pub relabel: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Edge-list file; its dense spectrum is computed.
    #[arg(long, conflicts_with_all = ["variant", "cycle"])]
    pub graph: Option<PathBuf>,
    /// Closed-form spectra of a hard-instance pair.
    #[arg(long, value_enum, requires = "ell")]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Which graph of the pair to write; both are compared in the report.
    #[arg(long, value_enum, default_value = "g1")]
    pub which: WhichArg,
    /// Spectrum of the cycle of this length.
    #[arg(long, conflicts_with = "variant")]
    pub cycle: Option<usize>,
    /// CSV output (`value,mass`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[arg(long, conflicts_with = "spectrum", required_unless_present = "spectrum")]
    pub graph: Option<PathBuf>,
    /// Spectrum CSV; moments are integrated exactly.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    /// Estimate from this many walks per moment instead of exactly.
    #[arg(long, requires = "graph")]
    pub walks: Option<u64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightsArg {
    Uniform,
    Geometric,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Comma-separated `m_1,…,m_k`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "from")]
    pub moments: Vec<f64>,
    /// Report written by `moments --json`; its measured moments are used.
    #[arg(long, conflicts_with = "moments")]
    pub from: Option<PathBuf>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hi: f64,
    /// Grid points; defaults to 4k + 1.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform")]
    pub weights: WeightsArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SdeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Constant in `k = ⌈c/ε⌉`.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    /// Cap on total walks; the estimate is truncated when it binds.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Fail with exit code 3 instead of truncating.
    #[arg(long, requires = "budget")]
    pub strict: bool,
    #[arg(long, value_enum, default_value = "uniform")]
    pub weights: WeightsArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiffArgs {
    /// First graph; with `--g2` absent the built-in 4-vertex pair is used.
    #[arg(long, requires = "g2")]
    pub g1: Option<PathBuf>,
    #[arg(long, requires = "g1")]
    pub g2: Option<PathBuf>,
    #[arg(long, default_value_t = 4, conflicts_with = "eps")]
    pub k: usize,
    #[arg(long, default_value_t = 0.05, conflicts_with = "eps")]
    pub theta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Use the theorem's `k` and `θ` for this target accuracy.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Constant `C` of the theorem parameters.
    #[arg(long = "C", default_value_t = 1.0, requires = "eps")]
    pub big_c: f64,
    #[arg(long, default_value_t = specden::diff::DEFAULT_DIFF_BUDGET)]
    pub budget: u64,
    /// Only compute the exact difference spectrum by dense eigensolve.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CoupleArgs {
    #[arg(long)]
    pub ell: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "T")]
    pub t: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameArg {
    Loop,
    Probe,
    Marble,
}

#[derive(Args, Debug)]
pub struct DistinguishArgs {
    #[arg(long, value_enum)]
    pub game: GameArg,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Walks per transcript (loop game).
    #[arg(long)]
    pub m: Option<usize>,
    /// Steps per walk (loop game).
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// One-step walks per vertex probe (probe game).
    #[arg(long, default_value_t = 64)]
    pub reps: usize,
    /// Games played (loop and probe).
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    /// Red fraction (marble game).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Marbles drawn (marble game).
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub replacement: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChebArgs {
    #[arg(long)]
    pub ell: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetArg {
    Quick,
    Full,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub budget: BudgetArg,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_)
        | Error::BudgetExceeded { .. }
        | Error::SizeGuard { .. }
        | Error::Asymmetric(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
