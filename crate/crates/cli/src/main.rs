mod bench;
mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use matcomp::error::ErrorClass;
use matcomp::{ConstantsConfig, McError, Profile};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "matcomp", version, about = "Low-rank matrix completion under adversarial noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance: truth.dmat, noise.dmat and meta.json.
    Synth(SynthArgs),
    /// Reveal entries of an instance (or any DMAT matrix) at rate p.
    Observe(ObserveArgs),
    /// Partial completion on a submatrix.
    Partial(PartialArgs),
    /// Recover dropped rows and columns of a partial completion.
    Fix(FixArgs),
    /// Completion with a known noise bound.
    Complete(CompleteArgs),
    /// Completion with an unknown noise level.
    CompleteAuto(CompleteAutoArgs),
    /// Check (α, β)-regularity of the span of a DMAT basis.
    CheckRegularity(RegularityArgs),
    /// Run a sweep grid of synthetic completions and write metrics.
    Bench(bench::BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Constants profile; the MC_PROFILE environment variable takes precedence.
    #[arg(long, default_value = "desk")]
    pub profile: Profile,
    /// Override a constant, as `name=value` with a JSON value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl CommonArgs {
    pub fn constants(&self) -> Result<ConstantsConfig, McError> {
        let profile = match std::env::var("MC_PROFILE") {
            Ok(v) if !v.is_empty() => v.parse::<Profile>().map_err(McError::Precondition)?,
            _ => self.profile,
        };
        ConstantsConfig::for_profile(profile)
            .with_overrides(self.overrides.iter().map(String::as_str))
            .map_err(McError::Precondition)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Standard,
    Spike,
    RcsError,
    DroppedRows,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub rstar: usize,
    /// Frobenius norm of the additive noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value = "standard")]
    pub kind: Kind,
    /// Spike size, or corrupted entry size for rcs-error.
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
    /// Nonzeros per corrupted column (rcs-error).
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Number of corrupted columns (rcs-error).
    #[arg(long, default_value_t = 1)]
    pub columns: usize,
    /// Number of garbage rows (dropped-rows).
    #[arg(long, default_value_t = 1)]
    pub rows: usize,
    /// Entry scale of the garbage rows (dropped-rows).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Args, Debug)]
pub struct ObserveArgs {
    /// Instance directory written by `synth`; entries of truth + noise are revealed.
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    pub instance: Option<PathBuf>,
    /// A DMAT matrix to reveal instead of an instance.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PartialArgs {
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub rstar: usize,
    /// Upper bound on the operator norm of the target.
    #[arg(long)]
    pub sigma: f64,
    /// Noise bound.
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    pub ell: f64,
    #[arg(long, default_value_t = 0.1)]
    pub fail_prob: f64,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Factorization output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FixArgs {
    #[arg(long)]
    pub obs: PathBuf,
    /// Factorization to repair.
    #[arg(long)]
    pub init: PathBuf,
    /// JSON with `kept_rows` and `kept_cols` (a `partial` report); full scope if absent.
    #[arg(long)]
    pub scope: Option<PathBuf>,
    #[arg(long)]
    pub rstar: usize,
    #[arg(long)]
    pub sigma: f64,
    /// Closeness of the iterate on the kept submatrix.
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Defaults to 3/α.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub fail_prob: f64,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompletionArgs {
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub rstar: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Defaults to 3/α.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub fail_prob: f64,
    /// Instance directory or DMAT file with the ground truth, for error reporting.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Bound on the Frobenius norm of the noise.
    #[arg(long)]
    pub delta_noise: f64,
    #[command(flatten)]
    pub run: CompletionArgs,
}

#[derive(Args, Debug)]
pub struct CompleteAutoArgs {
    /// Smallest noise level tried.
    #[arg(long)]
    pub delta_min: f64,
    #[command(flatten)]
    pub run: CompletionArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegMode {
    Exact,
    Sampled,
}

#[derive(Args, Debug)]
pub struct RegularityArgs {
    /// DMAT matrix whose columns span the subspace.
    #[arg(long)]
    pub basis: PathBuf,
    /// Orthonormalize the columns first.
    #[arg(long)]
    pub orthonormalize: bool,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "sampled")]
    pub mode: RegMode,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<McError>().map(McError::class) {
        Some(ErrorClass::Precondition) => 2,
        Some(ErrorClass::Algorithmic) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Observe(a) => commands::observe(&a),
        Command::Partial(a) => commands::partial(&a),
        Command::Fix(a) => commands::fix(&a),
        Command::Complete(a) => commands::complete(&a),
        Command::CompleteAuto(a) => commands::complete_auto(&a),
        Command::CheckRegularity(a) => commands::check_regularity(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
