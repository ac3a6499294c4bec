use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vos", version, about = "Variational denoising with vector-operator sparsity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise one image with one model.
    Denoise(DenoiseArgs),
    /// Run several models on the same input and tabulate their quality.
    Compare(CompareArgs),
    /// Run a parameter grid and write per-run records and histograms.
    Sweep(SweepArgs),
    /// Verify adjointness and the discrete conservation laws.
    CheckOps(CheckOpsArgs),
    /// Write a synthetic test image.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input image (PNG, PGM or a .vosf raw field).
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    /// Synthetic input: affine, plane, radial, saddle, product, harmonic.
    #[arg(long)]
    pub synth: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Ground truth for metrics; synthetic inputs are their own truth.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Variance of additive Gaussian noise applied before denoising.
    #[arg(long, default_value_t = 0.0)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Discretization {
    Conservative,
    Bredies,
    Both,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Preset name: tv, svf, cep, tgv, tgv-full, ictv, vos.
    #[arg(long, conflicts_with = "beta")]
    pub model: Option<String>,
    /// Squared weights b1,b2,b3,b4 on curl, div, sh1, sh2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Weight of the svf preset.
    #[arg(long)]
    pub svf_beta: Option<f64>,
    /// Symmetrised-gradient scheme for tgv (runs the direct TGV solver).
    #[arg(long, value_enum)]
    pub discretization: Option<Discretization>,
    #[arg(long, default_value = "denoised.png")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "8")]
    pub depth: Depth,
    /// Also write the exact result as a raw field.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Write the noisy input as a raw field.
    #[arg(long)]
    pub save_noisy: Option<PathBuf>,
    /// Iteration log as CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "tv,ictv,tgv,vos")]
    pub models: Vec<String>,
    /// Default regularisation weight.
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Per-model weights, e.g. tv=0.3,tgv=0.25.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<String>,
    /// Squared weights for the vos model.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long)]
    pub svf_beta: Option<f64>,
    #[arg(long, value_enum, default_value = "conservative")]
    pub discretization: Discretization,
    #[arg(long, default_value = "compare")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "8")]
    pub depth: Depth,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Ssim,
    Psnr,
    Rel,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    /// Values used for every beta_i unless overridden.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,2")]
    pub betas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub beta1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta3: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta4: Option<Vec<f64>>,
    #[arg(long, default_value = "sweep")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "ssim")]
    pub measure: MeasureArg,
    /// Histogram bins as lo:hi:count or as an explicit edge list.
    #[arg(long, default_value = "0:1:20")]
    pub bins: String,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Conservative,
    Bredies,
}

#[derive(Debug, Args)]
pub struct CheckOpsArgs {
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "conservative")]
    pub variant: Variant,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// affine, plane, radial, saddle, product or harmonic.
    #[arg(long, default_value = "affine")]
    pub kind: String,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synth.png")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "8")]
    pub depth: Depth,
    #[arg(long)]
    pub raw: Option<PathBuf>,
}
