use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use convsim_core::ArchKind;

#[derive(Debug, Parser)]
#[command(
    name = "convsim",
    version,
    about = "Cycle-accurate streaming convolution simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a PGM image through one architecture and check it against the reference.
    Filter(FilterArgs),
    /// Run every compatible architecture on one image and tabulate the results.
    Compare(CompareArgs),
    /// Rank architectures against a frame-time budget.
    Explore(ExploreArgs),
    /// Add seeded Gaussian noise to a PGM image.
    Noise(NoiseArgs),
    /// Print the PSNR between two PGM images.
    Psnr(PsnrArgs),
    /// Write a Gaussian kernel file.
    GenKernel(GenKernelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Separable Gaussian of odd SIZE and standard deviation SIGMA.
    #[arg(
        long,
        num_args = 2,
        value_names = ["SIZE", "SIGMA"],
        conflicts_with = "kernel",
        required_unless_present = "kernel"
    )]
    pub gaussian: Option<Vec<String>>,
    /// Kernel file: the size on the first line, then one row of real coefficients per line.
    #[arg(long, value_name = "FILE")]
    pub kernel: Option<PathBuf>,
    /// Fractional bits of the quantized coefficients.
    #[arg(long, default_value_t = 8)]
    pub frac_bits: u32,
    /// Total bits of the quantized coefficients.
    #[arg(long, default_value_t = 16)]
    pub total_bits: u32,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub arch: ArchKind,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub clock_mhz: f64,
    /// Write a per-cycle signal trace as CSV.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Clean image to measure PSNR against.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Write plain (P2) instead of raw (P5) PGM.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub clock_mhz: f64,
    /// Treat the input as clean, filter a noisy copy and report PSNR against it.
    #[arg(long, value_name = "VARIANCE")]
    pub noise_variance: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value_t = 100.0)]
    pub clock_mhz: f64,
    #[arg(long, default_value_t = 33.0)]
    pub budget_ms: f64,
    /// Largest acceptable multiplier count.
    #[arg(long)]
    pub max_mult: Option<u32>,
    /// Kernel size.
    #[arg(long, default_value_t = 5)]
    pub size: usize,
    #[arg(long, default_value_t = 8)]
    pub frac_bits: u32,
    #[arg(long, default_value_t = 16)]
    pub total_bits: u32,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Noise variance on the [0, 1] intensity scale.
    #[arg(long)]
    pub variance: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PsnrArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenKernelArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub sigma: f64,
    /// Output path; stdout when absent.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}
