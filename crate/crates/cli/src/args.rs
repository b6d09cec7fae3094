use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "seal", version, about = "Chebyshev/Laplace perturbation of numeric datasets and streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perturb a static CSV dataset and write the released copy.
    Perturb(PerturbArgs),
    /// Perturb rows as they arrive, releasing a block every `threshold` windows.
    Stream(StreamArgs),
    /// Attack-resistance and 1-NN utility of a perturbed dataset.
    Evaluate(EvaluateArgs),
    /// 1-NN accuracy across privacy budgets or window sizes.
    Sweep(SweepArgs),
    /// Time the perturbation on synthetic data at N and 2N rows.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CsvArgs {
    /// Class column: `auto`, `last`, `none`, or a 1-based column number.
    #[arg(long, default_value = "auto")]
    pub class_column: String,
    /// Field delimiter (a single character).
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// Input has no header row (none is written either).
    #[arg(long)]
    pub no_header: bool,
    /// Significant digits for emitted numbers.
    #[arg(long, default_value_t = 10)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Privacy budget; smaller means more noise.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Rows per fit window.
    #[arg(long, allow_negative_numbers = true)]
    pub window_size: i64,
    /// Master seed; omit for a non-reproducible run.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Input CSV path, or `-` for standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// `-` for standard output, an existing directory (or a path ending in
    /// `/`) for one file per block, or a file path.
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub window_size: i64,
    /// Windows per released block.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: i64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub perturbed: PathBuf,
    /// Comma-separated attacks to run: `ni`, `io`.
    #[arg(long, value_delimiter = ',')]
    pub attacks: Vec<String>,
    /// Also report cross-validated 1-NN accuracy on both files.
    #[arg(long)]
    pub knn: bool,
    /// Share of row pairs known to the input-output attacker.
    #[arg(long, default_value_t = seal::attacks::DEFAULT_KNOWN_FRACTION, allow_negative_numbers = true)]
    pub known_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write per-attribute standard deviations to this CSV.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated privacy budgets to sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub epsilons: Vec<f64>,
    /// Comma-separated window sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    pub window_sizes: Vec<usize>,
    /// Budget held fixed during a window-size sweep.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Window held fixed during a budget sweep (default: whole dataset).
    #[arg(long)]
    pub window_size: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the sweep as CSV.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub attrs: usize,
    #[arg(long, default_value_t = 10_000)]
    pub window_size: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
