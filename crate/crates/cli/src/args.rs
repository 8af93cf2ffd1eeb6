use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use greedvmaf::greed::GreedConfig;
use greedvmaf::media::{FrameRate, PixelFormat};
use greedvmaf::regression::KernelKind;

#[derive(Debug, Parser)]
#[command(name = "greedvmaf", version, about = "GREED-VMAF video quality features, training and evaluation")]
pub struct Cli {
    /// Worker threads for extraction and experiment iterations (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the 21 features for one reference/distorted pair.
    Features(FeaturesArgs),
    /// Train a quality model from a manifest.
    Train(TrainArgs),
    /// Score one pair, or every row of a manifest, with a trained model.
    Predict(PredictArgs),
    /// Run the repeated split protocol and report correlations.
    Evaluate(EvaluateArgs),
    /// Mean luma PSNR of a pair.
    Psnr(PairArgs),
}

/// Geometry for headerless `.yuv` inputs; ignored for `.y4m`.
#[derive(Debug, Clone, Args)]
pub struct RawArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// ffmpeg pixel format name, e.g. yuv420p or yuv420p10le.
    #[arg(long = "pix-fmt", default_value = "yuv420p")]
    pub pix_fmt: PixelFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractionArgs {
    /// Comma-separated downscale exponents.
    #[arg(long, value_delimiter = ',', default_value = "4,5")]
    pub scales: Vec<u32>,
    #[arg(long = "patch-size", default_value_t = 5)]
    pub patch_size: usize,
    /// Variance of the additive noise channel.
    #[arg(long = "noise-variance", default_value_t = 0.1)]
    pub noise_variance: f64,
    #[arg(long = "ms-window", default_value_t = 7)]
    pub ms_window: usize,
    /// Directory for cached feature rows.
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
    #[command(flatten)]
    pub raw: RawArgs,
}

impl ExtractionArgs {
    pub fn greed_config(&self) -> GreedConfig {
        GreedConfig {
            scales: self.scales.clone(),
            patch_size: self.patch_size,
            noise_variance: self.noise_variance,
            ms_window: self.ms_window,
            ..GreedConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub dist: PathBuf,
    /// Frame rate of a raw reference.
    #[arg(long = "fps-ref")]
    pub fps_ref: Option<FrameRate>,
    /// Frame rate of a raw distorted video.
    #[arg(long = "fps-dist")]
    pub fps_dist: Option<FrameRate>,
    #[command(flatten)]
    pub raw: RawArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long = "fps-ref")]
    pub fps_ref: Option<FrameRate>,
    #[arg(long = "fps-dist")]
    pub fps_dist: Option<FrameRate>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write per-frame mean temporal entropies to this CSV.
    #[arg(long = "dump-entropies")]
    pub dump_entropies: Option<PathBuf>,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "linear")]
    pub kernel: KernelKind,
    /// Skip the search and use this C (with --epsilon and, for rbf, --gamma).
    #[arg(long = "C", alias = "c")]
    pub c: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Train/validation content fractions used for the hyperparameter search.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.2")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "ref", required_unless_present = "manifest", requires = "dist")]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub dist: Option<PathBuf>,
    #[arg(long = "fps-ref")]
    pub fps_ref: Option<FrameRate>,
    #[arg(long = "fps-dist")]
    pub fps_dist: Option<FrameRate>,
    /// Score every row of this manifest, one line per row.
    #[arg(long, conflicts_with = "reference")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Train/val/test (or train/test) content fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.15,0.15")]
    pub fractions: Vec<f64>,
    /// Enumerate every train/test combination instead of random splits.
    #[arg(long = "all-splits")]
    pub all_splits: bool,
    #[arg(long = "train-fraction", default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Add a per-frame-rate breakdown of the test sets.
    #[arg(long = "by-fps")]
    pub by_fps: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
}
