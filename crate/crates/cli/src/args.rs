//! Command-line definitions.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use treeseg::eval::harness::{BaselineOptions, Method, SweepParam};
use treeseg::pipeline::PipelineConfig;

use crate::config::{load_config_file, parse_marker_policy, CONFIG_ENV};

#[derive(Parser, Debug)]
#[command(name = "treeseg", version, about = "Segment trees photographed against a colored panel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment every PNG/JPEG in a directory (or a single file).
    Segment(SegmentArgs),
    /// Score all methods against name-matched ground-truth masks.
    Evaluate(EvaluateArgs),
    /// Mean scores of the pipeline over a grid of one parameter.
    Sweep(SweepArgs),
    /// Write the synthetic corpus with its ground truth.
    Synth(SynthArgs),
}

/// Pipeline parameters; flags override the config file, which overrides the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Minimum white fraction for a background superpixel.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Minimum component area kept by the mask step.
    #[arg(long = "eps-area")]
    pub eps_area: Option<usize>,
    /// Density threshold below which a pixel is foreground.
    #[arg(long)]
    pub pt: Option<f64>,
    /// Number of mixture components.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed of the mixture initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `zero` or `marker:<0-255>` for pixels outside the mask.
    #[arg(long = "marker-policy")]
    pub marker_policy: Option<String>,
}

impl ConfigArgs {
    /// Effective configuration and a description of where it came from.
    pub fn resolve(&self) -> Result<(PipelineConfig, String)> {
        let mut source = String::from("defaults");
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg = load_config_file(path, cfg)?;
            source.push_str(&format!(" + file {}", path.display()));
        }
        let mut flags = Vec::new();
        if let Some(v) = self.zeta {
            cfg.zeta = v;
            flags.push("zeta");
        }
        if let Some(v) = self.eps_area {
            cfg.min_area = v;
            flags.push("eps-area");
        }
        if let Some(v) = self.pt {
            cfg.pt = v;
            flags.push("pt");
        }
        if let Some(v) = self.k {
            cfg.k = v;
            flags.push("k");
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
            flags.push("seed");
        }
        if let Some(v) = &self.marker_policy {
            cfg.mask_policy = parse_marker_policy(v)?;
            flags.push("marker-policy");
        }
        if !flags.is_empty() {
            source.push_str(&format!(" + flags {}", flags.join(",")));
        }
        cfg.validate()?;
        Ok((cfg, source))
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Agt,
    Amt,
    Otsu,
}

impl From<BaselineKind> for Method {
    fn from(b: BaselineKind) -> Method {
        match b {
            BaselineKind::Agt => Method::Agt,
            BaselineKind::Amt => Method::Amt,
            BaselineKind::Otsu => Method::Otsu,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct BaselineArgs {
    /// Run a thresholding baseline instead of the pipeline.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineKind>,
    /// Skip the mask step for baselines.
    #[arg(long = "no-mask")]
    pub no_mask: bool,
    /// Threshold grayscale intensity instead of hue for baselines.
    #[arg(long)]
    pub gray: bool,
}

impl BaselineArgs {
    pub fn options(&self) -> BaselineOptions {
        BaselineOptions { gray: self.gray, no_mask: self.no_mask, ..BaselineOptions::default() }
    }
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    /// Input directory or image file.
    pub input: PathBuf,
    /// Output directory.
    pub output: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    /// Worker threads (default: one per hardware thread).
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl SegmentArgs {
    pub fn method_name(&self) -> Result<String> {
        let b = &self.baseline;
        let Some(kind) = b.baseline else {
            if b.no_mask || b.gray {
                bail!("--no-mask and --gray apply only with --baseline");
            }
            return Ok("ours".into());
        };
        let mut s = Method::from(kind).name().to_lowercase();
        if b.no_mask {
            s.push_str("+no-mask");
        }
        if b.gray {
            s.push_str("+gray");
        }
        Ok(s)
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Directory of input images.
    pub images: PathBuf,
    /// Directory of ground-truth masks named `<image stem>.png`.
    pub truth: PathBuf,
    /// Directory for comparison.csv and comparison.txt.
    pub output: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Skip the mask step for the baselines.
    #[arg(long = "no-mask")]
    pub no_mask: bool,
    /// Threshold grayscale intensity instead of hue for baselines.
    #[arg(long)]
    pub gray: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Pt,
    K,
}

impl From<SweepKind> for SweepParam {
    fn from(k: SweepKind) -> SweepParam {
        match k {
            SweepKind::Pt => SweepParam::Pt,
            SweepKind::K => SweepParam::K,
        }
    }
}

pub const DEFAULT_PT_GRID: [f64; 5] = [0.001, 0.002, 0.003, 0.005, 0.01];
pub const DEFAULT_K_GRID: [f64; 3] = [3.0, 10.0, 20.0];

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub images: PathBuf,
    pub truth: PathBuf,
    /// Directory for sweep_<param>.csv.
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "pt")]
    pub param: SweepKind,
    /// Comma-separated values (default depends on --param).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl SweepArgs {
    pub fn grid(&self) -> Vec<f64> {
        match (self.grid.is_empty(), self.param) {
            (false, _) => self.grid.clone(),
            (true, SweepKind::Pt) => DEFAULT_PT_GRID.to_vec(),
            (true, SweepKind::K) => DEFAULT_K_GRID.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory; receives images/ and truth/.
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of scenes; scene parameters repeat after the twelfth.
    #[arg(long, default_value_t = 12)]
    pub count: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
}
