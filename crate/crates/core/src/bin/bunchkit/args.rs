use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bunchkit::bunching::DEFAULT_GRID;
use bunchkit::fitting::{FitConfig, GammaMode, ScaleMode};
use bunchkit::income::DEFAULT_XI_TOLERANCE;
use bunchkit::numerics::DEFAULT_XTOL;

/// Seed used by the Monte Carlo check unless overridden.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "bunchkit",
    version,
    about = "Bunching order in the restricted Beta family and GB2 income fits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate x*, the density crossings, and verify the bunching pattern.
    Compare(CompareArgs),
    /// Fit a GB2 distribution to each year of a grouped income CSV.
    Fit(FitArgs),
    /// Fit every year and emit the a / Gini trend table.
    Trend(TrendArgs),
    /// Tabulate x*(n) over a range of n.
    Xstar(XstarArgs),
    /// Tabulate F_a(1/2) over a range of a.
    Conjecture(ConjectureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long)]
    pub a1: f64,
    #[arg(long)]
    pub a2: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_XTOL)]
    pub xtol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleChoice {
    FixedMedian,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaChoice {
    FixedOne,
    Free,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    /// Grouped CSV: year,bin_lower_kusd,bin_upper_kusd,percent[,median_kusd].
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ScaleChoice::FixedMedian, conflicts_with = "scale")]
    pub scale_mode: ScaleChoice,
    /// Fix the GB2 scale at this value (kUSD) for every year.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = GammaChoice::FixedOne)]
    pub gamma_mode: GammaChoice,
}

impl FitFlags {
    pub fn config(&self) -> FitConfig {
        let scale_mode = match (self.scale, self.scale_mode) {
            (Some(b), _) => ScaleMode::Provided(b),
            (None, ScaleChoice::FixedMedian) => ScaleMode::FixedMedian,
            (None, ScaleChoice::Free) => ScaleMode::Free,
        };
        let gamma_mode = match self.gamma_mode {
            GammaChoice::FixedOne => GammaMode::FixedOne,
            GammaChoice::Free => GammaMode::Free,
        };
        FitConfig {
            scale_mode,
            gamma_mode,
            start: None,
        }
    }

    pub fn scale_label(&self) -> String {
        match (self.scale, self.scale_mode) {
            (Some(b), _) => format!("provided({b})"),
            (None, ScaleChoice::FixedMedian) => "fixed-median".into(),
            (None, ScaleChoice::Free) => "free".into(),
        }
    }

    pub fn gamma_label(&self) -> &'static str {
        match self.gamma_mode {
            GammaChoice::FixedOne => "fixed-one",
            GammaChoice::Free => "free",
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub fit: FitFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    #[command(flatten)]
    pub fit: FitFlags,
    /// Optional `year,gini` CSV of published Gini values.
    #[arg(long)]
    pub gini: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_XI_TOLERANCE)]
    pub xi_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the trend CSV here; the summary then goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct XstarArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// `lo:hi:step`, inclusive.
    #[arg(long, value_parser = parse_range)]
    pub n_range: Range,
    #[arg(long)]
    pub a1: f64,
    #[arg(long)]
    pub a2: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub m: f64,
    /// `lo:hi:step`, inclusive.
    #[arg(long, value_parser = parse_range)]
    pub a_range: Range,
    /// Add a Gamma Monte Carlo estimate per row with this many samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Monte Carlo seed; takes precedence over BUNCHKIT_SEED.
    #[arg(long, requires = "mc_samples")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// `lo:hi:step` grid: `lo + k step` for every `k` with the point at most half
/// a step beyond `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub text: String,
    pub values: Vec<f64>,
}

const MAX_RANGE_POINTS: usize = 1_000_000;

pub fn parse_range(text: &str) -> Result<Range, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {text:?}"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("{s:?} is not a number"))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("{s:?} is not finite"))
                }
            })
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step <= 0.0 {
        return Err(format!("step must be positive, got {step}"));
    }
    if hi < lo {
        return Err(format!("range end {hi} is below its start {lo}"));
    }
    let last = ((hi - lo) / step + 0.5).floor();
    if last >= MAX_RANGE_POINTS as f64 {
        return Err(format!("range has more than {MAX_RANGE_POINTS} points"));
    }
    let values = (0..=last as usize).map(|k| lo + k as f64 * step).collect();
    Ok(Range {
        text: text.to_string(),
        values,
    })
}
