use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use swapsim_core::measure::BsmMode;
use swapsim_core::protocol::Ordering;

#[derive(Debug, Parser)]
#[command(name = "swapsim", version, about = "Delayed-choice entanglement swapping simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trials and write JSONL records plus a run manifest.
    Simulate(SimulateArgs),
    /// Compute a CHSH report from a record file.
    Analyze(AnalyzeArgs),
    /// Stage entanglement, CHSH summaries and correlation scans.
    Report(ReportArgs),
    /// Local hidden-variable models and discard rules.
    #[command(subcommand)]
    Classical(ClassicalCommand),
}

fn parse_angles(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad angle {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(parts).map_err(|v| format!("expected 4 comma-separated angles, got {}", v.len()))
}

fn parse_visibility(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("visibility {v} outside [0, 1]"))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderingArg {
    BsmFirst,
    PolFirst,
}

impl From<OrderingArg> for Ordering {
    fn from(o: OrderingArg) -> Self {
        match o {
            OrderingArg::BsmFirst => Ordering::BsmFirst,
            OrderingArg::PolFirst => Ordering::PolarizationsFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Full,
    Partial,
}

impl From<ModeArg> for BsmMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => BsmMode::Full,
            ModeArg::Partial => BsmMode::Partial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    None,
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
    Other,
    #[value(name = "m+")]
    MarkerPlus,
    #[value(name = "m-")]
    MarkerMinus,
}

/// Seed flag with the environment fallback.
#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Master seed; falls back to $SWAPSIM_SEED, then 0.
    #[arg(long, env = "SWAPSIM_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "bsm-first")]
    pub ordering: OrderingArg,
    #[arg(long = "bsm-mode", value_enum, default_value = "full")]
    pub bsm_mode: ModeArg,
    /// Analyzer angles a,a',b,b' in degrees.
    #[arg(long, value_parser = parse_angles, default_value = DEFAULT_ANGLES, allow_hyphen_values = true)]
    pub angles: [f64; 4],
    /// Source visibility in [0, 1].
    #[arg(long, value_parser = parse_visibility, default_value_t = 1.0)]
    pub visibility: f64,
}

/// Must agree with `CANONICAL_ANGLES`; checked by a unit test.
const DEFAULT_ANGLES: &str = "0,45,22.5,67.5";


#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "from_manifest")]
    pub trials: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output JSONL path; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: all cores). Never changes the output bytes.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long = "from-manifest", conflicts_with_all = ["trials", "seed", "ordering", "bsm_mode", "angles", "visibility"])]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub select: SelectArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Use closed-form tables instead of sampling.
    #[arg(long)]
    pub exact: bool,
    /// Emit E(0, delta) on a grid as CSV.
    #[arg(long)]
    pub scan: bool,
    #[arg(long = "scan-step", default_value_t = 7.5)]
    pub scan_step: f64,
    #[arg(long = "scan-max", default_value_t = 90.0)]
    pub scan_max: f64,
    /// Trials per sampled table (ignored with --exact).
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ClassicalCommand {
    /// Generate records from a hidden-variable model.
    Generate(GenerateArgs),
    /// Apply a discard rule to records and report CHSH on the survivors.
    Discard(DiscardArgs),
    /// Check settings-blind marker models against the local bound.
    BlindCheck(BlindCheckArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// sign, uniform, constant or random-fourier-<k>.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_parser = parse_angles, default_value = DEFAULT_ANGLES, allow_hyphen_values = true)]
    pub angles: [f64; 4],
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    PrBox,
    QuantumMimic,
}

#[derive(Debug, Args)]
pub struct DiscardArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub rule: RuleArg,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Angles a,a',b,b' the rule targets; read from the records when omitted.
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    pub angles: Option<[f64; 4]>,
    /// Report destination (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the kept records here.
    #[arg(long = "records-out")]
    pub records_out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BlindCheckArgs {
    #[arg(long, default_value_t = 20)]
    pub models: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_parser = parse_angles, default_value = DEFAULT_ANGLES, allow_hyphen_values = true)]
    pub angles: [f64; 4],
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}
