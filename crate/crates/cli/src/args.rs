use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mpap_core::boost::Mode;
use mpap_core::cohort::FeatureGroup;
use mpap_core::metrics::ThresholdStrategy;
use mpap_core::tune::CvKind;

use crate::pipeline::{SpacePreset, Task, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "mpap",
    version,
    about = "Non-invasive mPAP estimation and PH classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with waveforms.
    Synth(SynthArgs),
    /// Compute the physics features from the waveforms.
    Features(FeaturesArgs),
    /// Tune the boosting hyperparameters.
    Tune(TuneArgs),
    /// Tune, then evaluate out of fold and write the reports.
    Run(RunArgs),
    /// Every feature-group subset × boosting mode × task.
    Ablate(AblateArgs),
    /// Print the tables of a finished run or ablation.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (cohort.csv and waveforms/).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 352)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Keep every cell observed.
    #[arg(long)]
    pub no_missing: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory holding cohort.csv and waveforms/.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Defaults to features.csv next to the cohort.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop patients whose features fail instead of aborting.
    #[arg(long)]
    pub skip_failures: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Cohort CSV, or a directory containing features.csv or cohort.csv.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = SpacePreset::Default)]
    pub space: SpacePreset,
    /// CV inside the tuning objective [default: kfold8, stratified8 for classification].
    #[arg(long)]
    pub tune_cv: Option<CvKind>,
    /// PH threshold, mmHg.
    #[arg(long, default_value_t = 25.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long)]
    pub mode: Mode,
    /// Comma-separated feature groups (demographics, physics, mri) or "all".
    #[arg(long, default_value = "all")]
    pub groups: Groups,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Final evaluation scheme: loocv, kfoldK or stratifiedK.
    #[arg(long, default_value = "loocv")]
    pub cv: CvKind,
    #[arg(long, default_value = "f1")]
    pub strategy: ThresholdStrategy,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value = "loocv")]
    pub cv: CvKind,
    /// Threshold strategy behind the classification accuracy column.
    #[arg(long, default_value = "f1")]
    pub strategy: ThresholdStrategy,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of `run` or `ablate`.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Groups(pub Vec<FeatureGroup>);

impl std::str::FromStr for Groups {
    type Err = mpap_core::cohort::CohortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureGroup::parse_list(s).map(Groups)
    }
}
