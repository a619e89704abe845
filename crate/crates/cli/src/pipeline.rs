//! Experiment pipeline shared by the subcommands.

use std::fmt;
use std::path::Path;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use mpap_core::boost::{BoostingConfig, Loss, Mode};
use mpap_core::cohort::{
    encode, impute, read_laws, read_patient_waveforms, select_feature_set, Cohort, FeatureGroup,
    Imputation,
};
use mpap_core::hemo::{physics_features, FitOptions, PhysicsFeatures};
use mpap_core::metrics::{
    confusion_at, paired_error_test, regression_metrics, roc_curve, select_threshold,
    ConfusionMetrics, RegressionMetrics, RocCurve, ThresholdStrategy, PH_THRESHOLD_MMHG,
};
use mpap_core::tune::{
    bayes_optimize, cross_validate, BayesOptions, BoostTrainer, CvKind, CvScheme, Objective,
    SearchSpace, TuneResult,
};
use mpap_core::{seed, Matrix};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Regression, Task::Classification];

    pub fn loss(self) -> Loss {
        match self {
            Task::Regression => Loss::SquaredError,
            Task::Classification => Loss::Logistic,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hyperparameter ranges to tune over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpacePreset {
    Default,
    /// Fewer and shallower trees; for quick sweeps on small machines.
    Compact,
}

impl SpacePreset {
    pub fn space(self, mode: Mode) -> SearchSpace {
        match self {
            SpacePreset::Default => SearchSpace::boosting(mode),
            SpacePreset::Compact => SearchSpace::boosting_compact(mode),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub mode: Mode,
    pub groups: Vec<FeatureGroup>,
    /// Scheme for the final out-of-fold evaluation.
    pub cv: CvKind,
    /// Scheme inside the tuning objective; defaults to 8-fold, stratified
    /// for classification.
    pub tune_cv: Option<CvKind>,
    pub budget: usize,
    pub space: SpacePreset,
    pub strategy: ThresholdStrategy,
    /// PH definition in mmHg.
    pub threshold: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(task: Task, mode: Mode) -> Self {
        ExperimentConfig {
            task,
            mode,
            groups: FeatureGroup::ALL.to_vec(),
            cv: CvKind::Loocv,
            tune_cv: None,
            budget: 200,
            space: SpacePreset::Default,
            strategy: ThresholdStrategy::F1,
            threshold: PH_THRESHOLD_MMHG,
            seed: DEFAULT_SEED,
        }
    }

    pub fn tuning_scheme(&self) -> CvKind {
        self.tune_cv.unwrap_or(match self.task {
            Task::Regression => CvKind::KFold(8),
            Task::Classification => CvKind::StratifiedKFold(8),
        })
    }
}

pub const DEFAULT_SEED: u64 = 2024;

/// Model inputs for one experiment.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Unscaled features of the selected groups.
    pub x: Matrix,
    pub columns: Vec<String>,
    pub mpap: Vec<f64>,
    pub labels: Vec<bool>,
    /// mPAP for regression, 0/1 labels for classification.
    pub targets: Vec<f64>,
}

/// Imputes, encodes and restricts the cohort to `groups`.
pub fn prepare(
    cohort: &Cohort,
    task: Task,
    groups: &[FeatureGroup],
    threshold: f64,
) -> Result<Dataset> {
    let imputed = impute(cohort, Imputation::LinearByRowOrder).map_err(|e| {
        CliError::from(e)
            .context("preparing features (run `mpap features` first if physics columns are empty)")
    })?;
    let (full, names) = encode(&imputed)?;
    let x = select_feature_set(&full, groups)?;
    let columns = mpap_core::cohort::group_columns(groups)
        .into_iter()
        .map(|j| names[j].clone())
        .collect();
    let mpap = imputed.targets();
    let labels = imputed.labels(threshold);
    let targets = match task {
        Task::Regression => mpap.clone(),
        Task::Classification => labels.iter().map(|&l| f64::from(u8::from(l))).collect(),
    };
    Ok(Dataset {
        x,
        columns,
        mpap,
        labels,
        targets,
    })
}

/// Bayesian search of the boosting hyperparameters against the tuning CV
/// objective (MSE or negated AUC).
pub fn tune(ds: &Dataset, cfg: &ExperimentConfig) -> Result<(TuneResult, BoostingConfig)> {
    let space = cfg.space.space(cfg.mode);
    let base = BoostingConfig::new(cfg.mode, cfg.task.loss());
    let scheme = CvScheme {
        kind: cfg.tuning_scheme(),
        seed: seed::derive(cfg.seed, "tune-cv"),
    };
    let objective = Objective::for_loss(cfg.task.loss());
    let train_seed = seed::derive(cfg.seed, "tune-train");
    if cfg.budget == 0 {
        return Err(CliError::usage("tuning budget must be at least 1"));
    }
    let defaults = BayesOptions::default();
    let opts = BayesOptions {
        budget: cfg.budget,
        initial: defaults.initial.min(cfg.budget),
        seed: seed::derive(cfg.seed, "tune"),
        ..defaults
    };
    let result = bayes_optimize(
        &space,
        |x| {
            let evaluated = space
                .apply(&base, x)
                .map_err(CliError::from)
                .and_then(|config| {
                    let trainer = BoostTrainer {
                        config,
                        seed: train_seed,
                    };
                    Ok(cross_validate(
                        &ds.x,
                        &ds.targets,
                        &scheme,
                        Some(&ds.labels),
                        &trainer,
                        objective,
                    )?)
                });
            match evaluated {
                Ok(out) => objective.to_minimize(out.objective),
                Err(e) => {
                    debug!("tuning point {x:?} failed: {e}");
                    f64::NAN
                }
            }
        },
        &opts,
    )?;
    let best = space.apply(&base, &result.best)?;
    Ok((result, best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub metrics: RegressionMetrics,
    /// Measured and predicted mPAP both thresholded at the PH definition.
    pub confusion: ConfusionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: ThresholdStrategy,
    /// Probability cut-off; `None` for the ±∞ sentinels.
    pub threshold: Option<f64>,
    pub confusion: ConfusionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub auc: f64,
    pub selected: ThresholdStrategy,
    pub strategies: Vec<StrategyReport>,
}

impl ClassificationReport {
    pub fn strategy(&self, s: ThresholdStrategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: Task,
    pub mode: Mode,
    pub groups: String,
    pub cv: String,
    pub tune_cv: String,
    pub budget: usize,
    pub space: SpacePreset,
    pub seed: u64,
    pub threshold_mmhg: f64,
    pub n_samples: usize,
    pub n_features: usize,
    pub best_config: BoostingConfig,
    /// Best tuning objective (MSE, or negated AUC).
    pub best_tuning_objective: f64,
    pub regression: Option<RegressionReport>,
    pub classification: Option<ClassificationReport>,
}

/// Everything a run produces; the report is the serialized part.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub tuning: TuneResult,
    /// Out-of-fold predictions (mmHg or probability).
    pub predictions: Vec<f64>,
    pub measured: Vec<f64>,
    pub labels: Vec<bool>,
    pub roc: Option<RocCurve>,
}

impl RunOutcome {
    /// Per-sample absolute errors: |mPAP error| for regression,
    /// |label − probability| for classification.
    pub fn abs_errors(&self) -> Vec<f64> {
        match self.report.task {
            Task::Regression => self
                .measured
                .iter()
                .zip(&self.predictions)
                .map(|(m, p)| (m - p).abs())
                .collect(),
            Task::Classification => self
                .labels
                .iter()
                .zip(&self.predictions)
                .map(|(&l, p)| (f64::from(u8::from(l)) - p).abs())
                .collect(),
        }
    }

    /// PH accuracy; for classification under the selected strategy.
    pub fn accuracy(&self) -> f64 {
        match (&self.report.regression, &self.report.classification) {
            (Some(r), _) => r.confusion.accuracy,
            (_, Some(c)) => c
                .strategy(c.selected)
                .map_or(f64::NAN, |s| s.confusion.accuracy),
            _ => f64::NAN,
        }
    }

    /// MAE for regression, AUC for classification.
    pub fn headline(&self) -> f64 {
        match (&self.report.regression, &self.report.classification) {
            (Some(r), _) => r.metrics.mae,
            (_, Some(c)) => c.auc,
            _ => f64::NAN,
        }
    }
}

/// Tunes, then evaluates the best configuration out of fold.
pub fn run_experiment(cohort: &Cohort, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let ds = prepare(cohort, cfg.task, &cfg.groups, cfg.threshold)?;
    let (tuning, best) = tune(&ds, cfg)?;
    let scheme = CvScheme {
        kind: cfg.cv,
        seed: seed::derive(cfg.seed, "cv"),
    };
    let trainer = BoostTrainer {
        config: best.clone(),
        seed: seed::derive(cfg.seed, "train"),
    };
    let objective = Objective::for_loss(cfg.task.loss());
    let out = cross_validate(
        &ds.x,
        &ds.targets,
        &scheme,
        Some(&ds.labels),
        &trainer,
        objective,
    )?;

    let (regression, classification, roc) = match cfg.task {
        Task::Regression => {
            let metrics = regression_metrics(&ds.mpap, &out.predictions)?;
            let confusion = confusion_at(&ds.mpap, &out.predictions, cfg.threshold)?;
            (Some(RegressionReport { metrics, confusion }), None, None)
        }
        Task::Classification => {
            let curve = roc_curve(&ds.labels, &out.predictions)?;
            let mut strategies = Vec::new();
            for s in ThresholdStrategy::ALL {
                let (t, confusion) = select_threshold(&curve, &ds.labels, &out.predictions, s)?;
                strategies.push(StrategyReport {
                    strategy: s,
                    threshold: t.is_finite().then_some(t),
                    confusion,
                });
            }
            let report = ClassificationReport {
                auc: curve.auc,
                selected: cfg.strategy,
                strategies,
            };
            (None, Some(report), Some(curve))
        }
    };
    let report = RunReport {
        task: cfg.task,
        mode: cfg.mode,
        groups: FeatureGroup::label(&cfg.groups),
        cv: cfg.cv.to_string(),
        tune_cv: cfg.tuning_scheme().to_string(),
        budget: cfg.budget,
        space: cfg.space,
        seed: cfg.seed,
        threshold_mmhg: cfg.threshold,
        n_samples: ds.x.n_rows(),
        n_features: ds.x.n_cols(),
        best_config: best,
        best_tuning_objective: tuning.best_objective,
        regression,
        classification,
    };
    Ok(RunOutcome {
        report,
        tuning,
        predictions: out.predictions,
        measured: ds.mpap,
        labels: ds.labels,
        roc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub task: Task,
    pub mode: Mode,
    pub groups: String,
    /// MAE (regression) or AUC (classification).
    pub metric: Option<f64>,
    /// PH accuracy: thresholded predictions for regression, the selected
    /// strategy for classification.
    pub accuracy: Option<f64>,
    /// Paired signed-rank p-value against the all-groups cell.
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub budget: usize,
    pub strategy: ThresholdStrategy,
    pub space: SpacePreset,
    pub cv: String,
    pub seed: u64,
    pub threshold_mmhg: f64,
    pub n_samples: usize,
    pub subsets: Vec<String>,
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    pub fn cell(&self, task: Task, mode: Mode, groups: &[FeatureGroup]) -> Option<&AblationCell> {
        let label = FeatureGroup::label(groups);
        self.cells
            .iter()
            .find(|c| c.task == task && c.mode == mode && c.groups == label)
    }
}

/// Every non-empty feature-group subset × mode × task, each cell tuned and
/// evaluated like [`run_experiment`] with the same seeds. A failing cell is
/// recorded and the sweep continues.
pub fn ablate(cohort: &Cohort, base: &ExperimentConfig) -> Result<AblationReport> {
    let subsets = FeatureGroup::subsets();
    let all = FeatureGroup::label(&FeatureGroup::ALL);
    let mut cells = Vec::new();
    for task in Task::ALL {
        for mode in Mode::ALL {
            let mut outcomes: Vec<(String, std::result::Result<RunOutcome, String>)> = Vec::new();
            for groups in &subsets {
                let cfg = ExperimentConfig {
                    task,
                    mode,
                    groups: groups.clone(),
                    ..base.clone()
                };
                let label = FeatureGroup::label(groups);
                let res = run_experiment(cohort, &cfg).map_err(|e| {
                    warn!("ablation cell {task}/{mode}/{label} failed: {e}");
                    e.to_string()
                });
                if let Ok(o) = &res {
                    info!("{task} {mode} {label}: {:.4}", o.headline());
                }
                outcomes.push((label, res));
            }
            let reference = outcomes
                .iter()
                .find(|(l, _)| *l == all)
                .and_then(|(_, r)| r.as_ref().ok())
                .map(RunOutcome::abs_errors);
            for (label, res) in outcomes {
                cells.push(match res {
                    Ok(o) => {
                        let errors = o.abs_errors();
                        let p_value = reference
                            .as_ref()
                            .and_then(|r| paired_error_test(&errors, r).ok());
                        AblationCell {
                            task,
                            mode,
                            groups: label,
                            metric: Some(o.headline()),
                            accuracy: Some(o.accuracy()),
                            p_value,
                            error: None,
                        }
                    }
                    Err(e) => AblationCell {
                        task,
                        mode,
                        groups: label,
                        metric: None,
                        accuracy: None,
                        p_value: None,
                        error: Some(e),
                    },
                });
            }
        }
    }
    Ok(AblationReport {
        budget: base.budget,
        strategy: base.strategy,
        space: base.space,
        cv: base.cv.to_string(),
        seed: base.seed,
        threshold_mmhg: base.threshold,
        n_samples: cohort.len(),
        subsets: subsets.iter().map(|s| FeatureGroup::label(s)).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFailure {
    pub patient: usize,
    pub message: String,
}

/// Recomputes the physics columns from `waveform_dir`. With
/// `skip_failures`, failing patients are dropped from the returned cohort;
/// otherwise the first failure is an error.
pub fn compute_features(
    cohort: &Cohort,
    waveform_dir: &Path,
    seed_value: u64,
    skip_failures: bool,
) -> Result<(Cohort, Vec<FeatureFailure>)> {
    let laws = read_laws(waveform_dir)?;
    if laws.len() != cohort.len() {
        return Err(CliError::data(anyhow::anyhow!(
            "{} tube laws for {} patients in {}",
            laws.len(),
            cohort.len(),
            waveform_dir.display()
        )));
    }
    let fit_seed = seed::derive(seed_value, "features");
    let mut features: Vec<Option<PhysicsFeatures>> = Vec::with_capacity(cohort.len());
    let mut failures = Vec::new();
    for (i, law) in laws.iter().enumerate() {
        let result = read_patient_waveforms(waveform_dir, i)
            .map_err(CliError::from)
            .and_then(|(flow, area)| {
                let opts = FitOptions {
                    seed: seed::derive_index(fit_seed, i as u64),
                    ..FitOptions::default()
                };
                physics_features(&flow, &area, law, &opts).map_err(CliError::from)
            });
        match result {
            Ok(f) => features.push(Some(f)),
            Err(e) => {
                let e = e.context(format!("patient {i}"));
                if !skip_failures {
                    return Err(e);
                }
                warn!("{e}");
                failures.push(FeatureFailure {
                    patient: i,
                    message: e.to_string(),
                });
                features.push(None);
            }
        }
    }
    let filled = cohort.with_physics_features(&features)?;
    let keep: Vec<usize> = (0..filled.len())
        .filter(|&i| features[i].is_some())
        .collect();
    let kept = filled.subset(&keep)?;
    Ok((kept, failures))
}
