use std::error::Error;

use super::{make_folds, CvScheme, Result, TuneError};
use crate::boost::{self, BoostingConfig, Loss};
use crate::cohort::Scaler;
use crate::metrics::roc_curve;
use crate::{seed, Matrix};

pub type TrainerError = Box<dyn Error + Send + Sync>;

/// Fits on one training fold and predicts its test rows.
pub trait Trainer {
    fn fit_predict(
        &self,
        train: &Matrix,
        targets: &[f64],
        test: &Matrix,
        fold: usize,
    ) -> std::result::Result<Vec<f64>, TrainerError>;
}

impl<F> Trainer for F
where
    F: Fn(&Matrix, &[f64], &Matrix, usize) -> std::result::Result<Vec<f64>, TrainerError>,
{
    fn fit_predict(
        &self,
        train: &Matrix,
        targets: &[f64],
        test: &Matrix,
        fold: usize,
    ) -> std::result::Result<Vec<f64>, TrainerError> {
        self(train, targets, test, fold)
    }
}

/// Boosting trainer; fold `f` trains with a seed derived from `(seed, f)`.
#[derive(Debug, Clone)]
pub struct BoostTrainer {
    pub config: BoostingConfig,
    pub seed: u64,
}

impl Trainer for BoostTrainer {
    fn fit_predict(
        &self,
        train: &Matrix,
        targets: &[f64],
        test: &Matrix,
        fold: usize,
    ) -> std::result::Result<Vec<f64>, TrainerError> {
        let model = boost::train(
            train,
            targets,
            &self.config,
            seed::derive_index(self.seed, fold as u64),
        )?;
        Ok(boost::predict(&model, test)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Mean squared error of the out-of-fold predictions.
    Mse,
    /// ROC AUC of out-of-fold scores against `target >= 0.5`.
    Auc,
}

impl Objective {
    pub fn for_loss(loss: Loss) -> Self {
        match loss {
            Loss::SquaredError => Objective::Mse,
            Loss::Logistic => Objective::Auc,
        }
    }

    /// Value as a quantity to minimize.
    pub fn to_minimize(self, value: f64) -> f64 {
        match self {
            Objective::Mse => value,
            Objective::Auc => -value,
        }
    }

    pub fn evaluate(self, targets: &[f64], predictions: &[f64]) -> Result<f64> {
        match self {
            Objective::Mse => {
                if targets.is_empty() || targets.len() != predictions.len() {
                    return Err(TuneError::Config(
                        "MSE needs equal non-empty vectors".into(),
                    ));
                }
                let n = targets.len() as f64;
                Ok(targets
                    .iter()
                    .zip(predictions)
                    .map(|(t, p)| (t - p).powi(2))
                    .sum::<f64>()
                    / n)
            }
            Objective::Auc => {
                let labels: Vec<bool> = targets.iter().map(|&t| t >= 0.5).collect();
                Ok(roc_curve(&labels, predictions)?.auc)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutput {
    /// Out-of-fold prediction of every sample, in input order.
    pub predictions: Vec<f64>,
    pub objective: f64,
    pub folds: Vec<Vec<usize>>,
}

/// Out-of-fold predictions under `scheme`. Columns are standardized with a
/// scaler fitted on each training fold alone. `strata` feeds stratified
/// schemes and defaults to `target >= 0.5`.
pub fn cross_validate<T: Trainer + ?Sized>(
    matrix: &Matrix,
    targets: &[f64],
    scheme: &CvScheme,
    strata: Option<&[bool]>,
    trainer: &T,
    objective: Objective,
) -> Result<CvOutput> {
    let n = matrix.n_rows();
    if targets.len() != n {
        return Err(TuneError::Config(format!(
            "{} targets for {n} rows",
            targets.len()
        )));
    }
    let default_strata: Vec<bool>;
    let strata = match strata {
        Some(s) => Some(s),
        None if scheme.is_stratified() => {
            default_strata = targets.iter().map(|&t| t >= 0.5).collect();
            Some(default_strata.as_slice())
        }
        None => None,
    };
    let folds = make_folds(n, strata, scheme)?;
    let mut predictions = vec![f64::NAN; n];
    let mut in_test = vec![false; n];
    for (f, test_idx) in folds.iter().enumerate() {
        in_test.iter_mut().for_each(|v| *v = false);
        for &i in test_idx {
            in_test[i] = true;
        }
        let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        if train_idx.is_empty() {
            return Err(TuneError::Fold {
                fold: f,
                source: "training fold is empty".into(),
            });
        }
        let train = matrix.select_rows(&train_idx);
        let test = matrix.select_rows(test_idx);
        let scaler = Scaler::fit(&train);
        let y: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
        let pred = trainer
            .fit_predict(&scaler.apply(&train), &y, &scaler.apply(&test), f)
            .map_err(|source| TuneError::Fold { fold: f, source })?;
        if pred.len() != test_idx.len() {
            return Err(TuneError::Fold {
                fold: f,
                source: format!("{} predictions for {} rows", pred.len(), test_idx.len()).into(),
            });
        }
        for (&i, p) in test_idx.iter().zip(pred) {
            predictions[i] = p;
        }
    }
    let value = objective.evaluate(targets, &predictions)?;
    Ok(CvOutput {
        predictions,
        objective: value,
        folds,
    })
}
