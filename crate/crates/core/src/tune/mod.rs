//! Cross-validation schemes and Bayesian hyperparameter search.

mod bayes;
mod cv;
mod folds;
mod space;

use thiserror::Error;

pub use bayes::{bayes_optimize, BayesOptions, Trial, TuneResult};
pub use cv::{cross_validate, BoostTrainer, CvOutput, Objective, Trainer, TrainerError};
pub use folds::{make_folds, CvKind, CvScheme};
pub use space::{Param, Scale, SearchSpace};

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: TrainerError,
    },
    #[error("every objective evaluation failed")]
    AllFailed,
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

pub type Result<T> = std::result::Result<T, TuneError>;
