//! Evaluation metrics: regression errors, confusion counts at a pressure
//! threshold, ROC analysis with threshold selection, and a paired
//! signed-rank test for comparing per-patient errors of two models.

mod classification;
mod regression;
mod report;
mod roc;
mod wilcoxon;

pub use classification::{
    confusion_at, confusion_from_labels, ConfusionMetrics, PH_THRESHOLD_MMHG,
};
pub use regression::{regression_metrics, RegressionMetrics};
pub use report::{write_roc_csv, write_scatter_csv};
pub use roc::{roc_curve, select_threshold, RocCurve, RocPoint, ThresholdStrategy};
pub use wilcoxon::{paired_error_test, signed_rank_statistic};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("{0}")]
    Undefined(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

pub(crate) fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(MetricsError::LengthMismatch(a, b))
    } else {
        Ok(())
    }
}
