//! Exact-split gradient boosting with GBDT, DART and GOSS training modes.
//!
//! Trees are grown depth-first on second-order statistics: a split is scored
//! by `G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)` and leaves take the value
//! `−G/(H+λ)`. Every candidate threshold between distinct feature values is
//! enumerated; there is no histogram binning.

mod ensemble;
mod loss;
mod sampling;
mod tree;

pub use ensemble::{predict, predict_margin, train, Ensemble, WeightedTree, FORMAT_VERSION};
pub use loss::{loss_gradients, sigmoid, Loss};
pub use sampling::{dart_drop, dart_drop_capped, goss_sample, DartDrop};
pub use tree::{build_tree, TreeNode};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("model format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, BoostError>;

/// Boosting variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gbdt,
    Dart,
    Goss,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Goss, Mode::Gbdt, Mode::Dart];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gbdt => "gbdt",
            Mode::Dart => "dart",
            Mode::Goss => "goss",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = BoostError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gbdt" => Ok(Mode::Gbdt),
            "dart" => Ok(Mode::Dart),
            "goss" => Ok(Mode::Goss),
            other => Err(BoostError::Config(format!(
                "unknown boosting mode `{other}`"
            ))),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingConfig {
    pub mode: Mode,
    pub loss: Loss,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    /// Fraction of features offered to each tree.
    pub feature_fraction: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// DART: per-tree drop probability.
    pub drop_rate: f64,
    /// DART: cap on dropped trees per round, 0 for no cap.
    pub max_dropped: usize,
    /// GOSS: fraction of largest-gradient samples kept.
    pub top_rate: f64,
    /// GOSS: fraction of the remaining samples drawn at random.
    pub other_rate: f64,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        BoostingConfig {
            mode: Mode::Gbdt,
            loss: Loss::SquaredError,
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 1,
            min_gain: 0.0,
            feature_fraction: 1.0,
            lambda: 1.0,
            drop_rate: 0.1,
            max_dropped: 0,
            top_rate: 0.2,
            other_rate: 0.1,
        }
    }
}

impl BoostingConfig {
    pub fn new(mode: Mode, loss: Loss) -> Self {
        BoostingConfig {
            mode,
            loss,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BoostError::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            ));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        if !(self.min_gain >= 0.0 && self.min_gain.is_finite()) {
            return bad(format!(
                "min_gain must be non-negative, got {}",
                self.min_gain
            ));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!(
                "feature_fraction must be in (0, 1], got {}",
                self.feature_fraction
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return bad(format!(
                "drop_rate must be in [0, 1], got {}",
                self.drop_rate
            ));
        }
        check_goss_rates(self.top_rate, self.other_rate)?;
        if self.mode == Mode::Goss && self.top_rate + self.other_rate <= 0.0 {
            return bad("GOSS needs top_rate + other_rate > 0".into());
        }
        Ok(())
    }
}

pub(crate) fn check_goss_rates(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && b >= 0.0 && a <= 1.0 && b <= 1.0) {
        return Err(BoostError::Config(format!(
            "GOSS rates must be non-negative, got a={a}, b={b}"
        )));
    }
    if a + b > 1.0 + 1e-12 {
        return Err(BoostError::Config(format!(
            "GOSS needs a + b <= 1, got a={a}, b={b}"
        )));
    }
    Ok(())
}
