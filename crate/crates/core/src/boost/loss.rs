use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BoostError, Result};

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `(pred − y)² / 2`, for mPAP regression.
    SquaredError,
    /// Binary cross-entropy on the logit, for PH classification.
    Logistic,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::SquaredError => "squared_error",
            Loss::Logistic => "logistic",
        }
    }

    /// Per-sample loss value at a raw prediction (margin).
    pub fn value(self, target: f64, pred: f64) -> f64 {
        match self {
            Loss::SquaredError => 0.5 * (pred - target).powi(2),
            // log(1 + e^pred) − y·pred, evaluated without overflow.
            Loss::Logistic => {
                let softplus = if pred > 0.0 {
                    pred + (-pred).exp().ln_1p()
                } else {
                    pred.exp().ln_1p()
                };
                softplus - target * pred
            }
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = BoostError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_error" | "mse" | "l2" => Ok(Loss::SquaredError),
            "logistic" | "binary" => Ok(Loss::Logistic),
            other => Err(BoostError::Config(format!("unknown loss `{other}`"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// First and second derivatives of the loss with respect to the raw
/// prediction.
pub fn loss_gradients(
    loss: Loss,
    targets: &[f64],
    predictions: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if targets.len() != predictions.len() {
        return Err(BoostError::Data(format!(
            "{} targets vs {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    let mut g = Vec::with_capacity(targets.len());
    let mut h = Vec::with_capacity(targets.len());
    fill_gradients(loss, targets, predictions, &mut g, &mut h);
    Ok((g, h))
}

pub(crate) fn fill_gradients(
    loss: Loss,
    targets: &[f64],
    predictions: &[f64],
    g: &mut Vec<f64>,
    h: &mut Vec<f64>,
) {
    g.clear();
    h.clear();
    match loss {
        Loss::SquaredError => {
            g.extend(predictions.iter().zip(targets).map(|(p, y)| p - y));
            h.resize(targets.len(), 1.0);
        }
        Loss::Logistic => {
            for (&pred, &y) in predictions.iter().zip(targets) {
                let p = sigmoid(pred);
                g.push(p - y);
                h.push(p * (1.0 - p));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_error_vanishes_at_target() {
        let y = [1.0, -2.0, 3.5];
        let (g, h) = loss_gradients(Loss::SquaredError, &y, &y).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert_eq!(h, vec![1.0; 3]);
    }

    #[test]
    fn logistic_at_zero_margin() {
        let (g, h) = loss_gradients(Loss::Logistic, &[1.0], &[0.0]).unwrap();
        assert_eq!(g, vec![-0.5]);
        assert_eq!(h, vec![0.25]);
    }

    #[test]
    fn unknown_tag_and_length_mismatch() {
        assert!(matches!(
            "hinge".parse::<Loss>(),
            Err(BoostError::Config(_))
        ));
        assert!(loss_gradients(Loss::Logistic, &[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn logistic_value_is_stable_for_large_margins() {
        assert!((Loss::Logistic.value(1.0, 800.0)).abs() < 1e-12);
        assert!((Loss::Logistic.value(0.0, 800.0) - 800.0).abs() < 1e-9);
        assert!(Loss::Logistic.value(1.0, -800.0).is_finite());
    }
}
