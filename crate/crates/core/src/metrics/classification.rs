use serde::{Deserialize, Serialize};

use super::{check_lengths, Result};

/// mPAP at or above this value is a positive PH diagnosis, mmHg.
pub const PH_THRESHOLD_MMHG: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

impl ConfusionMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        ConfusionMetrics {
            tp,
            fp,
            tn,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
        }
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// Harmonic mean of precision and sensitivity; 0 without true positives.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

pub fn confusion_from_labels(actual: &[bool], predicted: &[bool]) -> Result<ConfusionMetrics> {
    check_lengths(actual.len(), predicted.len())?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    Ok(ConfusionMetrics::from_counts(tp, fp, tn, fn_))
}

/// Thresholds both measured and predicted pressures (`value >= threshold`)
/// and counts agreements.
pub fn confusion_at(
    measured: &[f64],
    predicted: &[f64],
    threshold: f64,
) -> Result<ConfusionMetrics> {
    check_lengths(measured.len(), predicted.len())?;
    let actual: Vec<bool> = measured.iter().map(|&v| v >= threshold).collect();
    let pred: Vec<bool> = predicted.iter().map(|&v| v >= threshold).collect();
    confusion_from_labels(&actual, &pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_count() {
        let m = confusion_at(&[20.0, 30.0, 24.0, 47.0], &[26.0, 33.0, 20.0, 45.0], 25.0).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (2, 1, 1, 0));
        assert_eq!(m.sensitivity, 1.0);
        assert_eq!(m.specificity, 0.5);
        assert_eq!(m.accuracy, 0.75);
    }

    #[test]
    fn perfect_agreement() {
        let y = [12.0, 25.0, 40.0, 24.9];
        let m = confusion_at(&y, &y, PH_THRESHOLD_MMHG).unwrap();
        assert_eq!(m.fp + m.fn_, 0);
    }

    #[test]
    fn lower_threshold_relabels() {
        let measured = [18.0, 22.0, 30.0];
        let predicted = [21.0, 23.0, 29.0];
        let at25 = confusion_at(&measured, &predicted, 25.0).unwrap();
        let at20 = confusion_at(&measured, &predicted, 20.0).unwrap();
        assert_eq!((at25.tp, at25.tn), (1, 2));
        assert_eq!((at20.tp, at20.fp, at20.tn), (2, 1, 0));
    }

    #[test]
    fn f1_and_precision() {
        let m = ConfusionMetrics::from_counts(3, 1, 4, 2);
        assert_eq!(m.precision(), 0.75);
        assert!((m.f1() - 6.0 / 9.0).abs() < 1e-15);
        assert_eq!(ConfusionMetrics::from_counts(0, 0, 5, 0).f1(), 0.0);
    }
}
