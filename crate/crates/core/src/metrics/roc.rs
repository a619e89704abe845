use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_lengths, confusion_from_labels, ConfusionMetrics, MetricsError, Result};

/// One operating point: scores `>= threshold` are called positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve with one point per distinct score, from `(0,0)` at
/// `threshold = +inf` to `(1,1)` at the lowest score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Sweeps every distinct score as a threshold. Tied scores form a single
/// step, so the trapezoidal AUC equals the Mann–Whitney statistic with half
/// credit for ties.
pub fn roc_curve(labels: &[bool], scores: &[f64]) -> Result<RocCurve> {
    check_lengths(labels.len(), scores.len())?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(MetricsError::Undefined(format!("score {i} is NaN")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::Undefined(
            "ROC needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tp: 0,
        fp: 0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint {
            threshold: s,
            tp,
            fp,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) * 0.5;
        points.push(point);
    }
    Ok(RocCurve {
        points,
        auc,
        positives,
        negatives,
    })
}

/// Operating-point selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdStrategy {
    /// Maximize sensitivity + specificity.
    Youden,
    /// Maximize F1.
    F1,
    /// Minimize the distance to the (0, 1) corner.
    Closest01,
    /// Maximize sensitivity × specificity.
    Concordance,
}

impl ThresholdStrategy {
    pub const ALL: [ThresholdStrategy; 4] = [
        ThresholdStrategy::Youden,
        ThresholdStrategy::Concordance,
        ThresholdStrategy::Closest01,
        ThresholdStrategy::F1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdStrategy::Youden => "youden",
            ThresholdStrategy::F1 => "f1",
            ThresholdStrategy::Closest01 => "closest01",
            ThresholdStrategy::Concordance => "concordance",
        }
    }

    /// Score to maximize (closest01 is the negated distance).
    pub fn objective(self, m: &ConfusionMetrics) -> f64 {
        let (sens, spec) = (m.sensitivity, m.specificity);
        match self {
            ThresholdStrategy::Youden => sens + spec - 1.0,
            ThresholdStrategy::F1 => m.f1(),
            ThresholdStrategy::Closest01 => -((1.0 - sens).powi(2) + (1.0 - spec).powi(2)).sqrt(),
            ThresholdStrategy::Concordance => sens * spec,
        }
    }
}

impl fmt::Display for ThresholdStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdStrategy {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "youden" => Ok(ThresholdStrategy::Youden),
            "f1" => Ok(ThresholdStrategy::F1),
            "closest01" | "01" => Ok(ThresholdStrategy::Closest01),
            "concordance" => Ok(ThresholdStrategy::Concordance),
            other => Err(MetricsError::Config(format!(
                "unknown threshold strategy `{other}`"
            ))),
        }
    }
}

const TIE_TOL: f64 = 1e-12;

/// Picks the threshold optimizing `strategy` among the midpoints between
/// consecutive distinct scores and the `±inf` sentinels. Ties go to the
/// higher sensitivity, then to the lower threshold.
pub fn select_threshold(
    curve: &RocCurve,
    labels: &[bool],
    scores: &[f64],
    strategy: ThresholdStrategy,
) -> Result<(f64, ConfusionMetrics)> {
    check_lengths(labels.len(), scores.len())?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives != curve.positives || labels.len() - positives != curve.negatives {
        return Err(MetricsError::Undefined(
            "curve does not match labels".into(),
        ));
    }
    let pts = &curve.points;
    let (p, n) = (curve.positives, curve.negatives);
    let mut best: Option<(f64, f64, f64)> = None; // (objective, sensitivity, threshold)
    for (k, pt) in pts.iter().enumerate() {
        // Point k calls positive every score >= pts[k].threshold; the
        // equivalent midpoint candidate sits just below that score.
        let threshold = if k == 0 {
            f64::INFINITY
        } else if k + 1 < pts.len() {
            let (hi, lo) = (pts[k].threshold, pts[k + 1].threshold);
            let m = lo + 0.5 * (hi - lo);
            if m > lo {
                m
            } else {
                hi
            }
        } else {
            f64::NEG_INFINITY
        };
        let m = ConfusionMetrics::from_counts(pt.tp, pt.fp, n - pt.fp, p - pt.tp);
        let obj = strategy.objective(&m);
        let better = match best {
            None => true,
            Some((bo, bs, bt)) => {
                if obj > bo + TIE_TOL {
                    true
                } else if obj >= bo - TIE_TOL {
                    m.sensitivity > bs || (m.sensitivity == bs && threshold < bt)
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((obj, m.sensitivity, threshold));
        }
    }
    let (_, _, threshold) = best.ok_or(MetricsError::Empty)?;
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let metrics = confusion_from_labels(labels, &predicted)?;
    Ok((threshold, metrics))
}
