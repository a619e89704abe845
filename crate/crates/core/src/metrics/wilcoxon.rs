//! Wilcoxon signed-rank test on paired differences.

use statrs::function::erf::erfc;

use super::{check_lengths, MetricsError, Result};

/// Largest effective sample size evaluated with the exact null
/// distribution.
const EXACT_MAX_N: usize = 25;
const MIN_PAIRS: usize = 6;

/// `W+` (sum of ranks of positive differences) and the number of non-zero
/// differences. Ranks of tied `|d|` are averaged.
pub fn signed_rank_statistic(differences: &[f64]) -> (f64, usize) {
    let ranks = abs_ranks(differences);
    let w_plus = ranks.iter().filter(|(d, _)| *d > 0.0).map(|(_, r)| r).sum();
    (w_plus, ranks.len())
}

/// Non-zero differences with their average ranks by magnitude.
fn abs_ranks(differences: &[f64]) -> Vec<(f64, f64)> {
    let mut nz: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &d in &nz[i..=j] {
            out.push((d, rank));
        }
        i = j + 1;
    }
    out
}

/// Two-sided Wilcoxon signed-rank p-value for paired per-sample errors.
///
/// Zero differences are discarded. The null distribution is exact
/// (enumerated over sign patterns, tie-aware) for up to 25 non-zero
/// differences and a tie-corrected normal approximation beyond.
pub fn paired_error_test(errors_a: &[f64], errors_b: &[f64]) -> Result<f64> {
    check_lengths(errors_a.len(), errors_b.len())?;
    if errors_a.len() < MIN_PAIRS {
        return Err(MetricsError::Undefined(format!(
            "signed-rank test needs at least {MIN_PAIRS} pairs, got {}",
            errors_a.len()
        )));
    }
    let diffs: Vec<f64> = errors_a.iter().zip(errors_b).map(|(a, b)| a - b).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(MetricsError::Undefined("errors must be finite".into()));
    }
    let ranks = abs_ranks(&diffs);
    let n = ranks.len();
    if n == 0 {
        return Ok(1.0);
    }
    let w_plus: f64 = ranks.iter().filter(|(d, _)| *d > 0.0).map(|(_, r)| r).sum();
    let p = if n <= EXACT_MAX_N {
        exact_p(&ranks, w_plus)
    } else {
        normal_p(&ranks, w_plus)
    };
    Ok(p.clamp(0.0, 1.0))
}

fn exact_p(ranks: &[(f64, f64)], w_plus: f64) -> f64 {
    // Doubled ranks are integers even with averaged ties.
    let doubled: Vec<usize> = ranks
        .iter()
        .map(|(_, r)| (2.0 * r).round() as usize)
        .collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    let observed = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / patterns;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / patterns;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[(f64, f64)], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1].1 == ranks[i].1 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2)
}
