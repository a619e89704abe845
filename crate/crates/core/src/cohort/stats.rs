use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{CohortError, Result};

/// Two-sided p-value for a zero slope in the simple regression of `y` on
/// `x`, from the t statistic with `n − 2` degrees of freedom.
pub fn univariate_pvalue(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CohortError::Stats(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(CohortError::Stats(format!(
            "need at least 3 points, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CohortError::Stats("values must be finite".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(CohortError::Stats("feature is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    // Residuals at rounding level of the response spread: exact fit.
    if sse <= 1e-24 * syy || syy == 0.0 {
        return Ok(if slope.abs() > 0.0 && syy > 0.0 {
            0.0
        } else {
            1.0
        });
    }
    let df = nf - 2.0;
    let se = (sse / df / sxx).sqrt();
    let t = slope / se;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| CohortError::Stats(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}
