use serde::{Deserialize, Serialize};

use super::{check_lengths, MetricsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub mse: f64,
    pub r2: f64,
}

/// MAE, RMSE, MSE and `R² = 1 − SSE/SST` with SST around the measured mean.
pub fn regression_metrics(measured: &[f64], predicted: &[f64]) -> Result<RegressionMetrics> {
    check_lengths(measured.len(), predicted.len())?;
    if measured.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = measured.len() as f64;
    let mean = measured.iter().sum::<f64>() / n;
    let (mut abs, mut sse, mut sst) = (0.0, 0.0, 0.0);
    for (&y, &p) in measured.iter().zip(predicted) {
        let e = p - y;
        abs += e.abs();
        sse += e * e;
        sst += (y - mean) * (y - mean);
    }
    if sst == 0.0 {
        return Err(MetricsError::Undefined(
            "R² is undefined for a constant measured vector".into(),
        ));
    }
    let mse = sse / n;
    Ok(RegressionMetrics {
        mae: abs / n,
        rmse: mse.sqrt(),
        mse,
        r2: 1.0 - sse / sst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let y = [10.0, 20.0, 33.0];
        let m = regression_metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.mse, m.r2), (0.0, 0.0, 1.0));
    }

    #[test]
    fn hand_evaluated() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.mse - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.r2.abs() < 1e-15);
        assert_eq!(m.rmse, m.mse.sqrt());
    }

    #[test]
    fn errors() {
        assert!(regression_metrics(&[], &[]).is_err());
        assert!(regression_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(regression_metrics(&[5.0, 5.0], &[4.0, 6.0]).is_err());
    }
}
