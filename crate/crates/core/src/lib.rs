//! Physics-informed feature extraction, gradient-boosted trees and the
//! evaluation protocols used to estimate mean pulmonary artery pressure
//! (mPAP) from MRI-derived data.
//!
//! The crate is split by responsibility:
//!
//! * [`hemo`] turns flow/area waveforms of the main pulmonary artery into
//!   Windkessel parameters and a backward-to-total wave power ratio.
//! * [`boost`] is a small exact-split boosting engine with GBDT, DART and
//!   GOSS training modes.
//! * [`cohort`] owns the tabular patient model, preprocessing and the
//!   synthetic cohort generator.
//! * [`metrics`] covers regression/confusion metrics, ROC analysis,
//!   threshold selection and paired significance tests.
//! * [`tune`] provides cross-validation schemes and a Gaussian-process
//!   Bayesian optimizer.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod cohort;
pub mod hemo;
pub mod metrics;
pub mod optim;
pub mod seed;
pub mod tune;

pub use boost::{BoostingConfig, Ensemble, Loss, Mode};
pub use cohort::{Cohort, FeatureGroup, PatientRecord};
pub use hemo::{TubeLaw, Waveform, WindkesselParams};
pub use metrics::{ConfusionMetrics, RegressionMetrics, RocCurve, ThresholdStrategy};
pub use tune::{CvScheme, SearchSpace, TuneResult};

/// Dense row-major matrix of `f64` features.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        if rows.checked_mul(cols)? != data.len() {
            return None;
        }
        Some(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Some(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copy of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }
}
