//! Patient table: schema, CSV ingestion, preprocessing, univariate
//! statistics and the synthetic cohort generator.

mod io;
mod preprocess;
mod schema;
mod stats;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::hemo::{HemoError, PhysicsFeatures};
use crate::metrics::PH_THRESHOLD_MMHG;

pub use io::{load_cohort, read_cohort, save_cohort, write_cohort};
pub use preprocess::{encode, impute, select_feature_set, Imputation, Scaler};
pub use schema::{
    feature_index, feature_names, group_columns, FeatureGroup, FeatureKind, FeatureSpec,
    COMPLIANCE, FEATURES, GENDER_CATEGORIES, N_FEATURES, RC, RD, RTOT, TARGET, WAVE_RATIO,
};
pub use stats::univariate_pvalue;
pub use synth::{
    read_laws, read_patient_waveforms, synth_cohort, waveform_path, write_synth_waveforms,
    GroupPriors, PatientWaveforms, SynthConfig, SynthOutput, LAWS_FILE,
};

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("no records")]
    NoRecords,
    #[error("header: {0}")]
    Header(String),
    #[error("feature `{0}` has no observed values")]
    AllMissing(String),
    #[error("feature `{column}` is missing in row {row}; impute first")]
    Missing { row: usize, column: String },
    #[error("unseen category `{value}` in column `{column}`")]
    Category { column: String, value: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("statistics: {0}")]
    Stats(String),
    #[error("patient {patient}: {source}")]
    Patient {
        patient: usize,
        #[source]
        source: HemoError,
    },
    #[error(transparent)]
    Hemo(#[from] HemoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CohortError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Category(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }
}

/// One patient: a cell per canonical feature plus measured mPAP (mmHg).
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub values: Vec<Cell>,
    pub mpap: f64,
}

impl PatientRecord {
    pub fn ph_label(&self, threshold: f64) -> bool {
        self.mpap >= threshold
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        feature_index(name).map(|i| &self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    File(PathBuf),
    Synthetic { seed: u64 },
    Memory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    records: Vec<PatientRecord>,
    provenance: Provenance,
}

impl Cohort {
    pub fn new(records: Vec<PatientRecord>, provenance: Provenance) -> Result<Self> {
        if records.is_empty() {
            return Err(CohortError::NoRecords);
        }
        for (row, r) in records.iter().enumerate() {
            if r.values.len() != N_FEATURES {
                return Err(CohortError::Cell {
                    row,
                    column: "*".into(),
                    message: format!("expected {N_FEATURES} values, got {}", r.values.len()),
                });
            }
            if !r.mpap.is_finite() {
                return Err(CohortError::Cell {
                    row,
                    column: TARGET.into(),
                    message: "mpap must be finite".into(),
                });
            }
        }
        Ok(Cohort {
            records,
            provenance,
        })
    }

    pub fn spec(&self) -> &'static [FeatureSpec] {
        &FEATURES
    }

    pub fn records(&self) -> &[PatientRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mpap).collect()
    }

    /// PH labels at `threshold` mmHg.
    pub fn labels(&self, threshold: f64) -> Vec<bool> {
        self.records.iter().map(|r| r.ph_label(threshold)).collect()
    }

    /// Labels at the standard 25 mmHg definition.
    pub fn ph_labels(&self) -> Vec<bool> {
        self.labels(PH_THRESHOLD_MMHG)
    }

    pub fn column(&self, index: usize) -> Vec<Cell> {
        self.records
            .iter()
            .map(|r| r.values[index].clone())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.values.iter().all(|c| !c.is_missing()))
    }

    /// Copy with the five physics columns replaced; `None` leaves a row's
    /// physics cells missing.
    pub fn with_physics_features(&self, features: &[Option<PhysicsFeatures>]) -> Result<Cohort> {
        if features.len() != self.len() {
            return Err(CohortError::Config(format!(
                "{} physics rows for {} patients",
                features.len(),
                self.len()
            )));
        }
        let cols =
            [RD, RC, COMPLIANCE, RTOT, WAVE_RATIO].map(|n| feature_index(n).expect("schema"));
        let mut records = self.records.clone();
        for (r, f) in records.iter_mut().zip(features) {
            let vals = f.map(|f| [f.rd, f.rc, f.c, f.rtot, f.wb_wtot]);
            for (k, &c) in cols.iter().enumerate() {
                r.values[c] = vals.map_or(Cell::Missing, |v| Cell::Number(v[k]));
            }
        }
        Ok(Cohort {
            records,
            provenance: self.provenance.clone(),
        })
    }

    /// Keeps the rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Cohort> {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Cohort::new(records, self.provenance.clone())
    }
}
