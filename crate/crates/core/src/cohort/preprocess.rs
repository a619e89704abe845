use std::collections::BTreeMap;

use super::{
    group_columns, Cell, Cohort, CohortError, FeatureGroup, FeatureKind, Result, FEATURES,
    N_FEATURES,
};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Imputation {
    /// Per feature, linear interpolation between the nearest observed rows
    /// in record order; leading and trailing gaps take the nearest value.
    #[default]
    LinearByRowOrder,
    /// Per-feature mean of the observed values.
    Mean,
}

/// Fills missing cells. Categorical columns always take their most frequent
/// category (ties to the first in category order).
pub fn impute(cohort: &Cohort, strategy: Imputation) -> Result<Cohort> {
    let mut records = cohort.records().to_vec();
    for (j, spec) in FEATURES.iter().enumerate() {
        let column = cohort.column(j);
        if column.iter().all(Cell::is_missing) {
            return Err(CohortError::AllMissing(spec.name.to_string()));
        }
        if !column.iter().any(Cell::is_missing) {
            continue;
        }
        let filled: Vec<Cell> = match spec.kind {
            FeatureKind::Categorical(categories) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for c in &column {
                    if let Cell::Category(s) = c {
                        *counts.entry(s.as_str()).or_default() += 1;
                    }
                }
                let rank = |s: &str| {
                    categories
                        .iter()
                        .position(|c| *c == s)
                        .unwrap_or(usize::MAX)
                };
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(rank(b.0).cmp(&rank(a.0))))
                    .map(|(s, _)| s.to_string())
                    .expect("column has an observed value");
                column
                    .into_iter()
                    .map(|c| {
                        if c.is_missing() {
                            Cell::Category(mode.clone())
                        } else {
                            c
                        }
                    })
                    .collect()
            }
            FeatureKind::Numeric => {
                let values: Vec<Option<f64>> = column
                    .iter()
                    .enumerate()
                    .map(|(row, c)| match c {
                        Cell::Missing => Ok(None),
                        Cell::Number(v) => Ok(Some(*v)),
                        Cell::Category(s) => Err(CohortError::Cell {
                            row,
                            column: spec.name.to_string(),
                            message: format!("category `{s}` in numeric column"),
                        }),
                    })
                    .collect::<Result<_>>()?;
                let out = match strategy {
                    Imputation::LinearByRowOrder => interpolate(&values),
                    Imputation::Mean => {
                        let obs: Vec<f64> = values.iter().flatten().copied().collect();
                        let mean = obs.iter().sum::<f64>() / obs.len() as f64;
                        values.iter().map(|v| v.unwrap_or(mean)).collect()
                    }
                };
                out.into_iter().map(Cell::Number).collect()
            }
        };
        for (r, c) in records.iter_mut().zip(filled) {
            r.values[j] = c;
        }
    }
    Cohort::new(records, cohort.provenance().clone())
}

/// Linear interpolation over positions with nearest-value edge fill.
/// Requires at least one observed value.
fn interpolate(values: &[Option<f64>]) -> Vec<f64> {
    let known: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let mut out = Vec::with_capacity(values.len());
    let mut k = 0; // first known index >= i
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            out.push(*v);
            continue;
        }
        while k < known.len() && known[k].0 < i {
            k += 1;
        }
        let filled = match (k.checked_sub(1).map(|p| known[p]), known.get(k)) {
            (Some((i0, v0)), Some(&(i1, v1))) => {
                let w = (i - i0) as f64 / (i1 - i0) as f64;
                v0 + w * (v1 - v0)
            }
            (Some((_, v0)), None) => v0,
            (None, Some(&(_, v1))) => v1,
            (None, None) => unreachable!("caller guarantees an observed value"),
        };
        out.push(filled);
    }
    out
}

/// Numeric matrix in canonical column order with the column names.
/// Categories map to their index (gender: female 0, male 1).
pub fn encode(cohort: &Cohort) -> Result<(Matrix, Vec<String>)> {
    let mut data = Vec::with_capacity(cohort.len() * N_FEATURES);
    for (row, r) in cohort.records().iter().enumerate() {
        for (spec, cell) in FEATURES.iter().zip(&r.values) {
            let v = match (cell, spec.kind) {
                (Cell::Missing, _) => {
                    return Err(CohortError::Missing {
                        row,
                        column: spec.name.to_string(),
                    })
                }
                (Cell::Number(v), FeatureKind::Numeric) => *v,
                (Cell::Category(s), FeatureKind::Categorical(cats)) => {
                    let norm = s.to_ascii_lowercase();
                    cats.iter()
                        .position(|c| *c == norm)
                        .ok_or_else(|| CohortError::Category {
                            column: spec.name.to_string(),
                            value: s.clone(),
                        })? as f64
                }
                (Cell::Number(v), FeatureKind::Categorical(cats)) => {
                    // Already-encoded index.
                    if v.fract() == 0.0 && *v >= 0.0 && (*v as usize) < cats.len() {
                        *v
                    } else {
                        return Err(CohortError::Category {
                            column: spec.name.to_string(),
                            value: v.to_string(),
                        });
                    }
                }
                (Cell::Category(s), FeatureKind::Numeric) => {
                    return Err(CohortError::Cell {
                        row,
                        column: spec.name.to_string(),
                        message: format!("category `{s}` in numeric column"),
                    })
                }
            };
            data.push(v);
        }
    }
    let m = Matrix::new(cohort.len(), N_FEATURES, data).expect("shape");
    Ok((m, super::feature_names()))
}

/// Per-column standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    /// Population standard deviations; zero marks a constant column.
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(m: &Matrix) -> Scaler {
        let n = m.n_rows().max(1) as f64;
        let mut means = Vec::with_capacity(m.n_cols());
        let mut stds = Vec::with_capacity(m.n_cols());
        for j in 0..m.n_cols() {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            // Spread at rounding level counts as constant.
            let constant = !(std > 1e-12 * mean.abs().max(f64::MIN_POSITIVE));
            means.push(mean);
            stds.push(if constant { 0.0 } else { std });
        }
        Scaler { means, stds }
    }

    pub fn apply(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.n_cols(), self.means.len(), "scaler width mismatch");
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                let s = self.stds[j];
                let v = if s > 0.0 {
                    (m.get(i, j) - self.means[j]) / s
                } else {
                    0.0
                };
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Restricts a canonical-order encoded matrix to the union of `groups`.
pub fn select_feature_set(m: &Matrix, groups: &[FeatureGroup]) -> Result<Matrix> {
    if groups.is_empty() {
        return Err(CohortError::Config("empty feature group selection".into()));
    }
    if m.n_cols() != N_FEATURES {
        return Err(CohortError::Config(format!(
            "expected the {N_FEATURES}-column encoded matrix, got {} columns",
            m.n_cols()
        )));
    }
    Ok(m.select_columns(&group_columns(groups)))
}
