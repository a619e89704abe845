use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{
    feature_index, Cell, Cohort, CohortError, FeatureKind, PatientRecord, Provenance, Result,
    FEATURES, N_FEATURES, TARGET,
};

/// Reads a cohort CSV: the 47 feature columns and `mpap`, in any order.
/// Empty cells are missing values.
pub fn read_cohort<R: Read>(reader: R) -> Result<Vec<PatientRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut slots = vec![None; N_FEATURES];
    let mut target = None;
    for (pos, h) in headers.iter().enumerate() {
        if h == TARGET {
            target = Some(pos);
            continue;
        }
        let idx =
            feature_index(h).ok_or_else(|| CohortError::Header(format!("unknown column `{h}`")))?;
        if slots[idx].replace(pos).is_some() {
            return Err(CohortError::Header(format!("duplicate column `{h}`")));
        }
    }
    let target = target.ok_or_else(|| CohortError::Header(format!("missing `{TARGET}` column")))?;
    if let Some(i) = slots.iter().position(Option::is_none) {
        return Err(CohortError::Header(format!(
            "missing column `{}`",
            FEATURES[i].name
        )));
    }
    let slots: Vec<usize> = slots.into_iter().map(|s| s.expect("checked")).collect();

    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell_err = |column: &str, message: String| CohortError::Cell {
            row,
            column: column.to_string(),
            message,
        };
        let mut values = Vec::with_capacity(N_FEATURES);
        for (spec, &pos) in FEATURES.iter().zip(&slots) {
            let raw = rec.get(pos).unwrap_or("");
            let cell = if raw.is_empty() {
                Cell::Missing
            } else {
                match spec.kind {
                    FeatureKind::Numeric => match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => Cell::Number(v),
                        _ => return Err(cell_err(spec.name, format!("non-numeric value `{raw}`"))),
                    },
                    FeatureKind::Categorical(_) => Cell::Category(raw.to_string()),
                }
            };
            values.push(cell);
        }
        let raw = rec.get(target).unwrap_or("");
        if raw.is_empty() {
            return Err(cell_err(TARGET, "missing mpap".into()));
        }
        let mpap = match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => return Err(cell_err(TARGET, format!("non-numeric value `{raw}`"))),
        };
        records.push(PatientRecord { values, mpap });
    }
    if records.is_empty() {
        return Err(CohortError::NoRecords);
    }
    Ok(records)
}

pub fn load_cohort(path: &Path) -> Result<Cohort> {
    let records = read_cohort(BufReader::new(File::open(path)?))?;
    Cohort::new(records, Provenance::File(path.to_path_buf()))
}

/// Writes the canonical column order followed by `mpap`.
pub fn write_cohort<W: Write>(writer: W, cohort: &Cohort) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = FEATURES.iter().map(|f| f.name).collect();
    header.push(TARGET);
    w.write_record(&header)?;
    for r in cohort.records() {
        let mut row: Vec<String> = r
            .values
            .iter()
            .map(|c| match c {
                Cell::Missing => String::new(),
                Cell::Number(v) => v.to_string(),
                Cell::Category(s) => s.clone(),
            })
            .collect();
        row.push(r.mpap.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_cohort(path: &Path, cohort: &Cohort) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_cohort(&mut out, cohort)?;
    out.flush()?;
    Ok(())
}
