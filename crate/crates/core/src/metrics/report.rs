use std::io::Write;

use super::{check_lengths, Result, RocCurve};

/// `fpr,tpr,threshold` rows, one per curve point.
pub fn write_roc_csv<W: Write>(writer: W, curve: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in &curve.points {
        w.write_record([
            p.fpr.to_string(),
            p.tpr.to_string(),
            p.threshold.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `measured,predicted` rows.
pub fn write_scatter_csv<W: Write>(writer: W, measured: &[f64], predicted: &[f64]) -> Result<()> {
    check_lengths(measured.len(), predicted.len())?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["measured", "predicted"])?;
    for (m, p) in measured.iter().zip(predicted) {
        w.write_record([m.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
