use std::io::{Read, Write};

use super::{HemoError, Quantity, Result, Waveform};

/// Relative tolerance on the uniformity of the time column.
const UNIFORMITY_TOL: f64 = 1e-9;

/// Reads a `t,flow,area` CSV (SI units) into flow and area waveforms.
pub fn read_waveform_csv<R: Read>(reader: R) -> Result<(Waveform, Waveform)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != ["t", "flow", "area"] {
        return Err(HemoError::File(format!(
            "expected header t,flow,area, got {}",
            header.join(",")
        )));
    }
    let (mut t, mut q, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |col: usize| -> Result<f64> {
            rec.get(col).unwrap_or("").parse::<f64>().map_err(|_| {
                HemoError::File(format!(
                    "row {}: column {} is not numeric",
                    line + 1,
                    col + 1
                ))
            })
        };
        t.push(parse(0)?);
        q.push(parse(1)?);
        a.push(parse(2)?);
    }
    if t.len() < 2 {
        return Err(HemoError::File(
            "waveform file has fewer than two samples".into(),
        ));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(HemoError::File("time column must be increasing".into()));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > UNIFORMITY_TOL * dt.max(t[i].abs()) {
            return Err(HemoError::File(format!(
                "time column is not uniform at row {}",
                i + 2
            )));
        }
    }
    Ok((
        Waveform::new(q, dt, Quantity::Flow)?,
        Waveform::new(a, dt, Quantity::Area)?,
    ))
}

pub fn write_waveform_csv<W: Write>(writer: W, flow: &Waveform, area: &Waveform) -> Result<()> {
    flow.expect(Quantity::Flow)?;
    area.expect(Quantity::Area)?;
    flow.check_compatible(area)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "flow", "area"])?;
    for (i, (q, a)) in flow.samples().iter().zip(area.samples()).enumerate() {
        let t = i as f64 * flow.dt();
        w.write_record([t.to_string(), q.to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let q: Vec<f64> = (0..20)
            .map(|i| 1e-4 * (i as f64 * 0.3).sin() + 1e-4)
            .collect();
        let a: Vec<f64> = (0..20).map(|i| 7e-4 + 1e-5 * i as f64).collect();
        let flow = Waveform::new(q, 0.04, Quantity::Flow).unwrap();
        let area = Waveform::new(a, 0.04, Quantity::Area).unwrap();
        let mut buf = Vec::new();
        write_waveform_csv(&mut buf, &flow, &area).unwrap();
        let (f2, a2) = read_waveform_csv(buf.as_slice()).unwrap();
        assert_eq!(f2.samples(), flow.samples());
        assert_eq!(a2.samples(), area.samples());
        assert!((f2.dt() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_uniform_time() {
        let mut s = String::from("t,flow,area\n");
        for i in 0..20 {
            let t = if i == 10 { 0.41 } else { i as f64 * 0.04 };
            s.push_str(&format!("{t},1e-4,7e-4\n"));
        }
        assert!(matches!(
            read_waveform_csv(s.as_bytes()),
            Err(HemoError::File(_))
        ));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_waveform_csv("time,q,a\n0,1,1\n".as_bytes()).is_err());
    }
}
