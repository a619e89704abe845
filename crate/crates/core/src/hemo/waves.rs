//! Tube-law pressure and forward/backward wave power separation.

use serde::{Deserialize, Serialize};

use super::{HemoError, Quantity, Result, TubeLaw, Waveform};

/// Pressure waveform from an area waveform through the tube law.
pub fn pressure_from_area(area: &Waveform, law: &TubeLaw) -> Result<Waveform> {
    area.expect(Quantity::Area)?;
    law.validate()?;
    let p = area.samples().iter().map(|&a| law.pressure(a)).collect();
    Waveform::new(p, area.dt(), Quantity::Pressure)
}

/// Characteristic impedance `Zc = ρ·c / Ā` with the Bramwell–Hill wave
/// speed `c = sqrt(Ā / (ρ · dA/dp))` evaluated at the mean area.
pub fn characteristic_impedance(
    pressure: &Waveform,
    area: &Waveform,
    law: &TubeLaw,
) -> Result<f64> {
    pressure.expect(Quantity::Pressure)?;
    area.expect(Quantity::Area)?;
    pressure.check_compatible(area)?;
    law.validate()?;
    let a_mean = area.mean();
    let compliance = law.compliance(a_mean);
    if !(compliance.is_finite() && compliance > 0.0) {
        return Err(HemoError::Domain(format!(
            "area compliance must be positive, got {compliance}"
        )));
    }
    let c = (a_mean / (law.rho * compliance)).sqrt();
    let zc = law.rho * c / a_mean;
    if !(zc.is_finite() && zc > 0.0) {
        return Err(HemoError::Domain(format!(
            "characteristic impedance {zc} is not positive"
        )));
    }
    Ok(zc)
}

/// Forward and backward wave power over one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveDecomposition {
    /// Forward power, Σ dp₊·dU₊ (Pa·m/s per sample interval).
    pub wf: f64,
    /// Backward power magnitude, Σ |dp₋·dU₋|.
    pub wb: f64,
    /// `wb / (wf + wb)`.
    pub ratio: f64,
}

/// Splits the per-sample increments of pressure and velocity `U = Q / Ā`
/// into forward and backward travelling parts,
/// `dp± = (dp ± Zc·Ā·dU) / 2`, `dU± = ±dp± / (Zc·Ā)`, and accumulates the
/// wave power of each direction. Increments wrap around the cycle.
pub fn wave_power_decomposition(
    pressure: &Waveform,
    flow: &Waveform,
    area: &Waveform,
    zc: f64,
) -> Result<WaveDecomposition> {
    pressure.expect(Quantity::Pressure)?;
    flow.expect(Quantity::Flow)?;
    area.expect(Quantity::Area)?;
    pressure.check_compatible(flow)?;
    pressure.check_compatible(area)?;
    if !(zc.is_finite() && zc > 0.0) {
        return Err(HemoError::Domain(format!("Zc must be positive, got {zc}")));
    }
    let a_mean = area.mean();
    let impedance = zc * a_mean;
    let p = pressure.samples();
    let q = flow.samples();
    let n = p.len();

    let (mut wf, mut wb) = (0.0, 0.0);
    for i in 0..n {
        let j = (i + 1) % n;
        let dp = p[j] - p[i];
        let du = q[j] / a_mean - q[i] / a_mean;
        let dp_fwd = 0.5 * (dp + impedance * du);
        let dp_bwd = 0.5 * (dp - impedance * du);
        let du_fwd = dp_fwd / impedance;
        let du_bwd = -dp_bwd / impedance;
        wf += dp_fwd * du_fwd;
        wb += (dp_bwd * du_bwd).abs();
    }
    let total = wf + wb;
    if !(total.is_finite() && total > 0.0) {
        return Err(HemoError::ZeroWavePower);
    }
    Ok(WaveDecomposition {
        wf,
        wb,
        ratio: wb / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_area_maps_to_reference_pressure() {
        let law = TubeLaw::new(1200.0, 7e-4, 4e4).unwrap();
        let area = Waveform::new(vec![7e-4; 32], 0.025, Quantity::Area).unwrap();
        let p = pressure_from_area(&area, &law).unwrap();
        assert!(p.samples().iter().all(|&v| v == 1200.0));
    }

    #[test]
    fn squared_radius_perturbation_is_linear_in_pressure() {
        let law = TubeLaw::new(500.0, 6e-4, 3e4).unwrap();
        let eps = 0.07;
        let area = Waveform::new(
            vec![6e-4 * (1.0 + eps) * (1.0 + eps); 16],
            0.05,
            Quantity::Area,
        )
        .unwrap();
        let p = pressure_from_area(&area, &law).unwrap();
        for v in p.samples() {
            assert!((v - (500.0 + 3e4 * eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn sinusoid_area_gives_sinusoid_pressure() {
        // Independent evaluation: sqrt((1 + 0.1 sin)^2) = 1 + 0.1 sin.
        let a0 = 7e-4;
        let law = TubeLaw::new(0.0, a0, 1000.0).unwrap();
        let n = 64;
        let dt = 1.0 / n as f64;
        let w = 2.0 * PI;
        let area: Vec<f64> = (0..n)
            .map(|i| a0 * (1.0 + 0.1 * (w * i as f64 * dt).sin()).powi(2))
            .collect();
        let p =
            pressure_from_area(&Waveform::new(area, dt, Quantity::Area).unwrap(), &law).unwrap();
        for (i, v) in p.samples().iter().enumerate() {
            let expected = 100.0 * (w * i as f64 * dt).sin();
            assert!((v - expected).abs() < 1e-9, "{i}: {v} vs {expected}");
        }
    }

    #[test]
    fn hand_evaluated_impedance() {
        // Reference area equal to the mean area and stiffness chosen so that
        // dA/dp = 2·Ā/s = 1e-8 m²/Pa.
        let a_mean = 7e-4;
        let law = TubeLaw::new(0.0, a_mean, 2.0 * a_mean / 1e-8).unwrap();
        assert!((law.compliance(a_mean) - 1e-8).abs() < 1e-20);
        let area = Waveform::new(vec![a_mean; 16], 0.05, Quantity::Area).unwrap();
        let p = pressure_from_area(&area, &law).unwrap();
        let zc = characteristic_impedance(&p, &area, &law).unwrap();
        let c = (7e-4f64 / (1060.0 * 1e-8)).sqrt();
        assert!((c - 8.1263).abs() < 1e-3);
        assert!((zc - 1060.0 * c / 7e-4).abs() < 1e-6 * zc);
        assert!((zc / 1.231e7 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn doubling_stiffness_scales_impedance_by_sqrt2() {
        let area = Waveform::new(vec![8e-4; 16], 0.05, Quantity::Area).unwrap();
        let law1 = TubeLaw::new(0.0, 8e-4, 2e4).unwrap();
        let law2 = TubeLaw::new(0.0, 8e-4, 4e4).unwrap();
        let p1 = pressure_from_area(&area, &law1).unwrap();
        let p2 = pressure_from_area(&area, &law2).unwrap();
        let z1 = characteristic_impedance(&p1, &area, &law1).unwrap();
        let z2 = characteristic_impedance(&p2, &area, &law2).unwrap();
        assert!((z2 / z1 - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(z1, characteristic_impedance(&p1, &area, &law1).unwrap());
    }

    #[test]
    fn flat_waveforms_have_no_wave_power() {
        let p = Waveform::new(vec![1000.0; 16], 0.05, Quantity::Pressure).unwrap();
        let q = Waveform::new(vec![1e-4; 16], 0.05, Quantity::Flow).unwrap();
        let a = Waveform::new(vec![7e-4; 16], 0.05, Quantity::Area).unwrap();
        assert!(matches!(
            wave_power_decomposition(&p, &q, &a, 1e7),
            Err(HemoError::ZeroWavePower)
        ));
    }

    #[test]
    fn rejects_non_positive_impedance() {
        let p = Waveform::new(vec![1000.0; 16], 0.05, Quantity::Pressure).unwrap();
        let q = Waveform::new(vec![1e-4; 16], 0.05, Quantity::Flow).unwrap();
        let a = Waveform::new(vec![7e-4; 16], 0.05, Quantity::Area).unwrap();
        assert!(wave_power_decomposition(&p, &q, &a, 0.0).is_err());
    }
}
