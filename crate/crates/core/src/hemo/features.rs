use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    characteristic_impedance, fit_windkessel, pressure_from_area, wave_power_decomposition,
    FitOptions, HemoError, Result, TubeLaw, Waveform,
};

/// Pipeline stage of [`physics_features`], carried by stage errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PressureFromArea,
    WindkesselFit,
    CharacteristicImpedance,
    WaveDecomposition,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::PressureFromArea => "pressure_from_area",
            Stage::WindkesselFit => "windkessel_fit",
            Stage::CharacteristicImpedance => "characteristic_impedance",
            Stage::WaveDecomposition => "wave_decomposition",
        })
    }
}

/// The five model-derived features of one patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsFeatures {
    pub rd: f64,
    pub rc: f64,
    pub c: f64,
    pub rtot: f64,
    pub wb_wtot: f64,
}

fn at<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| HemoError::Stage {
        stage,
        source: Box::new(e),
    })
}

/// Pressure from area, Windkessel fit, characteristic impedance and wave
/// power ratio, in that order.
pub fn physics_features(
    flow: &Waveform,
    area: &Waveform,
    law: &TubeLaw,
    options: &FitOptions,
) -> Result<PhysicsFeatures> {
    let pressure = at(Stage::PressureFromArea, pressure_from_area(area, law))?;
    let fit = at(
        Stage::WindkesselFit,
        fit_windkessel(flow, &pressure, options),
    )?;
    let zc = at(
        Stage::CharacteristicImpedance,
        characteristic_impedance(&pressure, area, law),
    )?;
    let waves = at(
        Stage::WaveDecomposition,
        wave_power_decomposition(&pressure, flow, area, zc),
    )?;
    let p = fit.params;
    Ok(PhysicsFeatures {
        rd: p.rd(),
        rc: p.rc(),
        c: p.c(),
        rtot: p.rtot(),
        wb_wtot: waves.ratio,
    })
}
