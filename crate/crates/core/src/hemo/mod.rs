//! Hemodynamic feature extraction from main pulmonary artery waveforms.
//!
//! A flow waveform `Q(t)` and an area waveform `A(t)` covering one cardiac
//! cycle are turned into five scalar features:
//!
//! * the three-element Windkessel parameters `Rc`, `C`, `Rd` and their sum
//!   `Rtot`, fitted against a pressure waveform derived from the area
//!   through an elastic tube law;
//! * the ratio of backward to total wave power from a discrete wave
//!   separation of the pressure and velocity increments.

mod features;
mod io;
mod waves;
mod windkessel;

pub use features::{physics_features, PhysicsFeatures, Stage};
pub use io::{read_waveform_csv, write_waveform_csv};
pub use waves::{
    characteristic_impedance, pressure_from_area, wave_power_decomposition, WaveDecomposition,
};
pub use windkessel::{
    fit_windkessel, integrate_capacitor, simulate_windkessel, simulate_windkessel_from, CycleStart,
    FitOptions, Simulation, WindkesselFit, MAX_CYCLES, STEADY_STATE_TOLERANCE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of samples in a waveform.
pub const MIN_SAMPLES: usize = 16;

/// Blood density, kg/m³.
pub const BLOOD_DENSITY: f64 = 1060.0;

#[derive(Debug, Error)]
pub enum HemoError {
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("windkessel simulation did not reach a periodic steady state after {cycles} cycles (mismatch {mismatch:.3e} Pa)")]
    Convergence { cycles: usize, mismatch: f64 },
    #[error("windkessel fit failed to improve on its initial guesses (best residual {best_residual:.6e} Pa^2)")]
    FitFailure { best_residual: f64 },
    #[error("waveforms carry no wave power")]
    ZeroWavePower,
    #[error("{stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<HemoError>,
    },
    #[error("waveform file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HemoError>;

/// Physical quantity carried by a [`Waveform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// Volumetric flow, m³/s.
    Flow,
    /// Cross-sectional area, m².
    Area,
    /// Pressure, Pa.
    Pressure,
}

/// A uniformly sampled signal over exactly one cardiac cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    dt: f64,
    quantity: Quantity,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, dt: f64, quantity: Quantity) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(HemoError::InvalidWaveform(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if samples.len() < MIN_SAMPLES {
            return Err(HemoError::InvalidWaveform(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(HemoError::InvalidWaveform(format!(
                "sample {i} is not finite"
            )));
        }
        if quantity == Quantity::Area {
            if let Some(i) = samples.iter().position(|&v| v <= 0.0) {
                return Err(HemoError::InvalidWaveform(format!(
                    "area sample {i} is not positive ({})",
                    samples[i]
                )));
            }
        }
        Ok(Waveform {
            samples,
            dt,
            quantity,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Cycle length `len · dt`, seconds.
    pub fn period(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub(crate) fn check_compatible(&self, other: &Waveform) -> Result<()> {
        if self.len() != other.len() {
            return Err(HemoError::InvalidWaveform(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        if (self.dt - other.dt).abs() > 1e-9 * self.dt {
            return Err(HemoError::InvalidWaveform(format!(
                "sampling mismatch: dt {} vs {}",
                self.dt, other.dt
            )));
        }
        Ok(())
    }

    pub(crate) fn expect(&self, quantity: Quantity) -> Result<()> {
        if self.quantity != quantity {
            return Err(HemoError::InvalidWaveform(format!(
                "expected a {quantity:?} waveform, got {:?}",
                self.quantity
            )));
        }
        Ok(())
    }
}

/// Elastic tube law linking the vessel area to the transmural pressure,
/// linear in the radius: `p = p0 + stiffness · (sqrt(A / A0) − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeLaw {
    /// Reference pressure, Pa.
    pub p0: f64,
    /// Reference area, m².
    pub a0: f64,
    /// Elastance coefficient, Pa.
    pub stiffness: f64,
    /// Blood density, kg/m³.
    pub rho: f64,
}

impl TubeLaw {
    pub fn new(p0: f64, a0: f64, stiffness: f64) -> Result<Self> {
        Self::with_density(p0, a0, stiffness, BLOOD_DENSITY)
    }

    pub fn with_density(p0: f64, a0: f64, stiffness: f64, rho: f64) -> Result<Self> {
        let law = TubeLaw {
            p0,
            a0,
            stiffness,
            rho,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.p0.is_finite()
            && self.a0.is_finite()
            && self.a0 > 0.0
            && self.stiffness.is_finite()
            && self.stiffness > 0.0
            && self.rho.is_finite()
            && self.rho > 0.0;
        if ok {
            Ok(())
        } else {
            Err(HemoError::Domain(format!("invalid tube law {self:?}")))
        }
    }

    pub fn pressure(&self, area: f64) -> f64 {
        self.p0 + self.stiffness * ((area / self.a0).sqrt() - 1.0)
    }

    /// Inverse of [`TubeLaw::pressure`]; `None` where the area would not be
    /// positive.
    pub fn area(&self, pressure: f64) -> Option<f64> {
        let r = 1.0 + (pressure - self.p0) / self.stiffness;
        (r > 0.0).then_some(self.a0 * r * r)
    }

    /// Area compliance `dA/dp` at the given area.
    pub fn compliance(&self, area: f64) -> f64 {
        2.0 * (area * self.a0).sqrt() / self.stiffness
    }
}

/// Three-element (Rc–C–Rd) Windkessel parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindkesselParams {
    rc: f64,
    c: f64,
    rd: f64,
    rtot: f64,
}

impl WindkesselParams {
    pub fn new(rc: f64, c: f64, rd: f64) -> Result<Self> {
        for (name, v) in [("Rc", rc), ("C", c), ("Rd", rd)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(HemoError::Domain(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(WindkesselParams {
            rc,
            c,
            rd,
            rtot: rc + rd,
        })
    }

    /// Proximal resistance, kg/(m⁴·s).
    pub fn rc(&self) -> f64 {
        self.rc
    }

    /// Compliance, m⁴·s²/kg.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Distal resistance, kg/(m⁴·s).
    pub fn rd(&self) -> f64 {
        self.rd
    }

    /// `Rc + Rd`.
    pub fn rtot(&self) -> f64 {
        self.rtot
    }

    /// Diastolic decay time constant `Rd · C`, seconds.
    pub fn time_constant(&self) -> f64 {
        self.rd * self.c
    }
}
