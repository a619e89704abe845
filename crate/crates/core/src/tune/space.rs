use serde::{Deserialize, Serialize};

use super::{Result, TuneError};
use crate::boost::{BoostingConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub scale: Scale,
    pub integer: bool,
}

impl Param {
    pub fn linear(name: &str, low: f64, high: f64) -> Self {
        Param {
            name: name.into(),
            low,
            high,
            scale: Scale::Linear,
            integer: false,
        }
    }

    pub fn log(name: &str, low: f64, high: f64) -> Self {
        Param {
            scale: Scale::Log,
            ..Param::linear(name, low, high)
        }
    }

    pub fn int(name: &str, low: f64, high: f64) -> Self {
        Param {
            integer: true,
            ..Param::linear(name, low, high)
        }
    }

    /// Maps `u ∈ [0, 1]` into the range, rounding integers.
    pub fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = match self.scale {
            Scale::Linear => self.low + u * (self.high - self.low),
            Scale::Log => (self.low.ln() + u * (self.high.ln() - self.low.ln())).exp(),
        };
        let v = if self.integer { v.round() } else { v };
        v.clamp(self.low, self.high)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (v - self.low) / (self.high - self.low),
            Scale::Log => (v.ln() - self.low.ln()) / (self.high.ln() - self.low.ln()),
        };
        u.clamp(0.0, 1.0)
    }
}

/// Box of hyperparameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<Param>,
}

impl SearchSpace {
    pub fn new(params: Vec<Param>) -> Result<Self> {
        let s = SearchSpace { params };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(TuneError::Config("search space has no parameters".into()));
        }
        for p in &self.params {
            let ok = p.low.is_finite() && p.high.is_finite() && p.low < p.high;
            if !ok || (p.scale == Scale::Log && p.low <= 0.0) {
                return Err(TuneError::Config(format!(
                    "bad bounds for `{}`: [{}, {}]",
                    p.name, p.low, p.high
                )));
            }
        }
        for (i, p) in self.params.iter().enumerate() {
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(TuneError::Config(format!(
                    "duplicate parameter `{}`",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(u)
            .map(|(p, &u)| p.from_unit(u))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(x)
            .map(|(p, &v)| p.to_unit(v))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .params
                .iter()
                .zip(x)
                .all(|(p, &v)| v >= p.low && v <= p.high)
    }

    /// Default boosting ranges; DART adds the drop rate, GOSS the two
    /// sampling rates.
    pub fn boosting(mode: Mode) -> Self {
        let mut params = vec![
            Param::int("n_trees", 50.0, 1000.0),
            Param::log("learning_rate", 1e-3, 0.3),
            Param::int("max_depth", 2.0, 8.0),
            Param::int("min_samples_leaf", 1.0, 30.0),
            Param::linear("feature_fraction", 0.5, 1.0),
            Param::log("lambda", 1e-3, 10.0),
        ];
        params.extend(Self::mode_params(mode, 0.5));
        SearchSpace { params }
    }

    /// Narrower ranges with fewer, shallower trees, for quick sweeps.
    pub fn boosting_compact(mode: Mode) -> Self {
        let mut params = vec![
            Param::int("n_trees", 20.0, 150.0),
            Param::log("learning_rate", 0.03, 0.3),
            Param::int("max_depth", 2.0, 4.0),
            Param::int("min_samples_leaf", 1.0, 20.0),
            Param::linear("feature_fraction", 0.5, 1.0),
            Param::log("lambda", 1e-3, 10.0),
        ];
        params.extend(Self::mode_params(mode, 0.3));
        SearchSpace { params }
    }

    fn mode_params(mode: Mode, max_drop: f64) -> Vec<Param> {
        match mode {
            Mode::Gbdt => vec![],
            Mode::Dart => vec![Param::linear("drop_rate", 0.0, max_drop)],
            Mode::Goss => vec![
                Param::linear("top_rate", 0.05, 0.5),
                Param::linear("other_rate", 0.05, 0.5),
            ],
        }
    }

    /// Copy of `base` with the named fields set from `x`.
    pub fn apply(&self, base: &BoostingConfig, x: &[f64]) -> Result<BoostingConfig> {
        if x.len() != self.dim() {
            return Err(TuneError::Config(format!(
                "point has {} values for {} parameters",
                x.len(),
                self.dim()
            )));
        }
        let mut c = base.clone();
        for (p, &v) in self.params.iter().zip(x) {
            match p.name.as_str() {
                "n_trees" => c.n_trees = v.round() as usize,
                "learning_rate" => c.learning_rate = v,
                "max_depth" => c.max_depth = v.round() as usize,
                "min_samples_leaf" => c.min_samples_leaf = v.round() as usize,
                "min_gain" => c.min_gain = v,
                "feature_fraction" => c.feature_fraction = v,
                "lambda" => c.lambda = v,
                "drop_rate" => c.drop_rate = v,
                "max_dropped" => c.max_dropped = v.round() as usize,
                "top_rate" => c.top_rate = v,
                "other_rate" => c.other_rate = v,
                other => {
                    return Err(TuneError::Config(format!(
                        "unknown boosting parameter `{other}`"
                    )))
                }
            }
        }
        Ok(c)
    }
}
