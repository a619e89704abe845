use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CohortError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Demographics,
    /// Windkessel and wave-separation features.
    Physics,
    Mri,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [
        FeatureGroup::Demographics,
        FeatureGroup::Physics,
        FeatureGroup::Mri,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Demographics => "demographics",
            FeatureGroup::Physics => "physics",
            FeatureGroup::Mri => "mri",
        }
    }

    /// The seven non-empty subsets, singletons first.
    pub fn subsets() -> Vec<Vec<FeatureGroup>> {
        use FeatureGroup::*;
        vec![
            vec![Demographics],
            vec![Mri],
            vec![Physics],
            vec![Demographics, Mri],
            vec![Demographics, Physics],
            vec![Mri, Physics],
            vec![Demographics, Physics, Mri],
        ]
    }

    /// `demographics+physics`-style label for a set of groups, in canonical
    /// order.
    pub fn label(groups: &[FeatureGroup]) -> String {
        let mut g = groups.to_vec();
        g.sort();
        g.dedup();
        g.iter().map(|g| g.as_str()).collect::<Vec<_>>().join("+")
    }

    /// Parses `demographics,mri` or `demographics+mri`; `all` selects every
    /// group.
    pub fn parse_list(s: &str) -> Result<Vec<FeatureGroup>, CohortError> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<FeatureGroup> = s
            .split([',', '+'])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(CohortError::Config("empty feature group selection".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = CohortError;

    fn from_str(s: &str) -> Result<Self, CohortError> {
        match s.to_ascii_lowercase().as_str() {
            "demographics" | "demo" => Ok(FeatureGroup::Demographics),
            "physics" | "0d1d" | "models" => Ok(FeatureGroup::Physics),
            "mri" => Ok(FeatureGroup::Mri),
            other => Err(CohortError::Config(format!(
                "unknown feature group `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    /// Encoded as the index into the category list.
    Categorical(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub group: FeatureGroup,
    pub kind: FeatureKind,
    pub units: &'static str,
}

pub const GENDER_CATEGORIES: &[&str] = &["female", "male"];

pub const RD: &str = "R_d";
pub const RC: &str = "R_c";
pub const COMPLIANCE: &str = "C";
pub const RTOT: &str = "R_tot";
pub const WAVE_RATIO: &str = "W_b/W_tot";
pub const TARGET: &str = "mpap";

const fn num(name: &'static str, group: FeatureGroup, units: &'static str) -> FeatureSpec {
    FeatureSpec {
        name,
        group,
        kind: FeatureKind::Numeric,
        units,
    }
}

use FeatureGroup::{Demographics as D, Mri as M, Physics as P};

pub const N_FEATURES: usize = 47;

/// All predictors in canonical column order.
pub static FEATURES: [FeatureSpec; N_FEATURES] = [
    num("age", D, "years"),
    FeatureSpec {
        name: "gender",
        group: D,
        kind: FeatureKind::Categorical(GENDER_CATEGORIES),
        units: "female/male",
    },
    num("who", D, "class"),
    num("bsa", D, "m^2"),
    num(RD, P, "kg/m^4s"),
    num(RC, P, "kg/m^4s"),
    num(COMPLIANCE, P, "m^4s^2/kg"),
    num(RTOT, P, "kg/m^4s"),
    num(WAVE_RATIO, P, ""),
    num("rac_fiesta", M, "%"),
    num("syst_area_fiesta", M, "cm^2"),
    num("diast_area_fiesta", M, "cm^2"),
    num("rvedv", M, "mL"),
    num("rvedv_index", M, "mL/m^2"),
    num("rvesv", M, "mL"),
    num("rvesv_index", M, "mL/m^2"),
    num("rvef", M, "%"),
    num("rvsv", M, "mL"),
    num("rvsv_index", M, "mL/m^2"),
    num("lvedv", M, "mL"),
    num("lvedv_index", M, "mL/m^2"),
    num("lvesv", M, "mL"),
    num("lvesv_index", M, "mL/m^2"),
    num("lvef", M, "%"),
    num("lvsv", M, "mL"),
    num("lvsv_index", M, "mL/m^2"),
    num("rv_dia_mass", M, "g"),
    num("lv_dia_mass", M, "g"),
    num("lv_syst_mass", M, "g"),
    num("rv_mass_index", M, "g/m^2"),
    num("lv_mass_index", M, "g/m^2"),
    num("sept_angle_syst", M, "degrees"),
    num("sept_angle_diast", M, "degrees"),
    num("4ch_la_area", M, "mm^2"),
    num("4ch_la_length", M, "mm"),
    num("2ch_la_area", M, "mm^2"),
    num("2ch_la_length", M, "mm"),
    num("la_volume", M, "mL"),
    num("la_volume_index", M, "mL/m^2"),
    num("ao_qflowpos", M, "L/min"),
    num("ao_qfp_ind", M, "L/min/m^2"),
    num("pa_qflowpos", M, "L/min"),
    num("pa_qflowneg", M, "L/min"),
    num("pa_qfn_ind", M, "L/min/m^2"),
    num("systolic_area_pc", M, "mm^2"),
    num("diastolic_area_pc", M, "mm^2"),
    num("rac_pc", M, "%"),
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

pub fn feature_names() -> Vec<String> {
    FEATURES.iter().map(|f| f.name.to_string()).collect()
}

/// Canonical column indices of the union of `groups`.
pub fn group_columns(groups: &[FeatureGroup]) -> Vec<usize> {
    FEATURES
        .iter()
        .enumerate()
        .filter(|(_, f)| groups.contains(&f.group))
        .map(|(i, _)| i)
        .collect()
}
