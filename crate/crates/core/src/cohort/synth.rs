use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    feature_index, Cell, Cohort, CohortError, PatientRecord, Provenance, Result, FEATURES,
    GENDER_CATEGORIES, N_FEATURES,
};
use crate::hemo::{
    characteristic_impedance, read_waveform_csv, simulate_windkessel, write_waveform_csv, Quantity,
    TubeLaw, Waveform, WindkesselParams, BLOOD_DENSITY, MAX_CYCLES,
};
use crate::metrics::PH_THRESHOLD_MMHG;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::seed;

pub const MMHG: f64 = 133.322;
pub const LAWS_FILE: &str = "laws.csv";
const TRUTH_FILE: &str = "truth.csv";
const MAX_ATTEMPTS: usize = 2000;

/// Table row: `(name, [no-PH, PH] × (count, mean, std))`; group sizes 66
/// and 286. Gender's mean is the male fraction.
type Row = (&'static str, [(f64, f64, f64); 2]);

const GROUP_SIZES: [f64; 2] = [66.0, 286.0];

#[rustfmt::skip]
const TABLE: &[Row] = &[
    ("age", [(66.0, 56.61, 13.78), (286.0, 61.69, 14.24)]),
    ("gender", [(66.0, 23.0 / 66.0, 0.0), (286.0, 113.0 / 286.0, 0.0)]),
    ("who", [(56.0, 2.52, 0.54), (285.0, 3.04, 0.44)]),
    ("bsa", [(65.0, 1.88, 0.25), (286.0, 1.82, 0.22)]),
    ("rac_fiesta", [(66.0, 26.39, 15.43), (286.0, 13.68, 8.93)]),
    ("syst_area_fiesta", [(66.0, 7.62, 2.17), (286.0, 9.78, 2.78)]),
    ("diast_area_fiesta", [(66.0, 6.08, 1.71), (286.0, 8.66, 2.57)]),
    ("rvedv", [(66.0, 118.93, 36.00), (286.0, 159.58, 58.27)]),
    ("rvedv_index", [(66.0, 53.78, 21.83), (286.0, 73.92, 39.39)]),
    ("rvesv", [(66.0, 55.41, 20.68), (286.0, 102.48, 49.92)]),
    ("rvesv_index", [(66.0, 24.64, 10.84), (286.0, 47.63, 30.19)]),
    ("rvef", [(66.0, 53.32, 9.86), (286.0, 38.05, 13.59)]),
    ("rvsv", [(66.0, 63.52, 22.61), (286.0, 57.15, 23.39)]),
    ("rvsv_index", [(66.0, 29.14, 13.90), (286.0, 26.32, 15.02)]),
    ("lvedv", [(66.0, 116.57, 33.09), (286.0, 91.30, 27.33)]),
    ("lvedv_index", [(66.0, 53.16, 21.90), (286.0, 41.25, 19.20)]),
    ("lvesv", [(66.0, 34.27, 15.66), (286.0, 31.32, 14.56)]),
    ("lvesv_index", [(66.0, 16.85, 16.81), (286.0, 14.01, 8.18)]),
    ("lvef", [(66.0, 71.13, 8.54), (286.0, 65.81, 10.92)]),
    ("lvsv", [(66.0, 82.30, 23.30), (286.0, 59.97, 19.93)]),
    ("lvsv_index", [(66.0, 38.07, 16.20), (286.0, 27.20, 13.51)]),
    ("rv_dia_mass", [(66.0, 22.62, 6.80), (283.0, 44.48, 25.47)]),
    ("lv_dia_mass", [(66.0, 91.47, 27.71), (286.0, 90.64, 24.98)]),
    ("lv_syst_mass", [(66.0, 111.74, 32.17), (286.0, 99.83, 26.39)]),
    ("rv_mass_index", [(66.0, 10.44, 4.94), (285.0, 20.94, 15.09)]),
    ("lv_mass_index", [(59.0, 40.90, 17.87), (243.0, 39.84, 18.99)]),
    ("sept_angle_syst", [(66.0, 139.95, 11.68), (286.0, 172.51, 22.11)]),
    ("sept_angle_diast", [(66.0, 134.21, 8.28), (286.0, 145.01, 11.93)]),
    ("4ch_la_area", [(66.0, 1921.95, 387.56), (286.0, 1785.95, 556.53)]),
    ("4ch_la_length", [(66.0, 55.76, 7.86), (286.0, 55.62, 8.60)]),
    ("2ch_la_area", [(66.0, 1764.62, 496.75), (286.0, 1901.67, 545.35)]),
    ("2ch_la_length", [(66.0, 48.66, 9.08), (286.0, 52.12, 9.33)]),
    ("la_volume", [(66.0, 55.22, 17.96), (286.0, 54.16, 25.36)]),
    ("la_volume_index", [(66.0, 24.95, 10.14), (286.0, 23.24, 10.45)]),
    ("ao_qflowpos", [(65.0, 6.09, 1.50), (285.0, 5.29, 1.50)]),
    ("ao_qfp_ind", [(65.0, 2.79, 1.18), (285.0, 2.44, 1.15)]),
    ("pa_qflowpos", [(66.0, 5.50, 1.84), (284.0, 5.00, 1.97)]),
    ("pa_qflowneg", [(66.0, 0.62, 0.59), (285.0, 1.07, 0.83)]),
    ("pa_qfn_ind", [(66.0, 9.70, 7.19), (284.0, 17.49, 9.85)]),
    ("systolic_area_pc", [(66.0, 731.05, 236.42), (284.0, 950.17, 268.98)]),
    ("diastolic_area_pc", [(66.0, 619.82, 162.71), (284.0, 866.42, 244.57)]),
    ("rac_pc", [(66.0, 17.02, 13.70), (284.0, 10.01, 8.14)]),
];

/// Per-feature group moments and observed fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMoments {
    pub name: String,
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub observed: [f64; 2],
}

/// Ground-truth physiology priors of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupPriors {
    /// Mean total resistance, kg/m⁴s.
    pub rtot_mean: f64,
    /// Coefficient of variation of the lognormal `Rtot`.
    pub rtot_cv: f64,
    /// Median `Rc / Rtot`.
    pub rc_fraction: f64,
    /// Median `Rd · C`, s.
    pub tau: f64,
    pub ratio_mean: f64,
    pub ratio_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub positive_fraction: f64,
    /// Demographic and MRI moments, index 0 = no PH, 1 = PH.
    pub moments: Vec<FeatureMoments>,
    pub priors: [GroupPriors; 2],
    /// Target mPAP group means used to calibrate the generator, mmHg.
    pub mpap_means: [f64; 2],
    /// Standard deviation of the additive mPAP noise, mmHg.
    pub mpap_noise: f64,
    /// Spread of the per-patient severity that places demographic and MRI
    /// features between the two group means (0 = group mean, 1 = PH mean).
    /// Larger values mean more group overlap; 0 makes features independent
    /// given the group.
    pub severity_spread: f64,
    /// Relative standard deviation of the area noise.
    pub waveform_noise: f64,
    pub samples_per_cycle: usize,
    /// Drop cells at the rate implied by the table counts.
    pub missing_values: bool,
    pub label_threshold: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let moments = TABLE
            .iter()
            .map(|(name, g)| FeatureMoments {
                name: name.to_string(),
                mean: [g[0].1, g[1].1],
                std: [g[0].2, g[1].2],
                observed: [g[0].0 / GROUP_SIZES[0], g[1].0 / GROUP_SIZES[1]],
            })
            .collect();
        SynthConfig {
            n_patients: 352,
            positive_fraction: 286.0 / 352.0,
            moments,
            priors: [
                GroupPriors {
                    rtot_mean: 6.83e7,
                    rtot_cv: 0.35,
                    rc_fraction: 0.116,
                    tau: 0.6,
                    ratio_mean: 0.24,
                    ratio_std: 0.10,
                },
                GroupPriors {
                    rtot_mean: 1.56e8,
                    rtot_cv: 0.35,
                    rc_fraction: 0.059,
                    tau: 0.5,
                    ratio_mean: 0.39,
                    ratio_std: 0.11,
                },
            ],
            mpap_means: [19.67, 46.95],
            mpap_noise: 6.0,
            severity_spread: 0.5,
            waveform_noise: 1e-4,
            samples_per_cycle: 100,
            missing_values: true,
            label_threshold: PH_THRESHOLD_MMHG,
            seed: 2024,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CohortError::Config(m));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad(format!(
                "positive_fraction must lie in (0,1), got {}",
                self.positive_fraction
            ));
        }
        for m in &self.moments {
            if feature_index(&m.name).is_none() {
                return bad(format!("unknown feature `{}`", m.name));
            }
            for g in 0..2 {
                if !(m.std[g] >= 0.0 && m.mean[g].is_finite()) {
                    return bad(format!(
                        "`{}`: std must be non-negative and mean finite",
                        m.name
                    ));
                }
                if !(0.0..=1.0).contains(&m.observed[g]) {
                    return bad(format!("`{}`: observed fraction outside [0,1]", m.name));
                }
            }
        }
        for p in &self.priors {
            let ok = p.rtot_mean > 0.0
                && p.rtot_cv >= 0.0
                && p.rc_fraction > 0.0
                && p.rc_fraction < 1.0
                && p.tau > 0.0
                && p.ratio_std >= 0.0
                && (0.0..0.5).contains(&p.ratio_mean);
            if !ok {
                return bad(format!("invalid physiology priors {p:?}"));
            }
        }
        if !(self.mpap_noise >= 0.0 && self.waveform_noise >= 0.0 && self.severity_spread >= 0.0) {
            return bad("noise scales must be non-negative".into());
        }
        if self.samples_per_cycle < crate::hemo::MIN_SAMPLES {
            return bad(format!(
                "samples_per_cycle must be at least {}",
                crate::hemo::MIN_SAMPLES
            ));
        }
        Ok(())
    }
}

/// Generated waveforms and ground truth of one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientWaveforms {
    pub flow: Waveform,
    pub area: Waveform,
    pub law: TubeLaw,
    pub truth: WindkesselParams,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub cohort: Cohort,
    pub waveforms: Vec<PatientWaveforms>,
    /// mPAP per unit `Rtot · mean(Q)` (in mmHg).
    pub alpha: f64,
    /// mPAP per unit wave power ratio, mmHg.
    pub beta: f64,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn lognormal(rng: &mut ChaCha8Rng, mean: f64, cv: f64) -> f64 {
    let s2 = (1.0 + cv * cv).ln();
    mean * (normal(rng) * s2.sqrt() - 0.5 * s2).exp()
}

/// Gaussian draw clamped to a plausible range.
fn draw_feature(rng: &mut ChaCha8Rng, name: &str, mean: f64, std: f64) -> f64 {
    let v = mean + std * normal(rng);
    clamp_feature(name, &[(mean, std)], v)
}

/// Clamps to the union of the plausible ranges of the given moments.
fn clamp_feature(name: &str, moments: &[(f64, f64)], v: f64) -> f64 {
    let unit = FEATURES[feature_index(name).expect("validated")].units;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(mean, std) in moments {
        lo = lo.min((mean - 3.0 * std).max(0.05 * mean));
        hi = hi.max(mean + 4.0 * std);
    }
    match name {
        "age" => (lo, hi) = (18.0, 90.0),
        "who" => return v.round().clamp(1.0, 4.0),
        "pa_qflowneg" => lo = 0.0,
        _ => {}
    }
    if unit == "%" {
        hi = hi.min(100.0);
    }
    let v = v.clamp(lo, hi);
    if name == "age" {
        v.round()
    } else {
        v
    }
}

/// Unit-mean flow shape: systolic half sine over 35% of the cycle and a
/// short backflow dip.
fn flow_shape(n: usize) -> Vec<f64> {
    let shape: Vec<f64> = (0..n)
        .map(|k| {
            let u = k as f64 / n as f64;
            if u < 0.35 {
                (std::f64::consts::PI * u / 0.35).sin()
            } else if u < 0.45 {
                -0.1 * (std::f64::consts::PI * (u - 0.35) / 0.1).sin()
            } else {
                0.0
            }
        })
        .collect();
    let mean = shape.iter().sum::<f64>() / n as f64;
    shape.into_iter().map(|v| v / mean).collect()
}

fn increments(p: &[f64], q: &[f64]) -> (f64, f64, f64) {
    let n = p.len();
    let (mut x, mut s, mut pp) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let j = (i + 1) % n;
        let (dp, dq) = (p[j] - p[i], q[j] - q[i]);
        x += dp * dq;
        s += dq * dq;
        pp += dp * dp;
    }
    (x, s, pp)
}

fn area_for(law: &TubeLaw, p: &[f64]) -> Option<Vec<f64>> {
    p.iter().map(|&v| law.area(v)).collect()
}

fn zc_for(pressure: &Waveform, law: &TubeLaw) -> Option<f64> {
    let area = Waveform::new(
        area_for(law, pressure.samples())?,
        pressure.dt(),
        Quantity::Area,
    )
    .ok()?;
    characteristic_impedance(pressure, &area, law).ok()
}

/// Tube stiffness whose Bramwell–Hill impedance equals `target`, by
/// bisection in `ln s` (impedance grows with stiffness).
fn stiffness_for(pressure: &Waveform, a0: f64, target: f64) -> Option<TubeLaw> {
    let p0 = pressure
        .samples()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let law = |s: f64| TubeLaw::new(p0, a0, s).ok();
    let z = |s: f64| law(s).and_then(|l| zc_for(pressure, &l));
    let (mut lo, mut hi) = (1e2f64.ln(), 1e9f64.ln());
    if !(z(lo.exp())? < target && z(hi.exp())? > target) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if z(mid.exp())? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    law((0.5 * (lo + hi)).exp())
}

struct Draw {
    values: Vec<Cell>,
    mpap: f64,
    waves: PatientWaveforms,
}

fn draw_patient(
    cfg: &SynthConfig,
    ph: bool,
    alpha: f64,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Draw>> {
    let g = usize::from(ph);
    // Each feature is mean₀ + w·(mean₁ − mean₀) plus residual noise, with
    // the residual shrunk so the group variance stays at std².
    let spread = cfg.severity_spread;
    let w = g as f64 + spread * normal(rng);
    let mut values = vec![Cell::Missing; N_FEATURES];
    for m in &cfg.moments {
        let j = feature_index(&m.name).expect("validated");
        let delta = m.mean[1] - m.mean[0];
        values[j] = if m.name == "gender" {
            let p = (m.mean[0] + w * delta).clamp(0.0, 1.0);
            let male = rng.random_bool(p);
            Cell::Category(GENDER_CATEGORIES[usize::from(male)].to_string())
        } else {
            let std = m.std[g];
            let residual = (std * std - (delta * spread).powi(2))
                .max((0.2 * std).powi(2))
                .sqrt();
            let v = m.mean[0] + w * delta + residual * normal(rng);
            let bounds = [(m.mean[0], m.std[0]), (m.mean[1], m.std[1])];
            Cell::Number(clamp_feature(&m.name, &bounds, v))
        };
    }
    let num = |name: &str, fallback: f64| {
        feature_index(name)
            .and_then(|j| values[j].as_number())
            .unwrap_or(fallback)
    };
    let mean_flow_lpm = (num("pa_qflowpos", 5.0) - num("pa_qflowneg", 0.8)).max(1.0);
    let mean_flow = mean_flow_lpm / 60_000.0;
    let a0 = num("diastolic_area_pc", 700.0) * 1e-6;

    let pr = &cfg.priors[g];
    let heart_rate = (72.0 + 8.0 * normal(rng)).clamp(50.0, 110.0);
    let period = 60.0 / heart_rate;
    let n = cfg.samples_per_cycle;
    let dt = period / n as f64;
    let flow: Vec<f64> = flow_shape(n).into_iter().map(|s| s * mean_flow).collect();
    let flow = Waveform::new(flow, dt, Quantity::Flow)?;

    let rtot = lognormal(rng, pr.rtot_mean, pr.rtot_cv);
    let frac = (pr.rc_fraction * (0.2 * normal(rng)).exp()).clamp(0.02, 0.35);
    let tau = (pr.tau * (0.2 * normal(rng)).exp()).clamp(0.2, 1.5);
    let rc = frac * rtot;
    let rd = rtot - rc;
    let params = WindkesselParams::new(rc, tau / rd, rd)?;
    let pressure = simulate_windkessel(&params, &flow, MAX_CYCLES)?;

    // Backward power fraction reachable by some impedance: with increments
    // correlated at ρ the ratio is bounded below by (1 − |ρ|)/2.
    let (x, s, pp) = increments(pressure.samples(), flow.samples());
    let rho_inc = x / (s * pp).sqrt();
    let r_lo = 0.5 * (1.0 - rho_inc.abs()) + 0.005;
    let ratio = (pr.ratio_mean + pr.ratio_std * normal(rng)).clamp(r_lo.max(0.02), 0.49);
    let k = 1.0 - 2.0 * ratio;
    let disc = (x * x - s * pp * k * k).max(0.0).sqrt();
    // Two impedances give the same ratio; take the one nearer Rc.
    let roots = [(x - disc) / (s * k), (x + disc) / (s * k)];
    let zc = if (roots[0] / rc).ln().abs() <= (roots[1] / rc).ln().abs() {
        roots[0]
    } else {
        roots[1]
    };
    let Some(law) = stiffness_for(&pressure, a0, zc) else {
        return Ok(None);
    };
    let Some(mut area) = area_for(&law, pressure.samples()) else {
        return Ok(None);
    };
    if area.iter().any(|&a| a > 4.0 * a0) {
        return Ok(None);
    }
    for a in &mut area {
        *a *= 1.0 + cfg.waveform_noise * normal(rng);
    }
    let area = Waveform::new(area, dt, Quantity::Area)?;

    let mpap = alpha * rtot * mean_flow / MMHG + beta * ratio + cfg.mpap_noise * normal(rng);
    Ok(Some(Draw {
        values,
        mpap,
        waves: PatientWaveforms {
            flow,
            area,
            law,
            truth: params,
            ratio,
        },
    }))
}

/// Fits `(α, β) ≥ 0` so that the label-conditioned group means of
/// `α·Rtot·Q̄ + β·r + ε` match the targets, on a fixed Monte Carlo sample.
fn calibrate(cfg: &SynthConfig) -> (f64, f64) {
    const M: usize = 4000;
    let mut rng = seed::rng(seed::derive(0x5EED_CA1B, "calibration"));
    let flow_moments = |name: &str, g: usize| {
        cfg.moments
            .iter()
            .find(|m| m.name == name)
            .map_or((5.0, 0.0), |m| (m.mean[g], m.std[g]))
    };
    let mut samples: [Vec<(f64, f64, f64)>; 2] = [Vec::with_capacity(M), Vec::with_capacity(M)];
    for (g, out) in samples.iter_mut().enumerate() {
        let pr = &cfg.priors[g];
        let (qp, qps) = flow_moments("pa_qflowpos", g);
        let (qn, qns) = flow_moments("pa_qflowneg", g);
        for _ in 0..M {
            let pos = draw_feature(&mut rng, "pa_qflowpos", qp, qps);
            let neg = draw_feature(&mut rng, "pa_qflowneg", qn, qns);
            let q = (pos - neg).max(1.0) / 60_000.0;
            let u = lognormal(&mut rng, pr.rtot_mean, pr.rtot_cv) * q / MMHG;
            let r = (pr.ratio_mean + pr.ratio_std * normal(&mut rng)).clamp(0.02, 0.49);
            out.push((u, r, cfg.mpap_noise * normal(&mut rng)));
        }
    }
    let t = cfg.label_threshold;
    let loss = |v: &[f64]| {
        let (alpha, beta) = (v[0].exp(), v[1].abs());
        let mut err = 0.0;
        for (g, s) in samples.iter().enumerate() {
            let kept: Vec<f64> = s
                .iter()
                .map(|(u, r, e)| alpha * u + beta * r + e)
                .filter(|m| (*m >= t) == (g == 1))
                .collect();
            if kept.len() < M / 50 {
                return f64::INFINITY;
            }
            let mean = kept.iter().sum::<f64>() / kept.len() as f64;
            err += (mean / cfg.mpap_means[g] - 1.0).powi(2);
        }
        err
    };
    let mut opts = NelderMeadOptions::new(2, 0.5);
    opts.max_evals = 2000;
    opts.f_tol = 1e-14;
    let mut best = nelder_mead(&loss, &[0.5f64.ln(), 10.0], &opts);
    for _ in 0..3 {
        let r = nelder_mead(&loss, &best.x, &opts);
        if r.f < best.f {
            best = r;
        } else {
            break;
        }
    }
    (best.x[0].exp(), best.x[1].abs())
}

/// Draws a synthetic cohort with physiologically consistent waveforms.
///
/// Physics columns are left missing; they are meant to be recomputed from
/// the waveforms. A patient whose mPAP falls on the wrong side of the label
/// threshold for its drawn group is redrawn.
pub fn synth_cohort(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let (alpha, beta) = calibrate(cfg);
    let mut label_rng = seed::rng(seed::derive(cfg.seed, "labels"));
    let mut missing_rng = seed::rng(seed::derive(cfg.seed, "missing"));
    let patients = seed::derive(cfg.seed, "patients");

    let mut records = Vec::with_capacity(cfg.n_patients);
    let mut waveforms = Vec::with_capacity(cfg.n_patients);
    for i in 0..cfg.n_patients {
        let ph = label_rng.random_bool(cfg.positive_fraction);
        let mut rng = seed::rng(seed::derive_index(patients, i as u64));
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            if let Some(d) = draw_patient(cfg, ph, alpha, beta, &mut rng)? {
                if (d.mpap >= cfg.label_threshold) == ph {
                    accepted = Some(d);
                    break;
                }
            }
        }
        let mut d = accepted.ok_or_else(|| {
            CohortError::Config(format!(
                "patient {i}: no draw matched its group after {MAX_ATTEMPTS} attempts"
            ))
        })?;
        if cfg.missing_values {
            let g = usize::from(ph);
            for m in &cfg.moments {
                let j = feature_index(&m.name).expect("validated");
                if missing_rng.random::<f64>() >= m.observed[g] {
                    d.values[j] = Cell::Missing;
                }
            }
        }
        records.push(PatientRecord {
            values: d.values,
            mpap: d.mpap,
        });
        waveforms.push(d.waves);
    }
    Ok(SynthOutput {
        cohort: Cohort::new(records, Provenance::Synthetic { seed: cfg.seed })?,
        waveforms,
        alpha,
        beta,
    })
}

/// `dir/patient_NNNN.csv` for the 0-based record index.
pub fn waveform_path(dir: &Path, patient: usize) -> PathBuf {
    dir.join(format!("patient_{patient:04}.csv"))
}

/// Writes every patient's waveform file, the tube-law manifest and the
/// generator's ground truth into `dir`.
pub fn write_synth_waveforms(dir: &Path, waveforms: &[PatientWaveforms]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, w) in waveforms.iter().enumerate() {
        let mut out = BufWriter::new(File::create(waveform_path(dir, i))?);
        write_waveform_csv(&mut out, &w.flow, &w.area)?;
        out.flush()?;
    }
    let mut laws = csv::Writer::from_path(dir.join(LAWS_FILE))?;
    laws.write_record(["patient", "p0", "a0", "stiffness", "rho"])?;
    for (i, w) in waveforms.iter().enumerate() {
        let l = &w.law;
        laws.write_record([
            i.to_string(),
            l.p0.to_string(),
            l.a0.to_string(),
            l.stiffness.to_string(),
            l.rho.to_string(),
        ])?;
    }
    laws.flush()?;
    let mut truth = csv::Writer::from_path(dir.join(TRUTH_FILE))?;
    truth.write_record(["patient", "rc", "c", "rd", "rtot", "wb_wtot"])?;
    for (i, w) in waveforms.iter().enumerate() {
        let t = &w.truth;
        truth.write_record([
            i.to_string(),
            t.rc().to_string(),
            t.c().to_string(),
            t.rd().to_string(),
            t.rtot().to_string(),
            w.ratio.to_string(),
        ])?;
    }
    truth.flush()?;
    Ok(())
}

/// Tube laws from the manifest, indexed by patient.
pub fn read_laws(dir: &Path) -> Result<Vec<TubeLaw>> {
    let path = dir.join(LAWS_FILE);
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(&path)?));
    let mut laws = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize, name: &str| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CohortError::Cell {
                    row,
                    column: name.to_string(),
                    message: format!("bad value in {}", path.display()),
                })
        };
        let patient = field(0, "patient")? as usize;
        if patient != row {
            return Err(CohortError::Cell {
                row,
                column: "patient".into(),
                message: format!("expected patient {row}, found {patient}"),
            });
        }
        let rho = if rec.len() > 4 {
            field(4, "rho")?
        } else {
            BLOOD_DENSITY
        };
        laws.push(TubeLaw::with_density(
            field(1, "p0")?,
            field(2, "a0")?,
            field(3, "stiffness")?,
            rho,
        )?);
    }
    Ok(laws)
}

pub fn read_patient_waveforms(dir: &Path, patient: usize) -> Result<(Waveform, Waveform)> {
    let path = waveform_path(dir, patient);
    let file = File::open(&path).map_err(|e| {
        CohortError::Io(std::io::Error::new(
            e.kind(),
            format!(
                "waveform file for patient {patient} ({}): {e}",
                path.display()
            ),
        ))
    })?;
    read_waveform_csv(BufReader::new(file))
        .map_err(|source| CohortError::Patient { patient, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, n: usize) -> SynthConfig {
        SynthConfig {
            n_patients: n,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_table_matches_schema() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.moments.len(), 42);
        let physics = [super::super::RD, super::super::RC, super::super::COMPLIANCE];
        assert!(cfg
            .moments
            .iter()
            .all(|m| !physics.contains(&m.name.as_str())));
    }

    #[test]
    fn deterministic() {
        let a = synth_cohort(&small(7, 12)).unwrap();
        let b = synth_cohort(&small(7, 12)).unwrap();
        assert_eq!(a.cohort, b.cohort);
        assert_eq!(a.waveforms, b.waveforms);
        let c = synth_cohort(&small(8, 12)).unwrap();
        assert_ne!(a.cohort, c.cohort);
    }

    #[test]
    fn labels_agree_with_groups_and_physics_is_missing() {
        let out = synth_cohort(&small(3, 30)).unwrap();
        let rtot = feature_index(super::super::RTOT).unwrap();
        for r in out.cohort.records() {
            assert!(r.values[rtot].is_missing());
        }
        assert!(out.alpha > 0.0 && out.beta >= 0.0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(1, 5);
        cfg.positive_fraction = 1.0;
        assert!(synth_cohort(&cfg).is_err());
        let mut cfg = small(1, 5);
        cfg.moments[0].std[1] = -1.0;
        assert!(synth_cohort(&cfg).is_err());
    }

    #[test]
    fn waveform_directory_round_trip() {
        let out = synth_cohort(&small(5, 3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_synth_waveforms(dir.path(), &out.waveforms).unwrap();
        let laws = read_laws(dir.path()).unwrap();
        assert_eq!(laws.len(), 3);
        assert_eq!(laws[2], out.waveforms[2].law);
        let (q, a) = read_patient_waveforms(dir.path(), 1).unwrap();
        assert_eq!(q.samples(), out.waveforms[1].flow.samples());
        assert_eq!(a.samples(), out.waveforms[1].area.samples());
        assert!(read_patient_waveforms(dir.path(), 9)
            .unwrap_err()
            .to_string()
            .contains("patient 9"));
    }
}
