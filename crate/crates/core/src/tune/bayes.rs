use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{Result, SearchSpace, TuneError};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct BayesOptions {
    /// Total number of objective evaluations.
    pub budget: usize,
    /// Size of the quasi-random initial design.
    pub initial: usize,
    /// Random candidates scored per acquisition step.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for BayesOptions {
    fn default() -> Self {
        BayesOptions {
            budget: 200,
            initial: 20,
            candidates: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub iteration: usize,
    pub point: Vec<f64>,
    /// `None` when the objective was not finite.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub best_objective: f64,
    pub best_iteration: usize,
    pub history: Vec<Trial>,
}

impl TuneResult {
    /// Best objective seen up to and including each iteration.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|t| {
                if let Some(v) = t.objective {
                    best = best.min(v);
                }
                best
            })
            .collect()
    }

    /// `iteration,objective,<param>...`; failed evaluations leave the
    /// objective empty.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iteration".to_string(), "objective".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for t in &self.history {
            let mut row = vec![
                t.iteration.to_string(),
                t.objective.map_or(String::new(), |v| v.to_string()),
            ];
            row.extend(t.point.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Default)]
struct Observations {
    history: Vec<Trial>,
    seen_u: Vec<Vec<f64>>,
    ok_u: Vec<Vec<f64>>,
    ok_y: Vec<f64>,
}

impl Observations {
    fn record(&mut self, space: &SearchSpace, x: Vec<f64>, v: f64) {
        let u = space.to_unit(&x);
        let value = v.is_finite().then_some(v);
        if let Some(v) = value {
            self.ok_u.push(u.clone());
            self.ok_y.push(v);
        }
        self.seen_u.push(u);
        self.history.push(Trial {
            iteration: self.history.len(),
            point: x,
            objective: value,
        });
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points `1..=n` with a random Cranley–Patterson rotation.
fn halton_design<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(TuneError::Config(format!(
            "at most {} dimensions supported",
            PRIMES.len()
        )));
    }
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    Ok((1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect())
}

fn matern52(r: f64, ls: f64) -> f64 {
    let s = 5f64.sqrt() * r / ls;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

const LENGTHSCALES: [f64; 10] = [0.05, 0.08, 0.12, 0.18, 0.27, 0.4, 0.6, 0.9, 1.35, 2.0];
const NOISES: [f64; 4] = [1e-6, 1e-4, 1e-2, 1e-1];

/// Zero-mean GP on standardized targets with unit signal variance.
struct Gp {
    x: Vec<Vec<f64>>,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    ls: f64,
}

impl Gp {
    /// Lengthscale and noise by grid search on the log marginal likelihood.
    fn fit(x: &[Vec<f64>], y: &[f64]) -> Option<Gp> {
        let n = x.len();
        let yv = DVector::from_column_slice(y);
        let mut best: Option<(f64, Gp)> = None;
        for &ls in &LENGTHSCALES {
            let base = DMatrix::from_fn(n, n, |i, j| matern52(dist(&x[i], &x[j]), ls));
            for &noise in &NOISES {
                let mut k = base.clone();
                for i in 0..n {
                    k[(i, i)] += noise + 1e-10;
                }
                let Some(chol) = Cholesky::new(k) else {
                    continue;
                };
                let alpha = chol.solve(&yv);
                let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
                let lml = -0.5 * yv.dot(&alpha) - log_det;
                if !lml.is_finite() {
                    continue;
                }
                if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                    best = Some((
                        lml,
                        Gp {
                            x: x.to_vec(),
                            alpha,
                            chol,
                            ls,
                        },
                    ));
                }
            }
        }
        best.map(|(_, gp)| gp)
    }

    fn predict(&self, u: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| matern52(dist(xi, u), self.ls)),
        );
        let mu = ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .map_or(0.0, |v| v.norm_squared());
        (mu, (1.0 - v).max(1e-12).sqrt())
    }
}

fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    const XI: f64 = 0.01;
    let imp = best - mu - XI;
    let z = imp / sigma;
    let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (imp * cdf + sigma * pdf).max(0.0)
}

/// Sequential model-based minimization of `objective` over `space`.
///
/// A rotated Halton design of `initial` points is followed by proposals
/// maximizing expected improvement under a Matérn 5/2 Gaussian process
/// fitted to the successful evaluations in unit-cube coordinates. Integer
/// parameters are rounded before evaluation. Non-finite objective values
/// are recorded as failures and kept out of the surrogate.
pub fn bayes_optimize<F>(
    space: &SearchSpace,
    mut objective: F,
    opts: &BayesOptions,
) -> Result<TuneResult>
where
    F: FnMut(&[f64]) -> f64,
{
    space.validate()?;
    if opts.initial == 0 || opts.budget < opts.initial {
        return Err(TuneError::Config(format!(
            "budget {} must be at least the initial design size {} (> 0)",
            opts.budget, opts.initial
        )));
    }
    let dim = space.dim();
    let mut rng = seed::rng(seed::derive(opts.seed, "bayes"));
    let mut obs = Observations::default();
    for u in halton_design(opts.initial, dim, &mut rng)? {
        let x = space.from_unit(&u);
        let v = objective(&x);
        obs.record(space, x, v);
    }
    while obs.history.len() < opts.budget {
        let x = propose(
            space,
            &obs.ok_u,
            &obs.ok_y,
            &obs.seen_u,
            opts.candidates,
            &mut rng,
        );
        let v = objective(&x);
        obs.record(space, x, v);
    }
    let history = obs.history;

    let (best_iteration, best_objective) = history
        .iter()
        .filter_map(|t| t.objective.map(|v| (t.iteration, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if b <= v => acc,
            _ => Some((i, v)),
        })
        .ok_or(TuneError::AllFailed)?;
    Ok(TuneResult {
        names: space.names(),
        best: history[best_iteration].point.clone(),
        best_objective,
        best_iteration,
        history,
    })
}

fn propose<R: Rng>(
    space: &SearchSpace,
    ok_u: &[Vec<f64>],
    ok_y: &[f64],
    seen_u: &[Vec<f64>],
    n_candidates: usize,
    rng: &mut R,
) -> Vec<f64> {
    let dim = space.dim();
    let random_point =
        |rng: &mut R| -> Vec<f64> { (0..dim).map(|_| rng.random::<f64>()).collect() };
    let candidates: Vec<Vec<f64>> = (0..n_candidates.max(1))
        .map(|_| random_point(rng))
        .collect();
    let gp = if ok_y.len() >= 2 {
        let mean = ok_y.iter().sum::<f64>() / ok_y.len() as f64;
        let sd = (ok_y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ok_y.len() as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let y: Vec<f64> = ok_y.iter().map(|v| (v - mean) / sd).collect();
        let best = y.iter().copied().fold(f64::INFINITY, f64::min);
        Gp::fit(ok_u, &y).map(|gp| (gp, best))
    } else {
        None
    };
    let Some((gp, best)) = gp else {
        return space.from_unit(&candidates[0]);
    };
    let ei = |u: &[f64]| {
        let (mu, s) = gp.predict(u);
        expected_improvement(mu, s, best)
    };
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, u)| (ei(u), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut nm = NelderMeadOptions::new(dim, 0.05);
    nm.max_evals = 200 * dim;
    nm.f_tol = 1e-12;
    let mut refined: Vec<(f64, Vec<f64>)> = scored
        .iter()
        .take(5)
        .map(|&(_, i)| {
            let r = nelder_mead(
                |u: &[f64]| {
                    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        f64::INFINITY
                    } else {
                        -ei(u)
                    }
                },
                &candidates[i],
                &nm,
            );
            (-r.f, r.x)
        })
        .collect();
    refined.sort_by(|a, b| b.0.total_cmp(&a.0));

    let is_seen = |x: &[f64]| {
        let u = space.to_unit(x);
        seen_u
            .iter()
            .any(|s| s.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-12))
    };
    refined
        .iter()
        .map(|(_, u)| space.from_unit(u))
        .chain(scored.iter().map(|&(_, i)| space.from_unit(&candidates[i])))
        .find(|x| !is_seen(x))
        .unwrap_or_else(|| space.from_unit(&random_point(rng)))
}
