//! Three-element Windkessel simulation and parameter fitting.
//!
//! The circuit is `C · dp_c/dt = Q(t) − p_c/Rd` with inlet pressure
//! `p = Rc · Q + p_c`. Flow is linearly interpolated between samples and the
//! ODE is advanced with classic RK4. Because the ODE is linear, one sample
//! interval of RK4 (including any substeps) is an affine map
//! `p_c ← a · p_c + b · Q_i + d · Q_{i+1}`; the coefficients are obtained by
//! running the RK4 stages on unit inputs once per parameter set.

use rand::Rng;

use super::{HemoError, Quantity, Result, Waveform, WindkesselParams};
use crate::optim::{levenberg_marquardt, nelder_mead, NelderMeadOptions};
use crate::seed;

/// Periodicity tolerance relative to the cycle-mean pressure.
pub const STEADY_STATE_TOLERANCE: f64 = 1e-6;

/// Cycle cap for [`simulate_windkessel`] callers.
pub const MAX_CYCLES: usize = 200;

// RK4 substeps are added until h ≤ SUBSTEP_FRACTION · Rd·C.
const SUBSTEP_FRACTION: f64 = 0.5;
const MAX_SUBSTEPS: usize = 4096;
// |λh| beyond this leaves the RK4 stability region comfortably behind.
const MAX_STABLE_STEP: f64 = 2.5;

/// Initial capacitor pressure for a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleStart {
    /// Fixed point of the discrete one-cycle map (periodic steady state).
    Periodic,
    /// DC steady state `Rd · mean(Q)`.
    Dc,
    /// Explicit capacitor pressure, Pa.
    Value(f64),
}

/// Final cycle of a simulation and its convergence record.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub pressure: Waveform,
    /// Cycles integrated.
    pub cycles: usize,
    /// `‖p_cycle(k+1) − p_cycle(k)‖∞` for the returned cycle, Pa.
    pub mismatch: f64,
}

#[derive(Debug, Clone, Copy)]
struct IntervalMap {
    a: f64,
    b: f64,
    d: f64,
}

fn rk4_step(lambda: f64, h: f64, p: f64, g0: f64, gm: f64, g1: f64) -> f64 {
    let k1 = lambda * p + g0;
    let k2 = lambda * (p + 0.5 * h * k1) + gm;
    let k3 = lambda * (p + 0.5 * h * k2) + gm;
    let k4 = lambda * (p + h * k3) + g1;
    p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

impl IntervalMap {
    fn new(params: &WindkesselParams, dt: f64) -> Result<Self> {
        let tau = params.time_constant();
        let substeps = ((dt / (SUBSTEP_FRACTION * tau)).ceil() as usize).clamp(1, MAX_SUBSTEPS);
        let h = dt / substeps as f64;
        if h / tau > MAX_STABLE_STEP {
            return Err(HemoError::Domain(format!(
                "time constant {tau:.3e} s too short for sampling step {dt:.3e} s"
            )));
        }
        let lambda = -1.0 / tau;
        let a1 = rk4_step(lambda, h, 1.0, 0.0, 0.0, 0.0);
        let c0 = rk4_step(lambda, h, 0.0, 1.0, 0.0, 0.0);
        let cm = rk4_step(lambda, h, 0.0, 0.0, 1.0, 0.0);
        let c1 = rk4_step(lambda, h, 0.0, 0.0, 0.0, 1.0);
        let inv_c = 1.0 / params.c();
        let (mut a, mut b, mut d) = (1.0, 0.0, 0.0);
        let m = substeps as f64;
        for j in 0..substeps {
            let s0 = j as f64 / m;
            let sm = (j as f64 + 0.5) / m;
            let s1 = (j as f64 + 1.0) / m;
            a *= a1;
            b = a1 * b + (c0 * (1.0 - s0) + cm * (1.0 - sm) + c1 * (1.0 - s1)) * inv_c;
            d = a1 * d + (c0 * s0 + cm * sm + c1 * s1) * inv_c;
        }
        Ok(IntervalMap { a, b, d })
    }

    /// Advances one cycle from `p_start`, writing the capacitor pressure at
    /// every sample into `out`; returns the pressure at the end of the cycle.
    fn run_cycle(&self, flow: &[f64], p_start: f64, out: &mut [f64]) -> f64 {
        let n = flow.len();
        let mut p = p_start;
        for i in 0..n {
            out[i] = p;
            let q_next = flow[(i + 1) % n];
            p = self.a * p + self.b * flow[i] + self.d * q_next;
        }
        p
    }

    fn periodic_start(&self, flow: &[f64], scratch: &mut [f64]) -> Option<f64> {
        let offset = self.run_cycle(flow, 0.0, scratch);
        let gain = self.a.powi(flow.len() as i32);
        let denom = 1.0 - gain;
        (denom > 1e-12).then(|| offset / denom)
    }
}

fn check_flow(flow: &Waveform) -> Result<()> {
    flow.expect(Quantity::Flow)
}

/// Capacitor pressure trajectory from an explicit initial value over
/// `n_cycles` repetitions of the flow cycle; `n_cycles · len + 1` samples,
/// starting at `t = 0`.
pub fn integrate_capacitor(
    params: &WindkesselParams,
    flow: &Waveform,
    p_c0: f64,
    n_cycles: usize,
) -> Result<Vec<f64>> {
    check_flow(flow)?;
    let map = IntervalMap::new(params, flow.dt())?;
    let q = flow.samples();
    let n = q.len();
    let mut out = vec![0.0; n_cycles * n + 1];
    let mut p = p_c0;
    for k in 0..n_cycles {
        p = map.run_cycle(q, p, &mut out[k * n..(k + 1) * n]);
    }
    out[n_cycles * n] = p;
    Ok(out)
}

/// Periodic steady-state inlet pressure for a flow cycle.
///
/// Integration starts from the fixed point of the discrete cycle map, so a
/// single cycle normally meets the tolerance; `n_cycles` bounds the number
/// of cycles tried before a [`HemoError::Convergence`] is reported.
pub fn simulate_windkessel(
    params: &WindkesselParams,
    flow: &Waveform,
    n_cycles: usize,
) -> Result<Waveform> {
    simulate_windkessel_from(params, flow, n_cycles, CycleStart::Periodic).map(|s| s.pressure)
}

pub fn simulate_windkessel_from(
    params: &WindkesselParams,
    flow: &Waveform,
    n_cycles: usize,
    start: CycleStart,
) -> Result<Simulation> {
    check_flow(flow)?;
    if n_cycles == 0 {
        return Err(HemoError::Domain("n_cycles must be at least 1".into()));
    }
    let map = IntervalMap::new(params, flow.dt())?;
    let q = flow.samples();
    let n = q.len();
    let mut cycle = vec![0.0; n];
    let dc = params.rd() * flow.mean();
    let mut p_start = match start {
        CycleStart::Periodic => map.periodic_start(q, &mut cycle).unwrap_or(dc),
        CycleStart::Dc => dc,
        CycleStart::Value(v) => v,
    };
    let mut mismatch = f64::INFINITY;
    for k in 1..=n_cycles {
        let p_end = map.run_cycle(q, p_start, &mut cycle);
        // The difference between consecutive cycles decays by the cycle map
        // gain a^i ≤ 1 along the cycle, so its sup-norm is attained at t = 0.
        mismatch = (p_end - p_start).abs();
        let pressure: Vec<f64> = q
            .iter()
            .zip(&cycle)
            .map(|(qi, pc)| params.rc() * qi + pc)
            .collect();
        let mean_p = pressure.iter().sum::<f64>() / n as f64;
        if mismatch <= STEADY_STATE_TOLERANCE * mean_p.abs() {
            return Ok(Simulation {
                pressure: Waveform::new(pressure, flow.dt(), Quantity::Pressure)?,
                cycles: k,
                mismatch,
            });
        }
        p_start = p_end;
    }
    Err(HemoError::Convergence {
        cycles: n_cycles,
        mismatch,
    })
}

/// Options for [`fit_windkessel`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of multi-starts (the first is the unperturbed heuristic).
    pub starts: usize,
    pub max_evals_per_start: usize,
    /// Jitters the starts after the first.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 5,
            max_evals_per_start: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindkesselFit {
    pub params: WindkesselParams,
    /// Mean squared error between simulated and supplied pressure, Pa².
    pub residual: f64,
    /// False when the flow carries no pulsatility; then only `Rtot` is
    /// determined and the Rc/Rd split and C are placeholders.
    pub split_identifiable: bool,
    pub evaluations: usize,
}

struct Objective<'a> {
    flow: &'a [f64],
    target: &'a [f64],
    dt: f64,
    scale: f64,
    scratch: Vec<f64>,
}

impl Objective<'_> {
    fn mse(&mut self, params: &WindkesselParams) -> f64 {
        let Ok(map) = IntervalMap::new(params, self.dt) else {
            return f64::INFINITY;
        };
        let dc = params.rd() * mean(self.flow);
        let start = map
            .periodic_start(self.flow, &mut self.scratch)
            .unwrap_or(dc);
        map.run_cycle(self.flow, start, &mut self.scratch);
        let n = self.flow.len() as f64;
        self.flow
            .iter()
            .zip(&self.scratch)
            .zip(self.target)
            .map(|((q, pc), p)| {
                let e = params.rc() * q + pc - p;
                e * e
            })
            .sum::<f64>()
            / n
    }

    /// Pressure errors relative to `sqrt(scale)`; false if infeasible.
    fn residuals(&mut self, x: &[f64], out: &mut [f64]) -> bool {
        let Ok(params) = WindkesselParams::new(x[0].exp(), x[1].exp(), x[2].exp()) else {
            return false;
        };
        let Ok(map) = IntervalMap::new(&params, self.dt) else {
            return false;
        };
        let dc = params.rd() * mean(self.flow);
        let start = map
            .periodic_start(self.flow, &mut self.scratch)
            .unwrap_or(dc);
        map.run_cycle(self.flow, start, &mut self.scratch);
        let norm = self.scale.sqrt();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (params.rc() * self.flow[i] + self.scratch[i] - self.target[i]) / norm;
        }
        true
    }

    fn log_space(&mut self, x: &[f64]) -> f64 {
        match WindkesselParams::new(x[0].exp(), x[1].exp(), x[2].exp()) {
            Ok(p) => self.mse(&p) / self.scale,
            Err(_) => f64::INFINITY,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Time constant of the pressure decay over the longest low-flow stretch of
/// the cycle, if one can be found.
fn diastolic_time_constant(flow: &[f64], pressure: &[f64], dt: f64) -> Option<f64> {
    let n = flow.len();
    let q_max = flow.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let quiet: Vec<bool> = flow.iter().map(|q| q.abs() <= 0.05 * q_max).collect();
    let (mut best_start, mut best_len) = (0, 0);
    for start in 0..n {
        if !quiet[start] || quiet[(start + n - 1) % n] {
            continue;
        }
        let len = (0..n).take_while(|k| quiet[(start + k) % n]).count();
        if len > best_len {
            best_start = start;
            best_len = len;
        }
    }
    if best_len < 4 || best_len == n {
        return None;
    }
    let p0 = pressure[best_start];
    let p1 = pressure[(best_start + best_len - 1) % n];
    if p0 <= 0.0 || p1 <= 0.0 || p1 >= p0 {
        return None;
    }
    let tau = (best_len - 1) as f64 * dt / (p0 / p1).ln();
    tau.is_finite().then_some(tau)
}

/// Least-squares fit of (Rc, C, Rd) to a flow/pressure cycle pair.
///
/// Minimizes the mean squared pressure error of the periodic steady state
/// with Nelder–Mead over `(ln Rc, ln C, ln Rd)` from several deterministic
/// starts built around `Rtot₀ = mean(p)/mean(Q)`, `Rc₀ = 0.1·Rtot₀` and the
/// diastolic decay time constant, then polishes the best point with
/// Levenberg–Marquardt on the pressure residuals.
pub fn fit_windkessel(
    flow: &Waveform,
    pressure: &Waveform,
    options: &FitOptions,
) -> Result<WindkesselFit> {
    flow.expect(Quantity::Flow)?;
    pressure.expect(Quantity::Pressure)?;
    flow.check_compatible(pressure)?;
    let q = flow.samples();
    let p = pressure.samples();
    let q_mean = flow.mean();
    let p_mean = pressure.mean();
    if !(q_mean > 0.0) {
        return Err(HemoError::Domain(format!(
            "mean flow must be positive, got {q_mean}"
        )));
    }
    if !(p_mean > 0.0) {
        return Err(HemoError::Domain(format!(
            "mean pressure must be positive, got {p_mean}"
        )));
    }

    let rtot0 = p_mean / q_mean;
    let rc0 = 0.1 * rtot0;
    let rd0 = rtot0 - rc0;
    let tau0 = diastolic_time_constant(q, p, flow.dt()).unwrap_or(0.5 * flow.period());
    let c0 = tau0 / rd0;

    let q_sd = (q.iter().map(|v| (v - q_mean).powi(2)).sum::<f64>() / q.len() as f64).sqrt();
    let mut objective = Objective {
        flow: q,
        target: p,
        dt: flow.dt(),
        scale: p_mean * p_mean,
        scratch: vec![0.0; q.len()],
    };

    if q_sd <= 1e-9 * q_mean {
        // Constant flow: only the sum Rc + Rd shapes the pressure.
        let params = WindkesselParams::new(rc0, c0, rd0)?;
        let residual = objective.mse(&params);
        return Ok(WindkesselFit {
            params,
            residual,
            split_identifiable: false,
            evaluations: 1,
        });
    }

    const SPLITS: [f64; 5] = [0.1, 0.03, 0.3, 0.9, 0.1];
    const TAU_FACTORS: [f64; 5] = [1.0, 1.0, 1.0, 1.0, 0.1];
    let mut rng = seed::rng(options.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_initial = f64::INFINITY;
    let mut evaluations = 0;
    for s in 0..options.starts.max(1) {
        let split = SPLITS[s % SPLITS.len()];
        let tau = tau0 * TAU_FACTORS[s % TAU_FACTORS.len()];
        let rc = split * rtot0;
        let rd = rtot0 - rc;
        let mut x0 = vec![rc.ln(), (tau / rd).ln(), rd.ln()];
        if s > 0 {
            for v in &mut x0 {
                *v += rng.random_range(-0.05..0.05);
            }
        }
        let f_init = objective.log_space(&x0);
        evaluations += 1;
        best_initial = best_initial.min(f_init);

        let mut opts = NelderMeadOptions::new(3, 0.5);
        opts.max_evals = options.max_evals_per_start;
        opts.f_tol = 1e-24;
        opts.x_tol = 1e-10;
        let mut x = x0;
        let mut f = f_init;
        // Restart from the incumbent until the simplex stops finding progress.
        for round in 0..6 {
            let r = nelder_mead(|x| objective.log_space(x), &x, &opts);
            evaluations += r.evals;
            let improved = r.f < f;
            if improved {
                let gain = f - r.f;
                x = r.x;
                f = r.f;
                if round > 0 && gain <= 1e-14 * f.max(1e-300) {
                    break;
                }
            } else if round > 0 {
                break;
            }
            opts.initial_step = vec![0.05; 3];
        }
        // When Rd·C is short against the sample interval the Rd/C split
        // only shows in small terms; a second-order polish resolves what the
        // simplex leaves.
        let m = q.len();
        if let Some(r) = levenberg_marquardt(|x, out| objective.residuals(x, out), &x, m, 1e-6, 100)
        {
            evaluations += r.evals;
            let polished = r.cost / m as f64;
            if polished < f {
                x = r.x;
                f = polished;
            }
        }
        if best.as_ref().is_none_or(|(_, fb)| f < *fb) {
            best = Some((x, f));
        }
    }

    let (x, f) = best.expect("at least one start");
    let residual = f * objective.scale;
    if !(f < best_initial) && best_initial > 0.0 {
        return Err(HemoError::FitFailure {
            best_residual: residual,
        });
    }
    Ok(WindkesselFit {
        params: WindkesselParams::new(x[0].exp(), x[1].exp(), x[2].exp())?,
        residual,
        split_identifiable: true,
        evaluations,
    })
}
