//! Local minimizers: Nelder–Mead and Levenberg–Marquardt.

/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Initial simplex edge length along each coordinate.
    pub initial_step: Vec<f64>,
    pub max_evals: usize,
    /// Converged when the spread of simplex values is below this.
    pub f_tol: f64,
    /// Converged when every vertex is within this distance of the best one
    /// (per coordinate).
    pub x_tol: f64,
}

impl NelderMeadOptions {
    pub fn new(dim: usize, step: f64) -> Self {
        NelderMeadOptions {
            initial_step: vec![step; dim],
            max_evals: 2000,
            f_tol: 1e-14,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Non-finite objective values are treated as `+inf`, so callers can reject
/// infeasible points by returning `f64::INFINITY`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step[i];
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread_f = if worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_f <= opts.f_tol && spread_x <= opts.x_tol {
            converged = true;
            break;
        }
        if spread_x <= opts.x_tol * 1e-3 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let fx = eval(&x, &mut evals);
                    *vertex = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        evals,
        converged,
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresResult {
    pub x: Vec<f64>,
    /// Sum of squared residuals at `x`.
    pub cost: f64,
    pub evals: usize,
}

/// Levenberg–Marquardt polish of `min ‖r(x)‖²` from `x0`.
///
/// `residuals` fills its output slice (length `m`) and returns `false` at
/// infeasible points. The Jacobian is taken by central differences with
/// step `fd_step`, and each damped step is solved by QR on the augmented
/// system `[J; √μ·D] δ = [−r; 0]` so the normal equations are never formed.
pub fn levenberg_marquardt<F>(
    mut residuals: F,
    x0: &[f64],
    m: usize,
    fd_step: f64,
    max_iters: usize,
) -> Option<LeastSquaresResult>
where
    F: FnMut(&[f64], &mut [f64]) -> bool,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut r = vec![0.0; m];
    let mut eval = |x: &[f64], out: &mut [f64], evals: &mut usize| {
        *evals += 1;
        residuals(x, out) && out.iter().all(|v| v.is_finite())
    };
    if !eval(x0, &mut r, &mut evals) {
        return None;
    }
    let sq = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>();
    let mut x = x0.to_vec();
    let mut cost = sq(&r);
    let mut mu = 1e-3f64;
    let (mut plus, mut minus, mut trial_r) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for _ in 0..max_iters {
        let mut jac = nalgebra::DMatrix::<f64>::zeros(m + n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += fd_step;
            xm[k] -= fd_step;
            if !(eval(&xp, &mut plus, &mut evals) && eval(&xm, &mut minus, &mut evals)) {
                return Some(LeastSquaresResult { x, cost, evals });
            }
            for i in 0..m {
                jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * fd_step);
            }
        }
        let scale: Vec<f64> = (0..n)
            .map(|k| {
                (0..m)
                    .map(|i| jac[(i, k)].powi(2))
                    .sum::<f64>()
                    .sqrt()
                    .max(1e-300)
            })
            .collect();
        let mut accepted = false;
        for _ in 0..30 {
            for k in 0..n {
                for j in 0..n {
                    jac[(m + k, j)] = if j == k { mu.sqrt() * scale[k] } else { 0.0 };
                }
            }
            let mut rhs = nalgebra::DVector::<f64>::zeros(m + n);
            for i in 0..m {
                rhs[i] = -r[i];
            }
            let qr = jac.clone().qr();
            let Some(step) = qr.r().solve_upper_triangular(&(qr.q().transpose() * &rhs)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            if eval(&trial, &mut trial_r, &mut evals) {
                let c = sq(&trial_r);
                if c < cost {
                    let size = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                    let small = step.iter().all(|d| d.abs() <= 1e-14 * size);
                    let gain = cost - c;
                    x = trial;
                    std::mem::swap(&mut r, &mut trial_r);
                    cost = c;
                    mu = (mu / 3.0).max(1e-15);
                    accepted = true;
                    if small || gain <= 1e-15 * cost {
                        return Some(LeastSquaresResult { x, cost, evals });
                    }
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted || cost == 0.0 {
            break;
        }
    }
    Some(LeastSquaresResult { x, cost, evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let mut opts = NelderMeadOptions::new(2, 0.5);
        opts.max_evals = 5000;
        let r = nelder_mead(rosen, &[-1.2, 1.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn levenberg_marquardt_solves_rosenbrock_residuals() {
        let r = levenberg_marquardt(
            |x, out| {
                out[0] = 1.0 - x[0];
                out[1] = 10.0 * (x[1] - x[0] * x[0]);
                true
            },
            &[-1.2, 1.0],
            2,
            1e-7,
            200,
        )
        .unwrap();
        assert!(
            (r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let r = nelder_mead(f, &[0.5], &NelderMeadOptions::new(1, 0.1));
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }
}
