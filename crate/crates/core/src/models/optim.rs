//! Derivative-free simplex minimization with seeded restarts, followed by a
//! quasi-Newton polish on finite-difference gradients and an optional Newton
//! refinement for objectives whose last digits are dominated by rounding.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    /// Iteration cap for each simplex run.
    pub max_iter: usize,
    /// Convergence when every vertex lies within this sup-norm distance of the best one.
    pub tol: f64,
    /// Extra runs started from the incumbent with a randomized simplex.
    pub restarts: usize,
    pub seed: u64,
    /// BFGS iterations run from the simplex optimum; 0 disables the polish.
    pub polish_iter: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
            restarts: 3,
            seed: 0x5EED,
            polish_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// One Nelder–Mead run with dimension-adaptive coefficients.
pub(crate) fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    max_iter: usize,
    tol: f64,
) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(f, v)).collect();
    let mut order: Vec<usize> = (0..=n).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        let diameter = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = fv[worst] - fv[best];
        // A flat simplex at a boundary optimum (parameter running off to ±inf in
        // transformed coordinates) never shrinks; identical values end the run.
        let flat = fv[best].is_finite() && spread <= 4.0 * f64::EPSILON * fv[best].abs();
        if diameter < tol || flat {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(f, &xr);
        if fr < fv[best] {
            let xe = along(alpha * gamma);
            let fe = eval(f, &xe);
            if fe < fr {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if fr < fv[second] {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        // outside contraction when the reflection improved on the worst, inside otherwise
        let xc = if fr < fv[worst] {
            along(alpha * rho)
        } else {
            along(-rho)
        };
        let fc = eval(f, &xc);
        if fc < fv[worst].min(fr) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            for (x, b) in simplex[i].iter_mut().zip(&xb) {
                *x = b + sigma * (*x - b);
            }
            fv[i] = eval(f, &simplex[i]);
        }
    }
    order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
    Minimum {
        x: simplex[order[0]].clone(),
        f: fv[order[0]],
        iterations,
        converged,
    }
}

/// Runs the simplex from `x0`, then `opts.restarts` more times from the
/// incumbent with randomly rescaled and re-signed initial steps.
pub(crate) fn minimize(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    opts: &OptimOptions,
) -> Minimum {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = nelder_mead(f, x0, step, opts.max_iter, opts.tol);
    let mut total = best.iterations;
    for _ in 0..opts.restarts {
        let s: Vec<f64> = step
            .iter()
            .map(|s| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * s * rng.random_range(0.5..1.5)
            })
            .collect();
        let run = nelder_mead(f, &best.x, &s, opts.max_iter, opts.tol);
        total += run.iterations;
        if run.f < best.f || (run.f == best.f && run.converged) {
            best = run;
        } else if run.f == best.f {
            best.converged |= run.converged;
        }
    }
    best.iterations = total;
    if opts.polish_iter > 0 && best.f.is_finite() {
        let (x, fx) = bfgs_polish(f, &best.x, best.f, opts.polish_iter);
        if fx < best.f {
            best.x = x;
            best.f = fx;
        }
    }
    best
}

fn fd_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let up = eval(f, &xp);
            xp[i] = x[i] - h;
            let dn = eval(f, &xp);
            xp[i] = x[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with central-difference gradients and Armijo backtracking; never
/// returns a point worse than the start.
pub(crate) fn bfgs_polish(f: &impl Fn(&[f64]) -> f64, x0: &[f64], f0: f64, max_iter: usize) -> (Vec<f64>, f64) {
    const GTOL: f64 = 1e-10;
    let n = x0.len();
    let identity = || {
        let mut h = vec![vec![0.0; n]; n];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        h
    };
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut g = fd_gradient(f, &x);
    let mut h = identity();
    for _ in 0..max_iter {
        if g.iter().any(|v| !v.is_finite()) || g.iter().all(|v| v.abs() < GTOL) {
            break;
        }
        let mut p: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            h = identity();
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let fxn = eval(f, &xn);
            if fxn <= fx + 1e-4 * t * slope {
                next = Some((xn, fxn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fxn)) = next else { break };
        let gn = fd_gradient(f, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            // H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let progress = fx - fxn;
        x = xn;
        fx = fxn;
        g = gn;
        if progress <= 1e-16 * fx.abs() && s.iter().all(|v| v.abs() < 1e-14) {
            break;
        }
    }
    (x, fx)
}

/// Newton steps on a central-difference Hessian.
///
/// Near an optimum of a long sum, the attainable decrease in `f` can fall
/// below its rounding noise while the gradient is still visibly nonzero. A step
/// is therefore accepted when it shrinks the gradient norm and raises `f` by no
/// more than `noise`.
pub(crate) fn newton_refine(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    noise: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut g = fd_gradient(f, &x);
    for _ in 0..max_iter {
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut hess = DMatrix::zeros(n, n);
        let mut xp = x.clone();
        for j in 0..n {
            let h = 1e-4 * x[j].abs().max(1e-2);
            xp[j] = x[j] + h;
            let up = fd_gradient(f, &xp);
            xp[j] = x[j] - h;
            let dn = fd_gradient(f, &xp);
            xp[j] = x[j];
            for i in 0..n {
                hess[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let Some(chol) = hess.cholesky() else { break };
        let step = chol.solve(&DVector::from_column_slice(&g));
        let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - d).collect();
        let fxn = eval(f, &xn);
        if fxn > fx + noise {
            break;
        }
        let gn = fd_gradient(f, &xn);
        if dot(&gn, &gn) >= dot(&g, &g) {
            break;
        }
        x = xn;
        fx = fxn;
        g = gn;
    }
    (x, fx)
}
