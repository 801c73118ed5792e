//! Realized GARCH with a log-linear variance recursion and a measurement
//! equation tying log RV to the latent log conditional variance:
//!
//! ```text
//! r_t        = sqrt(h_t) z_t,                       z_t ~ N(0, 1)
//! log h_t    = ω + Σ β_i log h_{t−i} + Σ α_j log RV_{t−j}
//! log RV_t   = ξ + φ log h_t + τ z_t + u_t,          u_t ~ N(0, σ_u²)
//! ```
//!
//! The first `max(p, q)` conditional variances are pinned at `h1`.

use crate::error::{BestSoFar, Error, Result};
use crate::models::optim::{bfgs_polish, minimize, newton_refine, OptimOptions};
use crate::models::FitDiagnostics;

const MIN_LEN: usize = 100;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct RgarchParams {
    pub omega: f64,
    /// Coefficients on lagged `log h` (GARCH order p).
    pub beta: Vec<f64>,
    /// Coefficients on lagged `log RV` (ARCH order q).
    pub alpha: Vec<f64>,
    pub xi: f64,
    pub phi: f64,
    pub tau: f64,
    pub sigma_u2: f64,
    pub h1: f64,
}

impl RgarchParams {
    /// Order (1, 1) parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn order_one(
        omega: f64,
        beta: f64,
        alpha: f64,
        xi: f64,
        phi: f64,
        tau: f64,
        sigma_u2: f64,
        h1: f64,
    ) -> Self {
        Self {
            omega,
            beta: vec![beta],
            alpha: vec![alpha],
            xi,
            phi,
            tau,
            sigma_u2,
            h1,
        }
    }

    /// Starting values: ω=0, β=0.7, α=0.25, ξ=0, φ=1, τ=−0.05, σ_u²=0.2,
    /// h1 = sample variance of `returns`. Extra lags start at zero.
    pub fn default_init(returns: &[f64], order: (usize, usize)) -> Self {
        let mut beta = vec![0.0; order.0.max(1)];
        let mut alpha = vec![0.0; order.1.max(1)];
        beta[0] = 0.7;
        alpha[0] = 0.25;
        Self {
            omega: 0.0,
            beta,
            alpha,
            xi: 0.0,
            phi: 1.0,
            tau: -0.05,
            sigma_u2: 0.2,
            h1: sample_variance(returns).max(f64::MIN_POSITIVE),
        }
    }

    pub fn order(&self) -> (usize, usize) {
        (self.beta.len(), self.alpha.len())
    }

    /// Persistence of the reduced-form log-variance recursion, `Σβ + φ Σα`.
    pub fn persistence(&self) -> f64 {
        self.beta.iter().sum::<f64>() + self.phi * self.alpha.iter().sum::<f64>()
    }

    /// Number of free parameters.
    pub fn n_params(&self) -> usize {
        6 + self.beta.len() + self.alpha.len()
    }

    /// Flat parameter vector in a fixed order: ω, β.., α.., ξ, φ, τ, σ_u², h1.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.omega];
        v.extend(&self.beta);
        v.extend(&self.alpha);
        v.extend([self.xi, self.phi, self.tau, self.sigma_u2, self.h1]);
        v
    }

    /// Inverse of [`to_vec`](Self::to_vec).
    pub fn from_vec(v: &[f64], order: (usize, usize)) -> Self {
        let (p, q) = order;
        assert_eq!(v.len(), 6 + p + q, "parameter vector length");
        let tail = &v[1 + p + q..];
        Self {
            omega: v[0],
            beta: v[1..1 + p].to_vec(),
            alpha: v[1 + p..1 + p + q].to_vec(),
            xi: tail[0],
            phi: tail[1],
            tau: tail[2],
            sigma_u2: tail[3],
            h1: tail[4],
        }
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

/// Filtered `log h_t` for `t = 0..=n`; the last entry is the one-step-ahead value.
pub fn rgarch_filter(params: &RgarchParams, log_rv: &[f64]) -> Vec<f64> {
    let (p, q) = params.order();
    let warm = p.max(q).max(1);
    let n = log_rv.len();
    let init = params.h1.ln();
    let mut log_h = Vec::with_capacity(n + 1);
    for t in 0..=n {
        if t < warm {
            log_h.push(init);
            continue;
        }
        let mut v = params.omega;
        for (i, b) in params.beta.iter().enumerate() {
            v += b * log_h[t - 1 - i];
        }
        for (j, a) in params.alpha.iter().enumerate() {
            v += a * log_rv[t - 1 - j];
        }
        log_h.push(v);
    }
    log_h
}

fn nll_unchecked(params: &RgarchParams, returns: &[f64], log_rv: &[f64]) -> f64 {
    if !(params.sigma_u2 > 0.0 && params.h1 > 0.0) {
        return f64::INFINITY;
    }
    let log_h = rgarch_filter(params, log_rv);
    let ln_s2 = params.sigma_u2.ln();
    let mut total = 0.0;
    for t in 0..returns.len() {
        let lh = log_h[t];
        let z = returns[t] * (-0.5 * lh).exp();
        let u = log_rv[t] - params.xi - params.phi * lh - params.tau * z;
        total += 0.5 * (LN_2PI + lh + z * z) + 0.5 * (LN_2PI + ln_s2 + u * u / params.sigma_u2);
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

fn check_inputs(returns: &[f64], rv: &[f64], min_len: usize) -> Result<Vec<f64>> {
    if returns.len() != rv.len() {
        return Err(Error::domain(format!(
            "returns ({}) and rv ({}) lengths differ",
            returns.len(),
            rv.len()
        )));
    }
    if returns.len() < min_len {
        return Err(Error::domain(format!(
            "RGARCH needs at least {min_len} observations, got {}",
            returns.len()
        )));
    }
    if let Some(i) = rv.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::domain(format!(
            "rv must be strictly positive, got {} at index {i}",
            rv[i]
        )));
    }
    if let Some(i) = returns.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("return at index {i} is not finite")));
    }
    Ok(rv.iter().map(|v| v.ln()).collect())
}

/// Joint negative log-likelihood of returns and log RV.
///
/// Overflowing intermediates yield `+inf` rather than an error.
pub fn rgarch_nll(params: &RgarchParams, returns: &[f64], rv: &[f64]) -> Result<f64> {
    let log_rv = check_inputs(returns, rv, 1)?;
    Ok(nll_unchecked(params, returns, &log_rv))
}

/// Optimizer coordinates: ω, atanh(persistence), β_2.., α.., ξ, φ, τ, ln σ_u², ln h1.
/// `β_1` is solved from the persistence so that `|Σβ + φΣα| < 1` always holds.
fn to_raw(params: &RgarchParams) -> Vec<f64> {
    let pers = params.persistence().clamp(-0.999, 0.999);
    let mut v = vec![params.omega, pers.atanh()];
    v.extend(&params.beta[1..]);
    v.extend(&params.alpha);
    v.extend([
        params.xi,
        params.phi,
        params.tau,
        params.sigma_u2.ln(),
        params.h1.ln(),
    ]);
    v
}

fn from_raw(raw: &[f64], order: (usize, usize)) -> RgarchParams {
    let (p, q) = order;
    let rest_beta = &raw[2..1 + p];
    let alpha = raw[1 + p..1 + p + q].to_vec();
    let tail = &raw[1 + p + q..];
    let phi = tail[1];
    let beta1 = raw[1].tanh() - rest_beta.iter().sum::<f64>() - phi * alpha.iter().sum::<f64>();
    let mut beta = vec![beta1];
    beta.extend(rest_beta);
    RgarchParams {
        omega: raw[0],
        beta,
        alpha,
        xi: tail[0],
        phi,
        tau: tail[2],
        sigma_u2: tail[3].exp(),
        h1: tail[4].exp(),
    }
}

/// Order (1, 1) maximum likelihood with default optimizer settings.
pub fn fit_rgarch(
    returns: &[f64],
    rv: &[f64],
    init: Option<RgarchParams>,
) -> Result<(RgarchParams, FitDiagnostics)> {
    fit_rgarch_with(returns, rv, init, (1, 1), &OptimOptions::default())
}

/// Maximum likelihood for a given `(p, q)` order.
pub fn fit_rgarch_with(
    returns: &[f64],
    rv: &[f64],
    init: Option<RgarchParams>,
    order: (usize, usize),
    opts: &OptimOptions,
) -> Result<(RgarchParams, FitDiagnostics)> {
    let log_rv = check_inputs(returns, rv, MIN_LEN)?;
    if order.0 == 0 || order.1 == 0 {
        return Err(Error::domain(format!("RGARCH order must be at least (1, 1), got {order:?}")));
    }
    if sample_variance(returns) <= 0.0 {
        return Err(Error::estimation("returns are constant; conditional variance is not identified"));
    }
    let init = init.unwrap_or_else(|| RgarchParams::default_init(returns, order));
    if init.order() != order {
        return Err(Error::domain(format!(
            "initial parameters have order {:?}, expected {order:?}",
            init.order()
        )));
    }
    let n = returns.len();
    let objective = |raw: &[f64]| nll_unchecked(&from_raw(raw, order), returns, &log_rv) / n as f64;

    let x0 = to_raw(&init);
    let (p, q) = order;
    let mut step = vec![0.1, 0.3];
    step.extend(std::iter::repeat_n(0.1, p - 1 + q));
    step.extend([0.1, 0.1, 0.05, 0.3, 0.5]);
    let m = minimize(&objective, &x0, &step, opts);
    let mut params = from_raw(&m.x, order);
    let mut nll = m.f * n as f64;

    // The tanh map flattens the surface near unit persistence, so a point that
    // is stationary in optimizer coordinates can still carry a sizeable slope
    // in the model's own parameters. A second pass there removes it.
    if opts.polish_iter > 0 && nll.is_finite() {
        let natural = |v: &[f64]| {
            let cand = RgarchParams::from_vec(v, order);
            if cand.persistence().abs() >= 1.0 {
                f64::INFINITY
            } else {
                nll_unchecked(&cand, returns, &log_rv)
            }
        };
        let (v, f) = bfgs_polish(&natural, &params.to_vec(), nll, opts.polish_iter);
        let (v, f) = newton_refine(&natural, &v, f, 1e-12 * f.abs().max(1.0), 5);
        params = RgarchParams::from_vec(&v, order);
        nll = f;
    }
    let diag = FitDiagnostics::new(-nll, params.n_params(), n, m.converged, m.iterations);
    if !nll.is_finite() {
        return Err(Error::estimation("RGARCH likelihood is not finite at any visited point"));
    }
    if !m.converged {
        return Err(Error::NotConverged {
            model: "RGARCH",
            iterations: m.iterations,
            best: Box::new(BestSoFar::Rgarch(params, diag)),
        });
    }
    Ok((params, diag))
}

/// AIC order selection over `grid`.
pub fn select_rgarch_order(
    returns: &[f64],
    rv: &[f64],
    grid: &[(usize, usize)],
    opts: &OptimOptions,
) -> Result<(usize, usize)> {
    if grid.is_empty() {
        return Err(Error::domain("empty RGARCH order grid"));
    }
    let mut best: Option<((usize, usize), f64)> = None;
    let mut last_err = None;
    for &order in grid {
        match fit_rgarch_with(returns, rv, None, order, opts) {
            Ok((_, diag)) => {
                if best.is_none_or(|(_, aic)| diag.aic < aic) {
                    best = Some((order, diag.aic));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(o, _)| o).ok_or_else(|| {
        Error::estimation(format!(
            "no RGARCH order in the grid could be fitted: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ))
    })
}

fn rv_mean(params: &RgarchParams, log_h: f64) -> f64 {
    (params.xi + params.phi * log_h + 0.5 * (params.tau * params.tau + params.sigma_u2)).exp()
}

/// Next-day RV forecast for an order (1, 1) model from the latest log variance
/// and log RV; higher-order lags are ignored, use [`forecast_rgarch_path`] for those.
///
/// `E[RV_{t+1}] = exp(ξ + φ log h_{t+1} + ½(τ² + σ_u²))`.
pub fn forecast_rgarch(params: &RgarchParams, last_log_h: f64, last_log_rv: f64) -> f64 {
    let log_h_next = params.omega + params.beta[0] * last_log_h + params.alpha[0] * last_log_rv;
    rv_mean(params, log_h_next)
}

/// RV forecasts for every `t` in `targets`, filtering `log h` from the start of
/// `log_rv`; the forecast for `t` reads `log_rv[..t]` only.
pub fn forecast_rgarch_path(
    params: &RgarchParams,
    log_rv: &[f64],
    targets: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    if targets.end > log_rv.len() + 1 || targets.start > targets.end {
        return Err(Error::domain(format!(
            "forecast targets {targets:?} outside history of length {}",
            log_rv.len()
        )));
    }
    let hist = targets.end.saturating_sub(1);
    let log_h = rgarch_filter(params, &log_rv[..hist]);
    Ok(targets.map(|t| rv_mean(params, log_h[t])).collect())
}
