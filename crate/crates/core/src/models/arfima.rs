//! ARFIMA(p, d, q) by conditional sum of squares on the fractionally
//! differenced, demeaned series.
//!
//! Conventions: `Φ(B) = 1 − Σ φ_i Bⁱ`, `Θ(B) = 1 + Σ θ_j Bʲ`, and
//! `Φ(B)(1 − B)^d (x_t − μ) = Θ(B) ε_t`. Pre-sample values are zero.

use crate::error::{BestSoFar, Error, Result};
use crate::models::optim::{minimize, OptimOptions};
use crate::models::{gaussian_loglik, FitDiagnostics};

const MIN_LEN: usize = 200;
const MAX_ORDER: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ArfimaParams {
    pub d: f64,
    /// AR coefficients `φ_1..φ_p`.
    pub ar: Vec<f64>,
    /// MA coefficients `θ_1..θ_q`.
    pub ma: Vec<f64>,
    pub mu: f64,
    pub innovation_var: f64,
}

impl ArfimaParams {
    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }
}

/// Coefficients `π_0..π_{len-1}` of `(1 − B)^d`: `π_0 = 1`, `π_k = π_{k−1}(k − 1 − d)/k`.
pub fn frac_diff_weights(d: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    if len == 0 {
        return w;
    }
    w.push(1.0);
    for k in 1..len {
        let kf = k as f64;
        w.push(w[k - 1] * (kf - 1.0 - d) / kf);
    }
    w
}

fn check_filter_args(d: f64, truncation: usize) -> Result<()> {
    if truncation < 1 {
        return Err(Error::domain("truncation must be at least 1"));
    }
    if !(d.is_finite() && (-1.0..=1.0).contains(&d)) {
        return Err(Error::domain(format!("differencing order {d} outside [-1, 1]")));
    }
    Ok(())
}

/// Four-lane dot product; the lane split lets the compiler vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y_t = Σ_{k=0}^{min(t, L)} π_k x_{t−k}` given the weights.
fn apply_filter(x: &[f64], w: &[f64], truncation: usize) -> Vec<f64> {
    let n = x.len();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    (0..n)
        .map(|t| {
            let m = t.min(truncation);
            // rev[n - 1 - t + k] == x[t - k]
            dot(&w[..=m], &rev[n - 1 - t..n - 1 - t + m + 1])
        })
        .collect()
}

/// Applies `(1 − B)^d` with lag truncation `truncation`; output length equals input length.
pub fn frac_diff(x: &[f64], d: f64, truncation: usize) -> Result<Vec<f64>> {
    check_filter_args(d, truncation)?;
    let w = frac_diff_weights(d, truncation.min(x.len().max(1)) + 1);
    Ok(apply_filter(x, &w, truncation))
}

/// Applies `(1 − B)^{−d}`, the inverse of [`frac_diff`] when `truncation ≥ len`.
pub fn frac_integrate(y: &[f64], d: f64, truncation: usize) -> Result<Vec<f64>> {
    frac_diff(y, -d, truncation)
}

/// Durbin–Levinson map from partial autocorrelations in (−1, 1) to the
/// coefficients of a stationary `1 − Σ φ_i Bⁱ`.
fn pacf_to_coefs(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

#[cfg(test)]
fn coefs_to_pacf(coefs: &[f64]) -> Option<Vec<f64>> {
    let mut phi = coefs.to_vec();
    let mut pacf = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let r = phi[k];
        if r.abs() >= 1.0 {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        phi.truncate(k);
    }
    Some(pacf)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Unpacked {
    d: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
}

fn unpack(raw: &[f64], p: usize, q: usize) -> Unpacked {
    let ar_pacf: Vec<f64> = raw[1..1 + p].iter().map(|v| v.tanh()).collect();
    let ma_pacf: Vec<f64> = raw[1 + p..1 + p + q].iter().map(|v| v.tanh()).collect();
    Unpacked {
        d: logistic(raw[0]),
        ar: pacf_to_coefs(&ar_pacf),
        // Θ(B) = 1 + Σθ_j Bʲ is invertible iff 1 − Σ(−θ_j)Bʲ is stationary
        ma: pacf_to_coefs(&ma_pacf).into_iter().map(|c| -c).collect(),
    }
}

/// ARMA residuals of the differenced series `u`, pre-sample values zero.
fn arma_residuals(u: &[f64], ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; u.len()];
    for t in 0..u.len() {
        let mut v = u[t];
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                v -= phi * u[t - 1 - i];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                v -= theta * e[t - 1 - j];
            }
        }
        e[t] = v;
    }
    e
}

fn css(centered: &[f64], d: f64, ar: &[f64], ma: &[f64]) -> (f64, usize) {
    let n = centered.len();
    let w = frac_diff_weights(d, n);
    let u = apply_filter(centered, &w, n);
    let e = arma_residuals(&u, ar, ma);
    let skip = ar.len();
    (e[skip..].iter().map(|v| v * v).sum(), n - skip)
}

/// ARFIMA(p, d, q) by CSS with the default optimizer settings.
pub fn fit_arfima(series: &[f64], p: usize, q: usize) -> Result<(ArfimaParams, FitDiagnostics)> {
    fit_arfima_with(series, p, q, &OptimOptions::default())
}

/// ARFIMA(p, d, q) by CSS; `d` is kept in (0, 1) by a logistic map and the AR
/// and MA polynomials are kept stationary/invertible through partial autocorrelations.
pub fn fit_arfima_with(
    series: &[f64],
    p: usize,
    q: usize,
    opts: &OptimOptions,
) -> Result<(ArfimaParams, FitDiagnostics)> {
    if series.len() < MIN_LEN {
        return Err(Error::domain(format!(
            "ARFIMA fit needs at least {MIN_LEN} observations, got {}",
            series.len()
        )));
    }
    if p > MAX_ORDER || q > MAX_ORDER {
        return Err(Error::domain(format!(
            "ARFIMA orders must be in 0..={MAX_ORDER}, got ({p}, {q})"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("ARFIMA input contains non-finite values"));
    }
    let n = series.len();
    let mu = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mu).collect();
    if centered.iter().all(|v| *v == 0.0) {
        return Err(Error::estimation("ARFIMA input is constant"));
    }

    let objective = |raw: &[f64]| {
        let u = unpack(raw, p, q);
        let (s, m) = css(&centered, u.d, &u.ar, &u.ma);
        s / m as f64
    };
    // d starts at 0.3, ARMA terms at zero
    let mut x0 = vec![0.0; 1 + p + q];
    x0[0] = (0.3f64 / 0.7).ln();
    let step = vec![0.5; 1 + p + q];
    let m = minimize(&objective, &x0, &step, opts);

    let u = unpack(&m.x, p, q);
    let (ssr, used) = css(&centered, u.d, &u.ar, &u.ma);
    let params = ArfimaParams {
        d: u.d,
        ar: u.ar,
        ma: u.ma,
        mu,
        innovation_var: ssr / n as f64,
    };
    let k = 1 + p + q + 2;
    let diag = FitDiagnostics::new(gaussian_loglik(ssr, used), k, used, m.converged, m.iterations);
    if !m.converged {
        return Err(Error::NotConverged {
            model: "ARFIMA",
            iterations: m.iterations,
            best: Box::new(BestSoFar::Arfima(params, diag)),
        });
    }
    Ok((params, diag))
}

/// Picks the `(p, q)` in `grid` with the smallest AIC.
pub fn select_arfima_order(
    series: &[f64],
    grid: &[(usize, usize)],
    opts: &OptimOptions,
) -> Result<(usize, usize)> {
    if grid.is_empty() {
        return Err(Error::domain("empty ARFIMA order grid"));
    }
    let mut best: Option<((usize, usize), f64)> = None;
    let mut last_err = None;
    for &(p, q) in grid {
        match fit_arfima_with(series, p, q, opts) {
            Ok((_, diag)) => {
                if best.is_none_or(|(_, aic)| diag.aic < aic) {
                    best = Some(((p, q), diag.aic));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(o, _)| o).ok_or_else(|| {
        Error::estimation(format!(
            "no ARFIMA order in the grid could be fitted: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ))
    })
}

/// One-step-ahead conditional means for every `t` in `targets`, each using only `values[..t]`.
///
/// Targets run up to `values.len()` inclusive; that last index is the pure
/// out-of-sample forecast.
pub fn forecast_arfima_path(
    params: &ArfimaParams,
    values: &[f64],
    targets: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    let need = params.p().max(params.q()).max(1);
    if targets.start < need {
        return Err(Error::domain(format!(
            "ARFIMA forecast needs at least {need} observations of history, got {}",
            targets.start
        )));
    }
    if targets.end > values.len() + 1 || targets.start > targets.end {
        return Err(Error::domain(format!(
            "forecast targets {targets:?} outside history of length {}",
            values.len()
        )));
    }
    let hist = targets.end.saturating_sub(1).min(values.len());
    let centered: Vec<f64> = values[..hist].iter().map(|v| v - params.mu).collect();
    let w = frac_diff_weights(params.d, hist + 1);
    let u = apply_filter(&centered, &w, hist);
    let e = arma_residuals(&u, &params.ar, &params.ma);
    let rev: Vec<f64> = centered.iter().rev().copied().collect();

    Ok(targets
        .map(|t| {
            let mut u_hat = 0.0;
            for (i, phi) in params.ar.iter().enumerate() {
                if t > i {
                    u_hat += phi * u[t - 1 - i];
                }
            }
            for (j, theta) in params.ma.iter().enumerate() {
                if t > j {
                    u_hat += theta * e[t - 1 - j];
                }
            }
            // invert y_t = x_t + Σ_{k≥1} π_k x_{t−k} for x_t; rev[hist - t + k - 1] == x[t - k]
            let carried = dot(&w[1..=t], &rev[hist - t..hist]);
            params.mu + u_hat - carried
        })
        .collect())
}

/// One-step-ahead forecast of the value following `history`.
pub fn forecast_arfima(params: &ArfimaParams, history: &[f64]) -> Result<f64> {
    let n = history.len();
    Ok(forecast_arfima_path(params, history, n..n + 1)?[0])
}
