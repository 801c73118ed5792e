//! Benchmark volatility models: estimation and one-day-ahead forecasts.

mod arfima;
mod har;
mod ols;
mod optim;
mod rgarch;

pub use arfima::{
    fit_arfima, fit_arfima_with, forecast_arfima, forecast_arfima_path, frac_diff,
    frac_diff_weights, frac_integrate, select_arfima_order, ArfimaParams,
};
pub use har::{
    build_har_regressors, fit_char, fit_har, fit_har_on, forecast_char, forecast_har, CharParams,
    CharTarget, HarParams, HarRegressors, HAR_LAGS,
};
pub use optim::OptimOptions;
pub use rgarch::{
    fit_rgarch, fit_rgarch_with, forecast_rgarch, forecast_rgarch_path, rgarch_filter, rgarch_nll,
    select_rgarch_order, RgarchParams,
};

/// Goodness-of-fit summary attached to every estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub loglik: f64,
    /// `2k − 2·loglik` with `k` the number of estimated parameters.
    pub aic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitDiagnostics {
    pub(crate) fn new(loglik: f64, k: usize, n_obs: usize, converged: bool, iterations: usize) -> Self {
        Self {
            loglik,
            aic: 2.0 * k as f64 - 2.0 * loglik,
            n_obs,
            converged,
            iterations,
        }
    }
}

/// Concentrated Gaussian log-likelihood for `n` residuals with sum of squares `ssr`.
pub(crate) fn gaussian_loglik(ssr: f64, n: usize) -> f64 {
    let nf = n as f64;
    -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0)
}
