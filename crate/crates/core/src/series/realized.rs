use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::series::IntradayReturns;

/// Log-returns `ln(p[i+1] / p[i])` of a positive price path.
pub fn compute_log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 prices for a return, got {}",
            prices.len()
        )));
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::domain(format!(
            "price at index {i} is not positive: {}",
            prices[i]
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Realized variance: the sum of squared intraday returns.
pub fn compute_rv(intraday: &IntradayReturns) -> Result<f64> {
    if intraday.returns.is_empty() {
        return Err(Error::domain(format!("{}: no intraday returns", intraday.day)));
    }
    Ok(intraday.returns.iter().map(|r| r * r).sum())
}

/// Bipower variation `(π/2) Σ_{i≥2} |r_i| |r_{i-1}|`.
pub fn compute_bpv(intraday: &IntradayReturns) -> Result<f64> {
    let r = &intraday.returns;
    if r.len() < 2 {
        return Err(Error::domain(format!(
            "{}: bipower variation needs at least 2 returns, got {}",
            intraday.day,
            r.len()
        )));
    }
    let s: f64 = r.windows(2).map(|w| w[0].abs() * w[1].abs()).sum();
    Ok(FRAC_PI_2 * s)
}
