//! HAR and CHAR: OLS on daily, weekly (5-day) and monthly (22-day) lag means.

use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::ols::ols;
use crate::models::{gaussian_loglik, FitDiagnostics};
use crate::series::RvSeries;

/// Lags needed before the first usable target (the monthly window).
pub const HAR_LAGS: usize = 22;
const WEEK: usize = 5;
const MIN_ROWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarParams {
    pub omega: f64,
    pub beta_d: f64,
    pub beta_w: f64,
    pub beta_m: f64,
    /// `SSR / (n − 4)` of the estimating regression.
    pub resid_var: f64,
}

/// CHAR shares the HAR coefficient layout; its regressors are BPV lag means.
pub type CharParams = HarParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarRegressors {
    pub daily: f64,
    pub weekly: f64,
    pub monthly: f64,
}

/// Left-hand side of the CHAR regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CharTarget {
    /// Realized variance, so forecasts are comparable with RV actuals.
    #[default]
    Rv,
    /// Bipower variation, as in the literal continuous-HAR equation.
    Bpv,
}

impl FromStr for CharTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rv" => Ok(Self::Rv),
            "bpv" => Ok(Self::Bpv),
            other => Err(Error::domain(format!("unknown CHAR target {other:?}"))),
        }
    }
}

/// Lag means for predicting `values[t]` (0-based) from `values[..t]`.
///
/// Requires `t ≥ 22` so the monthly window is complete.
pub fn build_har_regressors(values: &[f64], t: usize) -> Result<HarRegressors> {
    if t < HAR_LAGS || t > values.len() {
        return Err(Error::domain(format!(
            "HAR regressors at index {t} need {HAR_LAGS} prior observations, {} available",
            t.min(values.len())
        )));
    }
    let week = &values[t - WEEK..t];
    let month = &values[t - HAR_LAGS..t];
    Ok(HarRegressors {
        daily: values[t - 1],
        weekly: week.iter().sum::<f64>() / WEEK as f64,
        monthly: month.iter().sum::<f64>() / HAR_LAGS as f64,
    })
}

/// OLS of `target[t]` on lag means of `source` for `t` in `range` past the warm-up.
///
/// Only observations inside `range` are read. Works unchanged on log-space inputs.
pub fn fit_har_on(
    target: &[f64],
    source: &[f64],
    range: Range<usize>,
) -> Result<(HarParams, FitDiagnostics)> {
    if range.end > target.len() || range.end > source.len() || range.start > range.end {
        return Err(Error::domain(format!(
            "fit range {range:?} outside series of length {}",
            target.len()
        )));
    }
    let src = &source[range.clone()];
    let tgt = &target[range.clone()];
    let rows = src.len().saturating_sub(HAR_LAGS);
    if rows < MIN_ROWS {
        return Err(Error::domain(format!(
            "HAR fit needs at least {} observations ({HAR_LAGS} warm-up + {MIN_ROWS}), got {}",
            HAR_LAGS + MIN_ROWS,
            src.len()
        )));
    }
    let mut x = DMatrix::<f64>::zeros(rows, 4);
    let mut y = DVector::<f64>::zeros(rows);
    for (i, t) in (HAR_LAGS..src.len()).enumerate() {
        let r = build_har_regressors(src, t)?;
        x[(i, 0)] = 1.0;
        x[(i, 1)] = r.daily;
        x[(i, 2)] = r.weekly;
        x[(i, 3)] = r.monthly;
        y[i] = tgt[t];
    }
    let fit = ols(&x, &y, &["intercept", "daily", "weekly", "monthly"])?;
    let params = HarParams {
        omega: fit.coef[0],
        beta_d: fit.coef[1],
        beta_w: fit.coef[2],
        beta_m: fit.coef[3],
        resid_var: fit.ssr / (rows - 4) as f64,
    };
    let diag = FitDiagnostics::new(gaussian_loglik(fit.ssr, rows), 5, rows, true, 1);
    Ok((params, diag))
}

/// HAR on the series' own RV over observations `range`.
pub fn fit_har(series: &RvSeries, range: Range<usize>) -> Result<(HarParams, FitDiagnostics)> {
    let rv = series.rv();
    fit_har_on(&rv, &rv, range)
}

/// CHAR: lagged BPV components as regressors, RV (default) or BPV as target.
pub fn fit_char(
    series: &RvSeries,
    range: Range<usize>,
    target: CharTarget,
) -> Result<(CharParams, FitDiagnostics)> {
    let window = series.observations().get(range.clone()).ok_or_else(|| {
        Error::domain(format!("fit range {range:?} outside series of length {}", series.len()))
    })?;
    if let Some(o) = window.iter().find(|o| o.bpv.is_none()) {
        return Err(Error::domain(format!(
            "{}: CHAR needs bpv, missing on {}",
            series.symbol(),
            o.date
        )));
    }
    let bpv: Vec<f64> = series.observations().iter().map(|o| o.bpv.unwrap_or(f64::NAN)).collect();
    match target {
        CharTarget::Rv => fit_har_on(&series.rv(), &bpv, range),
        CharTarget::Bpv => fit_har_on(&bpv, &bpv, range),
    }
}

pub fn forecast_har(params: &HarParams, r: &HarRegressors) -> f64 {
    params.omega + params.beta_d * r.daily + params.beta_w * r.weekly + params.beta_m * r.monthly
}

pub fn forecast_char(params: &CharParams, r: &HarRegressors) -> f64 {
    forecast_har(params, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{RvObservation, TradingDay};
    use crate::sim::simulate_har;

    fn series_from(rv: &[f64], bpv: Option<&[f64]>) -> RvSeries {
        let mut d = TradingDay::from_ymd(2001, 1, 1).unwrap();
        let obs = rv
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let o = RvObservation {
                    date: d,
                    close: 1.0,
                    rv: v,
                    bpv: bpv.map(|b| b[i]),
                };
                d = d.next_weekday();
                o
            })
            .collect();
        RvSeries::new("H", obs).unwrap()
    }

    #[test]
    fn regressors_of_constant_series() {
        let v = vec![0.3; 40];
        let r = build_har_regressors(&v, 30).unwrap();
        for v in [r.daily, r.weekly, r.monthly] {
            assert!((v - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn regressors_of_arithmetic_series() {
        // values 1..=30; predicting the 30th value (0-based index 29)
        let v: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = build_har_regressors(&v, 29).unwrap();
        assert_eq!(r.daily, 29.0);
        assert_eq!(r.weekly, 27.0);
        assert_eq!(r.monthly, 18.5);
    }

    #[test]
    fn regressors_need_22_prior_values() {
        let v: Vec<f64> = (1..=30).map(f64::from).collect();
        let err = build_har_regressors(&v, 21).unwrap_err().to_string();
        assert!(err.contains("22") && err.contains("21"), "{err}");
        assert!(build_har_regressors(&v, 22).is_ok());
    }

    #[test]
    fn forecast_examples() {
        let p = HarParams {
            omega: 0.0,
            beta_d: 1.0,
            beta_w: 0.0,
            beta_m: 0.0,
            resid_var: 0.0,
        };
        let r = HarRegressors {
            daily: 0.5,
            weekly: 9.0,
            monthly: 7.0,
        };
        assert_eq!(forecast_har(&p, &r), 0.5);
        let p = HarParams {
            omega: 0.2,
            beta_d: 0.0,
            ..p
        };
        assert_eq!(forecast_har(&p, &r), 0.2);
        let c = HarParams {
            omega: 0.0,
            beta_d: 1.0,
            ..p
        };
        let rb = HarRegressors { daily: 0.3, ..r };
        assert_eq!(forecast_char(&c, &rb), 0.3);
    }

    #[test]
    fn constant_series_is_collinear() {
        let s = series_from(&[0.5; 200], Some(&[0.4; 200]));
        let err = fit_har(&s, 0..200).unwrap_err();
        assert!(err.to_string().contains("collinear"), "{err}");
        assert!(fit_char(&s, 0..200, CharTarget::Rv).unwrap_err().to_string().contains("collinear"));
    }

    #[test]
    fn too_short_window_is_rejected() {
        let v = simulate_har(100, 0.1, [0.4, 0.3, 0.2], 0.05, 1);
        let s = series_from(&v, None);
        assert!(matches!(fit_har(&s, 0..71), Err(Error::Domain(_))));
        assert!(fit_har(&s, 0..72).is_ok());
    }

    #[test]
    fn char_requires_bpv() {
        let v = simulate_har(300, 0.1, [0.4, 0.3, 0.2], 0.05, 1);
        let s = series_from(&v, None);
        assert!(fit_char(&s, 0..300, CharTarget::Rv).unwrap_err().to_string().contains("bpv"));
    }

    /// Independent oracle: normal equations XᵀXβ = Xᵀy solved by Gaussian elimination.
    fn normal_equations(x: &[[f64; 4]], y: &[f64]) -> [f64; 4] {
        let mut a = [[0.0; 5]; 4];
        for (row, &yi) in x.iter().zip(y) {
            for i in 0..4 {
                for j in 0..4 {
                    a[i][j] += row[i] * row[j];
                }
                a[i][4] += row[i] * yi;
            }
        }
        for c in 0..4 {
            let p = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..4 {
                if r != c {
                    let m = a[r][c] / a[c][c];
                    let pivot = a[c];
                    for (x, y) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                        *x -= m * y;
                    }
                }
            }
        }
        [a[0][4] / a[0][0], a[1][4] / a[1][1], a[2][4] / a[2][2], a[3][4] / a[3][3]]
    }

    #[test]
    fn matches_normal_equation_oracle_and_residuals_are_orthogonal() {
        let v = simulate_har(3000, 0.1, [0.4, 0.3, 0.2], 0.05, 9);
        let s = series_from(&v, None);
        let (p, diag) = fit_har(&s, 0..3000).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in 22..3000 {
            let d = v[t - 1];
            let w = v[t - 5..t].iter().sum::<f64>() / 5.0;
            let m = v[t - 22..t].iter().sum::<f64>() / 22.0;
            xs.push([1.0, d, w, m]);
            ys.push(v[t]);
        }
        let oracle = normal_equations(&xs, &ys);
        let got = [p.omega, p.beta_d, p.beta_w, p.beta_m];
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{got:?} vs {oracle:?}");
        }
        assert_eq!(diag.n_obs, 2978);
        let n = xs.len() as f64;
        let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max);
        for c in 0..4 {
            let dot: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let e = y - (p.omega + p.beta_d * x[1] + p.beta_w * x[2] + p.beta_m * x[3]);
                    e * x[c]
                })
                .sum();
            assert!(dot.abs() < 1e-8 * n * scale, "column {c}: {dot}");
        }
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (p.omega + p.beta_d * x[1] + p.beta_w * x[2] + p.beta_m * x[3])).powi(2))
            .sum();
        assert!((p.resid_var - ssr / (n - 4.0)).abs() < 1e-12);
        assert!((diag.aic - (10.0 - 2.0 * diag.loglik)).abs() < 1e-9);
    }

    #[test]
    fn char_matches_har_when_bpv_equals_rv() {
        let v = simulate_har(3000, 0.1, [0.4, 0.3, 0.2], 0.05, 4);
        let s = series_from(&v, Some(&v));
        let (h, _) = fit_har(&s, 0..3000).unwrap();
        let (c, _) = fit_char(&s, 0..3000, CharTarget::Rv).unwrap();
        assert_eq!(h, c);
        let (cb, _) = fit_char(&s, 0..3000, CharTarget::Bpv).unwrap();
        assert_eq!(h, cb);
    }

    #[test]
    fn forecast_error_sd_close_to_noise() {
        let v = simulate_har(5000, 0.1, [0.4, 0.3, 0.2], 0.05, 21);
        let s = series_from(&v, None);
        let (p, _) = fit_har(&s, 0..5000).unwrap();
        let errs: Vec<f64> = (22..5000)
            .map(|t| v[t] - forecast_har(&p, &build_har_regressors(&v, t).unwrap()))
            .collect();
        let sd = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        assert!((sd - 0.05).abs() < 0.005, "sd {sd}");
    }
}
