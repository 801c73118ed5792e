use std::fmt;
use std::str::FromStr;

use crate::error::{BestSoFar, Error, Result};
use crate::models::{
    build_har_regressors, fit_arfima_with, fit_har_on, fit_rgarch_with, forecast_arfima_path,
    forecast_har, forecast_rgarch_path, select_arfima_order, select_rgarch_order, ArfimaParams,
    CharTarget, FitDiagnostics, HarParams, OptimOptions, RgarchParams,
};
use crate::protocol::{ForecastSet, Segment, SplitPlan};
use crate::series::{compute_log_returns, from_log_forecast, to_log, RvSeries};

/// Linear-model forecasts at or below zero are replaced by this value.
pub const FORECAST_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Har,
    Char,
    Arfima,
    Rgarch,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Har => "HAR",
            ModelKind::Char => "CHAR",
            ModelKind::Arfima => "ARFIMA",
            ModelKind::Rgarch => "RGARCH",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub char_target: CharTarget,
    /// ARFIMA `(p, q)`; ignored when `arfima_grid` is nonempty.
    pub arfima_order: (usize, usize),
    /// If nonempty, the ARFIMA order is chosen by AIC on each fit window.
    pub arfima_grid: Vec<(usize, usize)>,
    /// If nonempty, the RGARCH order is chosen by AIC on each fit window; otherwise (1, 1).
    pub rgarch_grid: Vec<(usize, usize)>,
    pub optim: OptimOptions,
    /// Use best-so-far parameters when the optimizer stops on its iteration cap
    /// instead of failing the segment.
    pub accept_unconverged: bool,
    /// Scale log-model forecasts by `exp(σ²/2)` with `σ²` the fitted residual
    /// or innovation variance; off by default.
    pub log_variance_correction: bool,
    pub floor: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            char_target: CharTarget::Rv,
            arfima_order: (1, 1),
            arfima_grid: Vec::new(),
            rgarch_grid: Vec::new(),
            optim: OptimOptions::default(),
            accept_unconverged: true,
            log_variance_correction: false,
            floor: FORECAST_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub log: bool,
    pub options: ModelOptions,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, log: bool) -> Result<Self> {
        if kind == ModelKind::Rgarch && log {
            return Err(Error::domain("RGARCH is already specified in logs; no log variant"));
        }
        Ok(Self {
            kind,
            log,
            options: ModelOptions::default(),
        })
    }

    pub fn with_options(mut self, options: ModelOptions) -> Self {
        self.options = options;
        self
    }

    /// `HAR`, `HAR_log`, `CHAR`, ..., `RGARCH`.
    pub fn model_id(&self) -> String {
        if self.log {
            format!("{}_log", self.kind.name())
        } else {
            self.kind.name().to_string()
        }
    }

    /// The seven benchmark specifications.
    pub fn all() -> Vec<ModelSpec> {
        use ModelKind::*;
        [(Har, false), (Har, true), (Char, false), (Char, true), (Arfima, false), (Arfima, true), (Rgarch, false)]
            .into_iter()
            .map(|(k, l)| ModelSpec::new(k, l).expect("valid benchmark spec"))
            .collect()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.model_id())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (base, log) = match upper.strip_suffix("_LOG") {
            Some(b) => (b, true),
            None => (upper.as_str(), false),
        };
        let kind = match base {
            "HAR" => ModelKind::Har,
            "CHAR" => ModelKind::Char,
            "ARFIMA" => ModelKind::Arfima,
            "RGARCH" => ModelKind::Rgarch,
            _ => return Err(Error::domain(format!("unknown model {s:?}"))),
        };
        ModelSpec::new(kind, log)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Har(HarParams),
    Char(HarParams),
    Arfima(ArfimaParams),
    Rgarch(RgarchParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    pub segment: Segment,
    pub model: FittedModel,
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub forecasts: ForecastSet,
    /// Forecasts replaced by the floor.
    pub floored: usize,
    pub fits: Vec<SegmentFit>,
}

struct Inputs {
    rv: Vec<f64>,
    bpv: Option<Vec<f64>>,
    returns: Vec<f64>,
}

fn prepare(series: &RvSeries, spec: &ModelSpec) -> Result<Inputs> {
    if series.is_log_space() {
        return Err(Error::domain("backtest expects a linear-space series"));
    }
    let working = if spec.log { to_log(series)? } else { series.clone() };
    let bpv = match spec.kind {
        ModelKind::Char => Some(working.bpv()?),
        _ => None,
    };
    let returns = match spec.kind {
        ModelKind::Rgarch => compute_log_returns(&series.closes())?,
        _ => Vec::new(),
    };
    Ok(Inputs {
        rv: working.rv(),
        bpv,
        returns,
    })
}

fn unwrap_fit<P>(
    res: Result<(P, FitDiagnostics)>,
    accept: bool,
    pick: impl FnOnce(BestSoFar) -> Option<(P, FitDiagnostics)>,
) -> Result<(P, FitDiagnostics)> {
    match res {
        Err(Error::NotConverged { best, .. }) if accept => {
            pick(*best).ok_or_else(|| Error::estimation("best-so-far parameters of the wrong model"))
        }
        other => other,
    }
}

/// Fits one segment and returns its model and raw (pre-floor, model-space) forecasts.
fn run_segment(
    spec: &ModelSpec,
    inputs: &Inputs,
    seg: &Segment,
) -> Result<(FittedModel, FitDiagnostics, Vec<f64>)> {
    let opts = &spec.options;
    let fit = seg.fit_range();
    let test = seg.test_range();
    match spec.kind {
        ModelKind::Har | ModelKind::Char => {
            let (target, source) = match (spec.kind, &inputs.bpv, opts.char_target) {
                (ModelKind::Char, Some(b), CharTarget::Rv) => (&inputs.rv, b),
                (ModelKind::Char, Some(b), CharTarget::Bpv) => (b, b),
                _ => (&inputs.rv, &inputs.rv),
            };
            let (params, diag) = fit_har_on(target, source, fit.clone())?;
            // regressors for target t read source[t−22..t]; the window start does not matter
            let out = test
                .map(|t| build_har_regressors(source, t).map(|r| forecast_har(&params, &r)))
                .collect::<Result<Vec<_>>>()?;
            let model = if spec.kind == ModelKind::Char {
                FittedModel::Char(params)
            } else {
                FittedModel::Har(params)
            };
            Ok((model, diag, out))
        }
        ModelKind::Arfima => {
            let window = &inputs.rv[fit.clone()];
            let (p, q) = if opts.arfima_grid.is_empty() {
                opts.arfima_order
            } else {
                select_arfima_order(window, &opts.arfima_grid, &opts.optim)?
            };
            let (params, diag) = unwrap_fit(
                fit_arfima_with(window, p, q, &opts.optim),
                opts.accept_unconverged,
                |b| match b {
                    BestSoFar::Arfima(p, d) => Some((p, d)),
                    _ => None,
                },
            )?;
            let offset = fit.start;
            let out = forecast_arfima_path(
                &params,
                &inputs.rv[offset..test.end],
                test.start - offset..test.end - offset,
            )?;
            Ok((FittedModel::Arfima(params), diag, out))
        }
        ModelKind::Rgarch => {
            // returns[i] is the close-to-close return ending on observation i + 1
            let start = fit.start.max(1);
            if test.start <= start {
                return Err(Error::domain("RGARCH fit window has no returns"));
            }
            let r_window = &inputs.returns[start - 1..fit.end - 1];
            let mean = r_window.iter().sum::<f64>() / r_window.len() as f64;
            let r: Vec<f64> = r_window.iter().map(|v| v - mean).collect();
            let rv = &inputs.rv[start..fit.end];
            let order = if opts.rgarch_grid.is_empty() {
                (1, 1)
            } else {
                select_rgarch_order(&r, rv, &opts.rgarch_grid, &opts.optim)?
            };
            let (params, diag) = unwrap_fit(
                fit_rgarch_with(&r, rv, None, order, &opts.optim),
                opts.accept_unconverged,
                |b| match b {
                    BestSoFar::Rgarch(p, d) => Some((p, d)),
                    _ => None,
                },
            )?;
            let log_rv: Vec<f64> = inputs.rv[start..test.end].iter().map(|v| v.ln()).collect();
            let out = forecast_rgarch_path(&params, &log_rv, test.start - start..test.end - start)?;
            Ok((FittedModel::Rgarch(params), diag, out))
        }
    }
}

/// Re-estimates once per segment and forecasts each test day from history up
/// to the previous day, parameters frozen within the segment.
pub fn run_backtest(series: &RvSeries, spec: &ModelSpec, plan: &SplitPlan) -> Result<BacktestResult> {
    if series.len() != plan.n {
        return Err(Error::domain(format!(
            "series has {} observations, plan expects {}",
            series.len(),
            plan.n
        )));
    }
    if spec.kind == ModelKind::Rgarch && spec.log {
        return Err(Error::domain("RGARCH has no log variant"));
    }
    let id = spec.model_id();
    let inputs = prepare(series, spec)?;
    let dates = series.dates();
    let mut entries = Vec::with_capacity(plan.forecast_count());
    let mut fits = Vec::with_capacity(plan.segments.len());
    let mut floored = 0;
    for (k, seg) in plan.segments.iter().enumerate() {
        let (model, diagnostics, raw) = run_segment(spec, &inputs, seg).map_err(|e| {
            let msg = format!(
                "{id} on {} segment {} (fit {}..={}): {e}",
                series.symbol(),
                k + 1,
                seg.fit_start,
                seg.fit_end
            );
            match e {
                Error::Estimation(_) | Error::NotConverged { .. } => Error::Estimation(msg),
                _ => Error::Domain(msg),
            }
        })?;
        if !diagnostics.converged {
            log::warn!("{id} segment {}: using unconverged best-so-far parameters", k + 1);
        }
        let correction = match (&model, spec.options.log_variance_correction && spec.log) {
            (FittedModel::Har(p) | FittedModel::Char(p), true) => 0.5 * p.resid_var,
            (FittedModel::Arfima(p), true) => 0.5 * p.innovation_var,
            _ => 0.0,
        };
        for (t, v) in seg.test_range().zip(raw) {
            let v = if spec.log { from_log_forecast(v + correction) } else { v };
            if !v.is_finite() {
                return Err(Error::Estimation(format!(
                    "{id} on {}: non-finite forecast for {}",
                    series.symbol(),
                    dates[t]
                )));
            }
            let v = if v <= 0.0 {
                floored += 1;
                spec.options.floor
            } else {
                v
            };
            entries.push((dates[t], v));
        }
        fits.push(SegmentFit {
            segment: *seg,
            model,
            diagnostics,
        });
    }
    if floored > 0 {
        log::warn!("{id} on {}: {floored} non-positive forecasts floored", series.symbol());
    }
    Ok(BacktestResult {
        forecasts: ForecastSet::new(id, series.symbol(), entries)?,
        floored,
        fits,
    })
}
