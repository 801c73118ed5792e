//! Daily realized-measure series and the estimators that produce them.

mod realized;
mod summary;
mod transform;

pub use realized::{compute_bpv, compute_log_returns, compute_rv};
pub(crate) use summary::breakpoint_indices;
pub use summary::{summary_stats, SummaryRow, SummaryTable, Transform};
pub use transform::{from_log_forecast, to_log};

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A calendar trading day, no time zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TradingDay(NaiveDate);

impl TradingDay {
    pub fn new(date: NaiveDate) -> Self {
        Self(date)
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .map(Self)
            .ok_or_else(|| Error::domain(format!("invalid date {year:04}-{month:02}-{day:02}")))
    }

    pub fn date(&self) -> NaiveDate {
        self.0
    }

    /// The next calendar day that is not a Saturday or Sunday.
    pub fn next_weekday(&self) -> Self {
        use chrono::{Datelike, Weekday};
        let mut d = self.0.succ_opt().expect("date overflow");
        while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            d = d.succ_opt().expect("date overflow");
        }
        Self(d)
    }
}

impl fmt::Display for TradingDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for TradingDay {
    type Err = Error;

    /// Parses `YYYY-MM-DD`; anything after the first ten characters (a time or
    /// offset suffix) is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let head = s.get(..10).unwrap_or(s);
        NaiveDate::parse_from_str(head, "%Y-%m-%d")
            .map(Self)
            .map_err(|e| Error::format(None, format!("bad date {s:?}: {e}")))
    }
}

/// One day of realized measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RvObservation {
    pub date: TradingDay,
    pub close: f64,
    /// Realized variance (squared-return units, or its log in a log-space series).
    pub rv: f64,
    /// Bipower variation, same units as `rv`.
    pub bpv: Option<f64>,
}

/// How ingestion treats non-positive realized measures.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ZeroPolicy {
    /// Drop rows whose RV (or present BPV) is not strictly positive.
    #[default]
    Drop,
    /// Replace non-positive RV/BPV by the given positive floor.
    Floor(f64),
}

impl ZeroPolicy {
    /// Applies the policy, returning the surviving rows and how many were dropped or floored.
    pub fn apply(&self, rows: Vec<RvObservation>) -> (Vec<RvObservation>, usize) {
        let bad = |o: &RvObservation| o.rv <= 0.0 || o.bpv.is_some_and(|b| b <= 0.0);
        let mut touched = 0;
        let out = match *self {
            ZeroPolicy::Drop => rows
                .into_iter()
                .filter(|o| {
                    let keep = !bad(o);
                    touched += usize::from(!keep);
                    keep
                })
                .collect(),
            ZeroPolicy::Floor(eps) => rows
                .into_iter()
                .map(|mut o| {
                    if bad(&o) {
                        touched += 1;
                        o.rv = o.rv.max(eps);
                        o.bpv = o.bpv.map(|b| b.max(eps));
                    }
                    o
                })
                .collect(),
        };
        (out, touched)
    }
}

/// A per-symbol, strictly date-ordered sequence of daily realized measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RvSeries {
    symbol: String,
    observations: Vec<RvObservation>,
    log_space: bool,
}

impl RvSeries {
    /// Builds a linear-space series, checking ordering and sign constraints.
    pub fn new(symbol: impl Into<String>, observations: Vec<RvObservation>) -> Result<Self> {
        let symbol = symbol.into();
        for (i, o) in observations.iter().enumerate() {
            if !(o.close.is_finite() && o.close > 0.0) {
                return Err(Error::domain(format!(
                    "{symbol} {}: close must be positive, got {}",
                    o.date, o.close
                )));
            }
            if !(o.rv.is_finite() && o.rv >= 0.0) {
                return Err(Error::domain(format!(
                    "{symbol} {}: rv must be nonnegative, got {}",
                    o.date, o.rv
                )));
            }
            if let Some(b) = o.bpv {
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::domain(format!(
                        "{symbol} {}: bpv must be nonnegative, got {b}",
                        o.date
                    )));
                }
            }
            if i > 0 && observations[i - 1].date >= o.date {
                return Err(Error::domain(format!(
                    "{symbol}: dates not strictly increasing at {} (after {})",
                    o.date,
                    observations[i - 1].date
                )));
            }
        }
        Ok(Self {
            symbol,
            observations,
            log_space: false,
        })
    }

    pub(crate) fn from_parts(symbol: String, observations: Vec<RvObservation>, log_space: bool) -> Self {
        Self {
            symbol,
            observations,
            log_space,
        }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn observations(&self) -> &[RvObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Whether `rv`/`bpv` hold natural logs of the measures.
    pub fn is_log_space(&self) -> bool {
        self.log_space
    }

    pub fn dates(&self) -> Vec<TradingDay> {
        self.observations.iter().map(|o| o.date).collect()
    }

    pub fn rv(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.rv).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.close).collect()
    }

    /// BPV values, or an error naming the first date where BPV is missing.
    pub fn bpv(&self) -> Result<Vec<f64>> {
        self.observations
            .iter()
            .map(|o| {
                o.bpv.ok_or_else(|| {
                    Error::domain(format!("{}: missing bpv on {}", self.symbol, o.date))
                })
            })
            .collect()
    }

    pub fn position(&self, date: TradingDay) -> Option<usize> {
        self.observations.binary_search_by(|o| o.date.cmp(&date)).ok()
    }
}

/// Intraday log-returns for a single trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct IntradayReturns {
    pub day: TradingDay,
    pub returns: Vec<f64>,
}

impl IntradayReturns {
    pub fn new(day: TradingDay, returns: Vec<f64>) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::domain(format!("{day}: no intraday returns")));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::domain(format!("{day}: intraday return {i} is not finite")));
        }
        Ok(Self { day, returns })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(d: u32, rv: f64) -> RvObservation {
        RvObservation {
            date: TradingDay::from_ymd(2020, 1, d).unwrap(),
            close: 100.0,
            rv,
            bpv: Some(rv),
        }
    }

    #[test]
    fn rejects_unordered_dates() {
        let err = RvSeries::new("X", vec![obs(3, 1.0), obs(2, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(RvSeries::new("X", vec![obs(2, 1.0), obs(2, 1.0)]).is_err());
    }

    #[test]
    fn rejects_negative_rv_and_bad_close() {
        assert!(RvSeries::new("X", vec![obs(2, -1.0)]).is_err());
        let mut o = obs(2, 1.0);
        o.close = 0.0;
        assert!(RvSeries::new("X", vec![o]).is_err());
    }

    #[test]
    fn day_parsing_ignores_time_suffix() {
        let d: TradingDay = "2000-01-03 00:00:00+01:00".parse().unwrap();
        assert_eq!(d.to_string(), "2000-01-03");
        assert!("2000-13-01".parse::<TradingDay>().is_err());
    }

    #[test]
    fn zero_policy_drop_and_floor() {
        let rows = vec![obs(2, 1.0), obs(3, 0.0), obs(6, 2.0)];
        let (kept, dropped) = ZeroPolicy::Drop.apply(rows.clone());
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped, 1);
        let (floored, n) = ZeroPolicy::Floor(1e-8).apply(rows);
        assert_eq!(floored.len(), 3);
        assert_eq!(n, 1);
        assert_eq!(floored[1].rv, 1e-8);
        assert_eq!(floored[1].bpv, Some(1e-8));
    }

    #[test]
    fn next_weekday_skips_weekend() {
        let fri = TradingDay::from_ymd(2021, 12, 31).unwrap();
        assert_eq!(fri.next_weekday().to_string(), "2022-01-03");
    }
}
