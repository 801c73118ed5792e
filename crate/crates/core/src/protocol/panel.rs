use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::series::{RvSeries, TradingDay};

/// Dated one-day-ahead forecasts from one model for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub model_id: String,
    pub symbol: String,
    entries: BTreeMap<TradingDay, f64>,
}

impl ForecastSet {
    /// Rejects duplicate dates and forecasts that are not finite and positive.
    pub fn new(
        model_id: impl Into<String>,
        symbol: impl Into<String>,
        entries: impl IntoIterator<Item = (TradingDay, f64)>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        let mut map = BTreeMap::new();
        for (date, value) in entries {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!(
                    "{model_id}: forecast {value} on {date} is not finite and positive"
                )));
            }
            if map.insert(date, value).is_some() {
                return Err(Error::domain(format!("{model_id}: duplicate forecast date {date}")));
            }
        }
        Ok(Self {
            model_id,
            symbol: symbol.into(),
            entries: map,
        })
    }

    pub fn entries(&self) -> &BTreeMap<TradingDay, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, date: TradingDay) -> Option<f64> {
        self.entries.get(&date).copied()
    }

    pub fn first_date(&self) -> Option<TradingDay> {
        self.entries.keys().next().copied()
    }

    pub fn last_date(&self) -> Option<TradingDay> {
        self.entries.keys().next_back().copied()
    }
}

/// Actuals and forecasts of several models over a common set of dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub symbol: String,
    pub dates: Vec<TradingDay>,
    pub actuals: Vec<f64>,
    /// Model ids with their forecasts, in the order the sets were supplied.
    pub forecasts: Vec<(String, Vec<f64>)>,
}

impl AlignedPanel {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.forecasts.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn forecast(&self, model_id: &str) -> Result<&[f64]> {
        self.forecasts
            .iter()
            .find(|(id, _)| id == model_id)
            .map(|(_, f)| f.as_slice())
            .ok_or_else(|| Error::domain(format!("model {model_id} is not in the panel")))
    }
}

fn bare_symbol(s: &str) -> &str {
    s.strip_prefix('.').unwrap_or(s)
}

/// Inner join of the series' RV with every forecast set, optionally restricted
/// to an inclusive date window.
pub fn align(
    series: &RvSeries,
    sets: &[ForecastSet],
    window: Option<(TradingDay, TradingDay)>,
) -> Result<AlignedPanel> {
    if series.is_log_space() {
        return Err(Error::domain("actuals must be in linear space"));
    }
    if sets.is_empty() {
        return Err(Error::domain("no forecast sets to align"));
    }
    let mut seen = BTreeSet::new();
    for s in sets {
        if bare_symbol(&s.symbol) != bare_symbol(series.symbol()) {
            return Err(Error::domain(format!(
                "forecast set {} is for symbol {}, series is {}",
                s.model_id,
                s.symbol,
                series.symbol()
            )));
        }
        if !seen.insert(s.model_id.as_str()) {
            return Err(Error::domain(format!("duplicate model id {}", s.model_id)));
        }
    }
    let mut dates = Vec::new();
    let mut actuals = Vec::new();
    let mut forecasts: Vec<(String, Vec<f64>)> =
        sets.iter().map(|s| (s.model_id.clone(), Vec::new())).collect();
    for obs in series.observations() {
        if let Some((lo, hi)) = window {
            if obs.date < lo || obs.date > hi {
                continue;
            }
        }
        let row: Option<Vec<f64>> = sets.iter().map(|s| s.get(obs.date)).collect();
        if let Some(row) = row {
            dates.push(obs.date);
            actuals.push(obs.rv);
            for ((_, col), v) in forecasts.iter_mut().zip(row) {
                col.push(v);
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::domain(format!(
            "{}: forecast sets and actuals share no dates",
            series.symbol()
        )));
    }
    Ok(AlignedPanel {
        symbol: series.symbol().to_string(),
        dates,
        actuals,
        forecasts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_market, MarketConfig};

    fn series() -> RvSeries {
        let cfg = MarketConfig {
            days: 60,
            ..Default::default()
        };
        simulate_market("SYN", &cfg, 4)
    }

    fn set(id: &str, s: &RvSeries, range: std::ops::Range<usize>) -> ForecastSet {
        let obs = &s.observations()[range];
        ForecastSet::new(id, s.symbol(), obs.iter().map(|o| (o.date, o.rv * 1.1))).unwrap()
    }

    #[test]
    fn identical_dates_give_full_panel() {
        let s = series();
        let p = align(&s, &[set("A", &s, 20..60), set("B", &s, 20..60)], None).unwrap();
        assert_eq!(p.len(), 40);
        assert_eq!(p.model_ids(), vec!["A", "B"]);
    }

    #[test]
    fn offset_sets_join_on_overlap() {
        let s = series();
        let p = align(&s, &[set("A", &s, 20..59), set("B", &s, 21..60)], None).unwrap();
        assert_eq!(p.len(), 38);
        assert_eq!(p.dates[0], s.observations()[21].date);
    }

    #[test]
    fn actuals_are_bit_exact() {
        let s = series();
        let p = align(&s, &[set("A", &s, 10..60)], None).unwrap();
        for (d, a) in p.dates.iter().zip(&p.actuals) {
            let i = s.position(*d).unwrap();
            assert_eq!(a.to_bits(), s.observations()[i].rv.to_bits());
        }
    }

    #[test]
    fn window_restricts_dates() {
        let s = series();
        let lo = s.observations()[30].date;
        let hi = s.observations()[39].date;
        let p = align(&s, &[set("A", &s, 20..60)], Some((lo, hi))).unwrap();
        assert_eq!(p.len(), 10);
    }

    #[test]
    fn errors() {
        let s = series();
        assert!(align(&s, &[], None).is_err());
        assert!(align(&s, &[set("A", &s, 0..10), set("A", &s, 0..10)], None).is_err());
        assert!(align(&s, &[set("A", &s, 0..10), set("B", &s, 20..30)], None).is_err());
        let other = ForecastSet::new("A", "OTHER", vec![]).unwrap();
        assert!(align(&s, &[other], None).is_err());
        let d = s.observations()[0].date;
        assert!(ForecastSet::new("A", "SYN", vec![(d, 0.0)]).is_err());
        assert!(ForecastSet::new("A", "SYN", vec![(d, 1.0), (d, 2.0)]).is_err());
    }

    #[test]
    fn leading_dot_symbols_match() {
        let s = series();
        let f = ForecastSet::new("A", ".SYN", vec![(s.observations()[5].date, 1.0)]).unwrap();
        assert_eq!(align(&s, &[f], None).unwrap().len(), 1);
    }
}
