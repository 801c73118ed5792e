use crate::error::{Error, Result};
use crate::series::{RvObservation, RvSeries};

/// Replaces RV (and BPV, when present) by natural logs.
///
/// Every measure must be strictly positive; the error lists the offending dates.
pub fn to_log(series: &RvSeries) -> Result<RvSeries> {
    if series.is_log_space() {
        return Err(Error::domain(format!("{} is already in log space", series.symbol())));
    }
    let bad: Vec<String> = series
        .observations()
        .iter()
        .filter(|o| o.rv <= 0.0 || o.bpv.is_some_and(|b| b <= 0.0))
        .map(|o| o.date.to_string())
        .collect();
    if !bad.is_empty() {
        let shown = bad.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
        let more = if bad.len() > 10 {
            format!(" (+{} more)", bad.len() - 10)
        } else {
            String::new()
        };
        return Err(Error::domain(format!(
            "{}: cannot take log of non-positive realized measure on {} date(s): {shown}{more}",
            series.symbol(),
            bad.len()
        )));
    }
    let obs = series
        .observations()
        .iter()
        .map(|o| RvObservation {
            rv: o.rv.ln(),
            bpv: o.bpv.map(f64::ln),
            ..*o
        })
        .collect();
    Ok(RvSeries::from_parts(series.symbol().to_string(), obs, true))
}

/// Maps a log-space forecast back to the variance scale by plain exponentiation.
///
/// Overflow saturates to `+inf` and logs a warning.
pub fn from_log_forecast(log_forecast: f64) -> f64 {
    let v = log_forecast.exp();
    if v.is_infinite() {
        log::warn!("log forecast {log_forecast} overflows on exponentiation");
    }
    v
}
