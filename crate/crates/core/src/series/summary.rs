use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::RvSeries;

/// Scale on which summary statistics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Variance,
    /// `sqrt(rv)`, the usual scale for reporting realized volatility.
    Volatility,
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "variance" => Ok(Self::Variance),
            "volatility" => Ok(Self::Volatility),
            other => Err(Error::domain(format!(
                "unknown transform {other:?} (expected variance|volatility)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator; 0 for a single value).
    pub sd: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub symbol: String,
    pub transform: Transform,
    /// "Total" first, then one row per segment in order.
    pub rows: Vec<SummaryRow>,
}

/// Converts fractional breakpoints into cumulative boundary counts `floor(n·b)`.
pub(crate) fn breakpoint_indices(n: usize, breakpoints: &[f64]) -> Result<Vec<usize>> {
    if breakpoints.is_empty() {
        return Err(Error::domain("no breakpoints given"));
    }
    let mut prev = 0.0;
    for &b in breakpoints {
        if !(b > prev && b <= 1.0) {
            return Err(Error::domain(format!(
                "breakpoints must be strictly increasing in (0, 1], got {breakpoints:?}"
            )));
        }
        prev = b;
    }
    Ok(breakpoints
        .iter()
        .map(|&b| if b == 1.0 { n } else { (n as f64 * b).floor() as usize })
        .collect())
}

fn segment_label(k: usize, count: usize, lo: f64, hi: f64) -> String {
    let pct = ((hi - lo) * 100.0).round() as i64;
    if k == 0 {
        format!("First {pct}%")
    } else if k + 1 == count {
        format!("Last {pct}%")
    } else {
        format!("Next {pct}%")
    }
}

fn describe(label: String, values: &[f64]) -> SummaryRow {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    SummaryRow {
        label,
        count: n,
        min: sorted[0],
        mean,
        sd,
        median,
        max: sorted[n - 1],
    }
}

/// Min/mean/sd/median/max for the whole series and for each breakpoint segment.
///
/// Segment `k` covers observations `(floor(n·b[k-1]), floor(n·b[k])]`; a last
/// breakpoint below 1 leaves the tail out of the segment rows but not of "Total".
pub fn summary_stats(
    series: &RvSeries,
    breakpoints: &[f64],
    transform: Transform,
) -> Result<SummaryTable> {
    if series.is_empty() {
        return Err(Error::domain(format!("{}: empty series", series.symbol())));
    }
    if series.is_log_space() {
        return Err(Error::domain("summary statistics expect a linear-space series"));
    }
    let values: Vec<f64> = match transform {
        Transform::Variance => series.rv(),
        Transform::Volatility => series.rv().into_iter().map(f64::sqrt).collect(),
    };
    let bounds = breakpoint_indices(values.len(), breakpoints)?;
    let mut rows = vec![describe("Total".into(), &values)];
    let mut start = 0;
    let mut lo = 0.0;
    for (k, (&end, &hi)) in bounds.iter().zip(breakpoints).enumerate() {
        let label = segment_label(k, bounds.len(), lo, hi);
        if end <= start {
            return Err(Error::domain(format!("segment {label:?} is empty")));
        }
        rows.push(describe(label, &values[start..end]));
        start = end;
        lo = hi;
    }
    Ok(SummaryTable {
        symbol: series.symbol().to_string(),
        transform,
        rows,
    })
}
