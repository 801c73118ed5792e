use std::ops::Range;

use crate::error::{Error, Result};
use crate::models::HAR_LAGS;
use crate::series::breakpoint_indices;

/// Expanding re-estimation at 50%, 70% and 90% of the sample.
pub const DEFAULT_BREAKPOINTS: [f64; 4] = [0.5, 0.7, 0.9, 1.0];

const MIN_N: usize = 100;
const TRAIN_FRAC: f64 = 0.8;

/// One estimation/evaluation round, in 1-based inclusive observation numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub fit_start: usize,
    pub fit_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

impl Segment {
    /// 0-based half-open range of estimation observations.
    pub fn fit_range(&self) -> Range<usize> {
        self.fit_start - 1..self.fit_end
    }

    /// 0-based half-open range of forecast targets.
    pub fn test_range(&self) -> Range<usize> {
        self.test_start - 1..self.test_end
    }

    pub fn test_len(&self) -> usize {
        self.test_end + 1 - self.test_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowScheme {
    /// Every round re-estimates on all observations up to its fit end.
    #[default]
    Expanding,
    /// Every round re-estimates on the most recent `width` observations.
    Rolling(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub n: usize,
    pub segments: Vec<Segment>,
    /// Share of each newly revealed block used for training when a model
    /// needs a validation split; the remainder is validation.
    pub train_frac: f64,
    pub val_frac: f64,
}

/// Boundaries `floor(n·b)`; round `k` fits on `[1, b_k]` and tests on `(b_k, b_{k+1}]`.
pub fn make_split_plan(n: usize, breakpoints: &[f64]) -> Result<SplitPlan> {
    if n < MIN_N {
        return Err(Error::domain(format!("split plan needs n ≥ {MIN_N}, got {n}")));
    }
    if breakpoints.len() < 2 || breakpoints.last() != Some(&1.0) {
        return Err(Error::domain(format!(
            "breakpoints must have at least two entries and end at 1.0, got {breakpoints:?}"
        )));
    }
    let bounds = breakpoint_indices(n, breakpoints)?;
    if bounds[0] <= HAR_LAGS {
        return Err(Error::domain(format!(
            "first estimation window has {} observations, need at least {}",
            bounds[0],
            HAR_LAGS + 1
        )));
    }
    let mut segments = Vec::with_capacity(bounds.len() - 1);
    for (k, w) in bounds.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::domain(format!("test window {} is empty", k + 1)));
        }
        segments.push(Segment {
            fit_start: 1,
            fit_end: w[0],
            test_start: w[0] + 1,
            test_end: w[1],
        });
    }
    Ok(SplitPlan {
        n,
        segments,
        train_frac: TRAIN_FRAC,
        val_frac: 1.0 - TRAIN_FRAC,
    })
}

impl SplitPlan {
    pub fn with_scheme(mut self, scheme: WindowScheme) -> Result<Self> {
        match scheme {
            WindowScheme::Expanding => {
                for s in &mut self.segments {
                    s.fit_start = 1;
                }
            }
            WindowScheme::Rolling(width) => {
                if width <= HAR_LAGS {
                    return Err(Error::domain(format!(
                        "rolling width {width} must exceed {HAR_LAGS}"
                    )));
                }
                for s in &mut self.segments {
                    if s.fit_end < width {
                        return Err(Error::domain(format!(
                            "rolling width {width} exceeds fit window ending at {}",
                            s.fit_end
                        )));
                    }
                    s.fit_start = s.fit_end - width + 1;
                }
            }
        }
        Ok(self)
    }

    /// Fit-window ends, 1-based.
    pub fn fit_ends(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.fit_end).collect()
    }

    /// Number of one-day-ahead forecasts the plan produces.
    pub fn forecast_count(&self) -> usize {
        self.segments.iter().map(Segment::test_len).sum()
    }

    /// Train/validation sizes of the data newly revealed to round `k`: the whole
    /// first window in round 0, the previous test block afterwards.
    pub fn incremental_split(&self, k: usize) -> Option<(usize, usize)> {
        let seg = self.segments.get(k)?;
        let block = if k == 0 {
            seg.fit_end
        } else {
            seg.fit_end - self.segments[k - 1].fit_end
        };
        let train = (block as f64 * self.train_frac).round() as usize;
        Some((train, block - train))
    }
}
