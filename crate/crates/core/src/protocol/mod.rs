//! Split plans, the re-estimation backtest driver and forecast alignment.

mod backtest;
mod panel;
mod split;

pub use backtest::{
    run_backtest, BacktestResult, FittedModel, ModelKind, ModelOptions, ModelSpec, SegmentFit,
    FORECAST_FLOOR,
};
pub use panel::{align, AlignedPanel, ForecastSet};
pub use split::{make_split_plan, Segment, SplitPlan, WindowScheme, DEFAULT_BREAKPOINTS};
