//! Realized-volatility forecasting and forecast-evaluation toolkit.
//!
//! The crate is organised along the pipeline it supports:
//!
//! - [`series`]: daily realized-measure series, intraday estimators (RV, BPV),
//!   log transforms and segment summaries.
//! - [`models`]: HAR, CHAR, ARFIMA and Realized GARCH estimation and
//!   one-day-ahead forecasting.
//! - [`protocol`]: the expanding-window split plan, the re-estimation backtest
//!   driver and alignment of forecast sets against actuals.
//! - [`losses`]: the six point-forecast losses, skill matrices and
//!   decile-conditional reports.
//! - [`stats`]: Newey–West long-run variance, Diebold–Mariano and
//!   Giacomini–White tests, the stationary bootstrap and the Model Confidence Set.
//! - [`io`]: Oxford-Man and canonical CSV ingestion, forecast-file exchange and
//!   report emission.
//! - [`sim`]: seeded data-generating processes used for fixtures and tests.

pub mod error;
pub mod io;
pub mod losses;
pub mod models;
pub mod protocol;
pub mod series;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
