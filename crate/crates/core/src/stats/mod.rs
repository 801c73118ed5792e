//! Long-run variance estimation, pairwise predictive-accuracy tests, the
//! stationary bootstrap and the Model Confidence Set.

mod bootstrap;
mod hac;
mod mcs;
mod pairwise;

pub use bootstrap::{bootstrap_indices, stationary_bootstrap, BootstrapConfig};
pub use hac::{auto_lags, newey_west_lrv, LongRunVariance};
pub use mcs::{inclusion_rates, mcs, McsResult, McsStatistic};
pub use pairwise::{dm_test, dm_test_values, gw_test, gw_test_values, DmResult, GwInstruments, GwResult};
