use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::losses::LossSeries;
use crate::stats::hac::newey_west_lrv;

const MIN_P: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult {
    /// `NaN` when degenerate.
    pub statistic: f64,
    /// `P(Z ≥ DM)`: small values say the first model has the larger loss.
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub n: usize,
    pub hac_lags: usize,
    /// The loss differential has no variation; statistic and p-values are `NaN`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GwInstruments {
    /// `h = 1`: unconditional test, the squared DM statistic.
    #[default]
    Constant,
    /// `h_{t−1} = (1, d_{t−1})`.
    LaggedDifferential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Number of instruments, the χ² degrees of freedom.
    pub k: usize,
    pub n: usize,
    pub degenerate: bool,
}

fn check_pair(a: &LossSeries, b: &LossSeries) -> Result<()> {
    if a.kind != b.kind {
        return Err(Error::domain(format!("loss kinds differ: {} vs {}", a.kind, b.kind)));
    }
    if a.dates != b.dates {
        return Err(Error::domain(format!(
            "loss series of {} and {} cover different dates",
            a.model_id, b.model_id
        )));
    }
    Ok(())
}

fn differential(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::domain(format!("loss lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() < MIN_P {
        return Err(Error::domain(format!(
            "pairwise tests need at least {MIN_P} periods, got {}",
            a.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Diebold–Mariano test of equal mean loss with a Newey–West variance.
pub fn dm_test(a: &LossSeries, b: &LossSeries, lags: Option<usize>) -> Result<DmResult> {
    check_pair(a, b)?;
    dm_test_values(&a.values, &b.values, lags)
}

pub fn dm_test_values(a: &[f64], b: &[f64], lags: Option<usize>) -> Result<DmResult> {
    let d = differential(a, b)?;
    let n = d.len();
    let lrv = match newey_west_lrv(&d, lags) {
        Ok(v) if !v.floored => v,
        Ok(v) => return Ok(degenerate_dm(n, v.lags)),
        Err(Error::Degenerate(_)) => {
            return Ok(degenerate_dm(n, lags.unwrap_or_else(|| super::auto_lags(n))))
        }
        Err(e) => return Err(e),
    };
    let mean = d.iter().sum::<f64>() / n as f64;
    let statistic = mean / (lrv.value / n as f64).sqrt();
    let p_one_sided = std_normal().cdf(-statistic);
    Ok(DmResult {
        statistic,
        p_one_sided,
        p_two_sided: 2.0 * p_one_sided.min(1.0 - p_one_sided),
        n,
        hac_lags: lrv.lags,
        degenerate: false,
    })
}

fn degenerate_dm(n: usize, hac_lags: usize) -> DmResult {
    DmResult {
        statistic: f64::NAN,
        p_one_sided: f64::NAN,
        p_two_sided: f64::NAN,
        n,
        hac_lags,
        degenerate: true,
    }
}

/// Giacomini–White test of equal conditional predictive ability.
pub fn gw_test(a: &LossSeries, b: &LossSeries, instruments: GwInstruments) -> Result<GwResult> {
    check_pair(a, b)?;
    gw_test_values(&a.values, &b.values, instruments)
}

pub fn gw_test_values(a: &[f64], b: &[f64], instruments: GwInstruments) -> Result<GwResult> {
    let d = differential(a, b)?;
    match instruments {
        GwInstruments::Constant => {
            let dm = dm_test_values(a, b, None)?;
            let statistic = dm.statistic * dm.statistic;
            Ok(gw_result(statistic, 1, dm.n, dm.degenerate))
        }
        GwInstruments::LaggedDifferential => {
            // n·R² of the uncentred regression of 1 on z_t = h_{t−1} d_t
            let z: Vec<[f64; 2]> = (1..d.len()).map(|t| [d[t], d[t - 1] * d[t]]).collect();
            let n = z.len();
            if z.iter().all(|r| r[0] == 0.0 && r[1] == 0.0) {
                return Ok(gw_result(f64::NAN, 2, n, true));
            }
            let (mut s00, mut s01, mut s11, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in &z {
                s00 += r[0] * r[0];
                s01 += r[0] * r[1];
                s11 += r[1] * r[1];
                g0 += r[0];
                g1 += r[1];
            }
            let det = s00 * s11 - s01 * s01;
            if det <= 1e-12 * s00 * s11 {
                return Err(Error::estimation("singular instrument moment matrix"));
            }
            let statistic = (g0 * (s11 * g0 - s01 * g1) + g1 * (s00 * g1 - s01 * g0)) / det;
            Ok(gw_result(statistic, 2, n, false))
        }
    }
}

fn gw_result(statistic: f64, k: usize, n: usize, degenerate: bool) -> GwResult {
    let p_value = if degenerate {
        f64::NAN
    } else {
        let chi = ChiSquared::new(k as f64).expect("positive degrees of freedom");
        chi.sf(statistic)
    };
    GwResult {
        statistic,
        p_value,
        k,
        n,
        degenerate,
    }
}
