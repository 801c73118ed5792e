//! Seeded data-generating processes for the benchmark models and a synthetic
//! market generator used for fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::models::{frac_integrate, RgarchParams, HAR_LAGS};
use crate::series::{compute_bpv, compute_rv, IntradayReturns, RvObservation, RvSeries, TradingDay};

const BURN_IN: usize = 500;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// HAR recursion `x_t = ω + β_d x_{t−1} + β_w mean5 + β_m mean22 + ε_t`, Gaussian ε.
pub fn simulate_har(n: usize, omega: f64, betas: [f64; 3], noise_sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, noise_sd).expect("noise sd must be finite and nonnegative");
    let persistence: f64 = betas.iter().sum();
    let start = if persistence < 1.0 {
        omega / (1.0 - persistence)
    } else {
        omega
    };
    let total = n + BURN_IN;
    let mut x = vec![start; HAR_LAGS];
    x.reserve(total);
    while x.len() < total + HAR_LAGS {
        let t = x.len();
        let w = x[t - 5..t].iter().sum::<f64>() / 5.0;
        let m = x[t - 22..t].iter().sum::<f64>() / 22.0;
        let v = omega + betas[0] * x[t - 1] + betas[1] * w + betas[2] * m + noise.sample(&mut rng);
        x.push(v);
    }
    x.split_off(x.len() - n)
}

/// ARFIMA(p, d, q): ARMA innovations fractionally integrated over the full
/// path, with a burn-in discarded from the front.
pub fn simulate_arfima(n: usize, d: f64, ar: &[f64], ma: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    let total = n + BURN_IN * 2;
    let eps: Vec<f64> = (0..total)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut u = vec![0.0; total];
    for t in 0..total {
        let mut v = eps[t];
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                v += phi * u[t - 1 - i];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                v += theta * eps[t - 1 - j];
            }
        }
        u[t] = v;
    }
    let x = frac_integrate(&u, d, total).expect("d within [-1, 1]");
    x[total - n..].to_vec()
}

/// Returns and realized variances from a Realized GARCH of any order.
pub fn simulate_rgarch(params: &RgarchParams, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng(seed);
    let (p, q) = params.order();
    let su = params.sigma_u2.sqrt();
    let total = n + BURN_IN;
    let mut log_h: Vec<f64> = vec![params.h1.ln(); p.max(q)];
    let mut log_rv: Vec<f64> = vec![params.xi + params.phi * params.h1.ln(); p.max(q)];
    let mut returns = Vec::with_capacity(total);
    for _ in 0..total {
        let t = log_h.len();
        let mut lh = params.omega;
        for (i, b) in params.beta.iter().enumerate() {
            lh += b * log_h[t - 1 - i];
        }
        for (j, a) in params.alpha.iter().enumerate() {
            lh += a * log_rv[t - 1 - j];
        }
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = su * rng.sample::<f64, _>(StandardNormal);
        returns.push((0.5 * lh).exp() * z);
        log_rv.push(params.xi + params.phi * lh + params.tau * z + u);
        log_h.push(lh);
    }
    let rv = log_rv[log_rv.len() - n..].iter().map(|v| v.exp()).collect();
    (returns[total - n..].to_vec(), rv)
}

/// Settings for [`simulate_market`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    pub days: usize,
    /// Intraday returns per day (78 five-minute bars in a 6.5-hour session).
    pub intraday: usize,
    /// Long-run mean of the daily log variance.
    pub mean_log_var: f64,
    /// AR(1) coefficient of the daily log variance.
    pub persistence: f64,
    /// Innovation standard deviation of the daily log variance.
    pub vol_of_vol: f64,
    /// Daily probability of a single intraday price jump.
    pub jump_prob: f64,
    /// Jump size standard deviation relative to the daily volatility.
    pub jump_scale: f64,
    pub start: TradingDay,
    pub start_price: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            days: 1000,
            intraday: 78,
            mean_log_var: (1e-4f64).ln(),
            persistence: 0.97,
            vol_of_vol: 0.25,
            jump_prob: 0.05,
            jump_scale: 0.5,
            start: TradingDay::from_ymd(2000, 1, 3).expect("valid date"),
            start_price: 1000.0,
        }
    }
}

/// A synthetic daily series whose RV and BPV are computed from simulated
/// intraday returns under stochastic log variance with occasional jumps.
pub fn simulate_market(symbol: &str, config: &MarketConfig, seed: u64) -> RvSeries {
    let mut rng = rng(seed);
    let mut log_var = config.mean_log_var;
    let mut date = config.start;
    let mut close = config.start_price;
    let mut obs = Vec::with_capacity(config.days);
    let innov_sd = config.vol_of_vol * (1.0 - config.persistence.powi(2)).sqrt();
    for _ in 0..config.days {
        log_var = config.mean_log_var
            + config.persistence * (log_var - config.mean_log_var)
            + innov_sd * rng.sample::<f64, _>(StandardNormal);
        let daily_sd = (0.5 * log_var).exp();
        let bar_sd = daily_sd / (config.intraday as f64).sqrt();
        let mut returns: Vec<f64> = (0..config.intraday)
            .map(|_| bar_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if rng.random_bool(config.jump_prob) {
            let at = rng.random_range(0..config.intraday);
            returns[at] += config.jump_scale * daily_sd * rng.sample::<f64, _>(StandardNormal);
        }
        let day = IntradayReturns::new(date, returns).expect("finite simulated returns");
        let rv = compute_rv(&day).expect("nonempty day");
        let bpv = compute_bpv(&day).expect("at least two bars");
        close *= day.returns.iter().sum::<f64>().exp();
        obs.push(RvObservation {
            date,
            close,
            rv,
            bpv: Some(bpv),
        });
        date = date.next_weekday();
    }
    RvSeries::new(symbol, obs).expect("simulated series satisfies invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seed_deterministic() {
        assert_eq!(
            simulate_har(100, 0.1, [0.4, 0.3, 0.2], 0.05, 3),
            simulate_har(100, 0.1, [0.4, 0.3, 0.2], 0.05, 3)
        );
        let cfg = MarketConfig {
            days: 50,
            ..Default::default()
        };
        assert_eq!(simulate_market("A", &cfg, 9), simulate_market("A", &cfg, 9));
        assert_ne!(simulate_market("A", &cfg, 9), simulate_market("A", &cfg, 10));
    }

    #[test]
    fn market_series_is_well_formed() {
        let cfg = MarketConfig {
            days: 300,
            ..Default::default()
        };
        let s = simulate_market("SYN", &cfg, 1);
        assert_eq!(s.len(), 300);
        assert!(s.observations().iter().all(|o| o.rv > 0.0 && o.bpv.unwrap() > 0.0));
        let mean_rv = s.rv().iter().sum::<f64>() / 300.0;
        assert!(mean_rv > 2e-5 && mean_rv < 5e-4, "{mean_rv}");
    }
}
