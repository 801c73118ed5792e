use crate::error::{Error, Result};

const MIN_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunVariance {
    pub value: f64,
    pub lags: usize,
    /// The Bartlett sum was not positive and `value` is a floor.
    pub floored: bool,
}

/// `floor(4·(n/100)^{2/9})`.
pub fn auto_lags(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn autocov(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    let s: f64 = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
    s / n as f64
}

/// Bartlett-kernel long-run variance `γ_0 + 2 Σ_{j≤L} (1 − j/(L+1)) γ_j`,
/// autocovariances divided by `n`.
pub fn newey_west_lrv(x: &[f64], lags: Option<usize>) -> Result<LongRunVariance> {
    let n = x.len();
    if n < MIN_LEN {
        return Err(Error::domain(format!(
            "long-run variance needs at least {MIN_LEN} observations, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("long-run variance input is not finite"));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::Degenerate("input series is constant".into()));
    }
    let lags = lags.unwrap_or_else(|| auto_lags(n)).min(n - 1);
    let mean = x.iter().sum::<f64>() / n as f64;
    let gamma0 = autocov(x, mean, 0);
    let mut value = gamma0;
    for j in 1..=lags {
        let w = 1.0 - j as f64 / (lags as f64 + 1.0);
        value += 2.0 * w * autocov(x, mean, j);
    }
    let floor = f64::EPSILON * gamma0.max(f64::MIN_POSITIVE);
    if value <= floor {
        Ok(LongRunVariance {
            value: floor,
            lags,
            floored: true,
        })
    } else {
        Ok(LongRunVariance {
            value,
            lags,
            floored: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn auto_rule() {
        assert_eq!(auto_lags(100), 4);
        assert_eq!(auto_lags(500), 5);
        assert_eq!(auto_lags(30), 3);
        assert_eq!(auto_lags(10_000), 11);
    }

    #[test]
    fn zero_lags_is_population_variance() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0, 0.0, 2.0, 3.0, 4.0];
        let m = 3.0;
        let g0: f64 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 10.0;
        let r = newey_west_lrv(&x, Some(0)).unwrap();
        assert!((r.value - g0).abs() < 1e-15);
        assert_eq!(r.lags, 0);
    }

    #[test]
    fn hand_computed_one_lag() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        // γ0 = 8.25, γ1 = Σ(x_t−5.5)(x_{t−1}−5.5)/10 = 5.775, weight 1/2
        let r = newey_west_lrv(&x, Some(1)).unwrap();
        assert!((r.value - (8.25 + 5.775)).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn iid_normal_is_near_one() {
        let r = newey_west_lrv(&normals(10_000, 1), None).unwrap();
        assert!((0.9..=1.1).contains(&r.value), "{}", r.value);
    }

    #[test]
    fn ma1_long_run_variance() {
        let e = normals(20_001, 2);
        let x: Vec<f64> = (1..e.len()).map(|t| e[t] + 0.5 * e[t - 1]).collect();
        let r = newey_west_lrv(&x, None).unwrap();
        assert!((r.value / 2.25 - 1.0).abs() < 0.15, "{}", r.value);
    }

    #[test]
    fn errors_and_floor() {
        assert!(matches!(newey_west_lrv(&[2.0; 20], None), Err(Error::Degenerate(_))));
        assert!(newey_west_lrv(&[1.0; 9], None).is_err());
        // alternating series: large negative first-order autocovariance
        let x: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = newey_west_lrv(&x, Some(1)).unwrap();
        assert!(r.value > 0.0);
    }
}
