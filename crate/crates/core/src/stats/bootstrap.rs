use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub expected_block_length: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replications: usize, expected_block_length: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            replications,
            expected_block_length,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            replications: 2000,
            expected_block_length: 12.0,
            seed,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(Error::domain(format!(
                "bootstrap needs at least 100 replications, got {}",
                self.replications
            )));
        }
        if !(self.expected_block_length > 1.0 && self.expected_block_length.is_finite()) {
            return Err(Error::domain(format!(
                "expected block length must exceed 1, got {}",
                self.expected_block_length
            )));
        }
        Ok(())
    }
}

/// Indices of replication `rep`, drawn from its own stream of the seeded generator
/// so that the result does not depend on which replications are computed.
pub fn bootstrap_indices(n: usize, cfg: &BootstrapConfig, rep: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let restart = 1.0 / cfg.expected_block_length;
    let mut out = Vec::with_capacity(n);
    let mut i = rng.random_range(0..n);
    out.push(i);
    while out.len() < n {
        i = if rng.random_bool(restart) {
            rng.random_range(0..n)
        } else {
            (i + 1) % n
        };
        out.push(i);
    }
    out
}

/// Politis–Romano resampling: circular blocks with geometric lengths.
pub fn stationary_bootstrap(n: usize, cfg: &BootstrapConfig) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::domain(format!("bootstrap needs n ≥ 2, got {n}")));
    }
    cfg.validate()?;
    Ok((0..cfg.replications)
        .into_par_iter()
        .map(|rep| bootstrap_indices(n, cfg, rep))
        .collect())
}
