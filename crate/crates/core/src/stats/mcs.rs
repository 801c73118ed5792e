use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::losses::LossSeries;
use crate::stats::bootstrap::{bootstrap_indices, BootstrapConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McsStatistic {
    /// `T_R = max_{i,j} |t_ij|`, eliminating `argmax_i max_j t_ij`.
    #[default]
    Range,
    /// `T_max = max_i t_i·` on deviations from the set average.
    Max,
}

impl fmt::Display for McsStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            McsStatistic::Range => "range",
            McsStatistic::Max => "max",
        })
    }
}

impl FromStr for McsStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "range" | "tr" | "t_r" => Ok(McsStatistic::Range),
            "max" | "tmax" | "t_max" => Ok(McsStatistic::Max),
            _ => Err(Error::domain(format!("unknown MCS statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsResult {
    pub level: f64,
    /// Superior set at `level`, in input order.
    pub retained: Vec<String>,
    /// Models removed before the equivalence test stopped rejecting, with their MCS p-values.
    pub eliminated: Vec<(String, f64)>,
    /// The complete elimination sequence down to one model; the last entry has p = 1.
    pub sequence: Vec<(String, f64)>,
    /// MCS p-value of every model, in input order.
    pub mcs_p: Vec<(String, f64)>,
}

impl McsResult {
    pub fn p_value(&self, model_id: &str) -> Option<f64> {
        self.mcs_p.iter().find(|(id, _)| id == model_id).map(|(_, p)| *p)
    }

    /// Superior set at another confidence level from the same p-values.
    pub fn retained_at(&self, level: f64) -> Vec<String> {
        self.mcs_p
            .iter()
            .filter(|(_, p)| *p >= 1.0 - level)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.5 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("MCS level must lie in (0.5, 1), got {level}")))
    }
}

/// Pair-or-model studentization; zero bootstrap variance yields `0` for a zero
/// mean and `±inf` otherwise, and drops out of the bootstrap maximum.
fn studentize(mean: f64, var: f64) -> f64 {
    if var > 0.0 {
        mean / var.sqrt()
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    }
}

/// Returns the test p-value and the index (into `alive`) of the model to drop.
fn step(
    alive: &[usize],
    mean: &[f64],
    boot: &[Vec<f64>],
    statistic: McsStatistic,
) -> (f64, usize) {
    let b = boot.len() as f64;
    let mut t_star = vec![0.0f64; boot.len()];
    let t_obs;
    let worst;
    match statistic {
        McsStatistic::Range => {
            let k = alive.len();
            let mut t_max = 0.0f64;
            let mut row_max = vec![f64::NEG_INFINITY; k];
            for a in 0..k {
                for c in a + 1..k {
                    let (i, j) = (alive[a], alive[c]);
                    let d = mean[i] - mean[j];
                    let var = boot
                        .iter()
                        .map(|r| (r[i] - r[j] - d).powi(2))
                        .sum::<f64>()
                        / b;
                    let t = studentize(d, var);
                    t_max = t_max.max(t.abs());
                    row_max[a] = row_max[a].max(t);
                    row_max[c] = row_max[c].max(-t);
                    if var > 0.0 {
                        let s = var.sqrt();
                        for (ts, r) in t_star.iter_mut().zip(boot) {
                            *ts = ts.max((r[i] - r[j] - d).abs() / s);
                        }
                    }
                }
            }
            t_obs = t_max;
            worst = argmax(&row_max);
        }
        McsStatistic::Max => {
            let k = alive.len() as f64;
            let avg = alive.iter().map(|&i| mean[i]).sum::<f64>() / k;
            let boot_avg: Vec<f64> =
                boot.iter().map(|r| alive.iter().map(|&i| r[i]).sum::<f64>() / k).collect();
            let mut ts = Vec::with_capacity(alive.len());
            for &i in alive {
                let d = mean[i] - avg;
                let var = boot
                    .iter()
                    .zip(&boot_avg)
                    .map(|(r, ra)| (r[i] - ra - d).powi(2))
                    .sum::<f64>()
                    / b;
                ts.push(studentize(d, var));
                if var > 0.0 {
                    let s = var.sqrt();
                    for ((t, r), ra) in t_star.iter_mut().zip(boot).zip(&boot_avg) {
                        *t = t.max((r[i] - ra - d) / s);
                    }
                }
            }
            t_obs = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst = argmax(&ts);
        }
    }
    let exceed = t_star.iter().filter(|t| **t >= t_obs).count();
    (exceed as f64 / b, worst)
}

/// First index of the largest value.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Model Confidence Set by sequential elimination with stationary-bootstrap p-values.
pub fn mcs(
    losses: &[LossSeries],
    cfg: &BootstrapConfig,
    level: f64,
    statistic: McsStatistic,
) -> Result<McsResult> {
    check_level(level)?;
    cfg.validate()?;
    if losses.len() < 2 {
        return Err(Error::domain("MCS needs at least two models"));
    }
    let first = &losses[0];
    for l in &losses[1..] {
        if l.kind != first.kind || l.dates != first.dates {
            return Err(Error::domain(format!(
                "loss series of {} and {} are not aligned or differ in kind",
                first.model_id, l.model_id
            )));
        }
        if losses.iter().filter(|o| o.model_id == l.model_id).count() > 1 {
            return Err(Error::domain(format!("duplicate model id {}", l.model_id)));
        }
    }
    let n = first.len();
    if n < 2 {
        return Err(Error::domain("MCS needs at least two periods"));
    }
    let m = losses.len();
    let mean: Vec<f64> = losses.iter().map(|l| l.values.iter().sum::<f64>() / n as f64).collect();
    // bootstrap means of every model, computed once and reused at every step
    let boot: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let idx = bootstrap_indices(n, cfg, rep);
            losses
                .iter()
                .map(|l| idx.iter().map(|&t| l.values[t]).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();

    let mut alive: Vec<usize> = (0..m).collect();
    let mut sequence = Vec::with_capacity(m);
    let mut running = 0.0f64;
    while alive.len() > 1 {
        let (p, worst) = step(&alive, &mean, &boot, statistic);
        running = running.max(p);
        let out = alive.remove(worst);
        sequence.push((out, running));
    }
    sequence.push((alive[0], 1.0));

    let mut p_of = vec![0.0; m];
    for &(i, p) in &sequence {
        p_of[i] = p;
    }
    let alpha = 1.0 - level;
    let id = |i: usize| losses[i].model_id.clone();
    Ok(McsResult {
        level,
        retained: (0..m).filter(|&i| p_of[i] >= alpha).map(id).collect(),
        eliminated: sequence.iter().filter(|(_, p)| *p < alpha).map(|&(i, p)| (id(i), p)).collect(),
        sequence: sequence.iter().map(|&(i, p)| (id(i), p)).collect(),
        mcs_p: (0..m).map(|i| (id(i), p_of[i])).collect(),
    })
}

/// Share of results whose superior set at each level contains the model;
/// models in first-seen order.
pub fn inclusion_rates(results: &[McsResult], levels: &[f64]) -> Vec<(String, Vec<f64>)> {
    let mut ids: Vec<String> = Vec::new();
    for r in results {
        for (id, _) in &r.mcs_p {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
    }
    ids.into_iter()
        .map(|id| {
            let rates = levels
                .iter()
                .map(|&level| {
                    let with: Vec<f64> = results.iter().filter_map(|r| r.p_value(&id)).collect();
                    if with.is_empty() {
                        return f64::NAN;
                    }
                    with.iter().filter(|p| **p >= 1.0 - level).count() as f64 / with.len() as f64
                })
                .collect();
            (id, rates)
        })
        .collect()
}
