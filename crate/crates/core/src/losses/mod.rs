//! Forecast loss functions, per-period loss series, skill matrices and
//! loss ratios conditional on the level of realized variance.
//!
//! Percentage-type aggregates (MAPE, MDA, SMAPE) are scaled by 100. MDA is an
//! accuracy, so higher is better; every other loss is an error.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::protocol::AlignedPanel;
use crate::series::TradingDay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    Mse,
    Mae,
    Mape,
    Mda,
    Qlike,
    Smape,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Mse,
        LossKind::Mae,
        LossKind::Qlike,
        LossKind::Mape,
        LossKind::Mda,
        LossKind::Smape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "MSE",
            LossKind::Mae => "MAE",
            LossKind::Mape => "MAPE",
            LossKind::Mda => "MDA",
            LossKind::Qlike => "QLIKE",
            LossKind::Smape => "SMAPE",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == LossKind::Mda
    }

    fn scale(self) -> f64 {
        match self {
            LossKind::Mape | LossKind::Mda | LossKind::Smape => 100.0,
            _ => 1.0,
        }
    }

    fn needs_positive_actuals(self) -> bool {
        matches!(self, LossKind::Mape | LossKind::Qlike | LossKind::Smape)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MSE" => Ok(LossKind::Mse),
            "MAE" | "MAD" => Ok(LossKind::Mae),
            "MAPE" => Ok(LossKind::Mape),
            "MDA" => Ok(LossKind::Mda),
            "QLIKE" => Ok(LossKind::Qlike),
            "SMAPE" => Ok(LossKind::Smape),
            _ => Err(Error::domain(format!("unknown loss {s:?}"))),
        }
    }
}

/// Loss of a single forecast; not defined for MDA, which needs consecutive periods.
pub fn pointwise_loss(kind: LossKind, actual: f64, forecast: f64) -> f64 {
    match kind {
        LossKind::Mse => (actual - forecast).powi(2),
        LossKind::Mae => (actual - forecast).abs(),
        LossKind::Mape => ((actual - forecast) / actual).abs(),
        LossKind::Qlike => {
            let r = actual / forecast;
            r - r.ln() - 1.0
        }
        LossKind::Smape => 2.0 * (actual - forecast).abs() / (actual.abs() + forecast.abs()),
        LossKind::Mda => panic!("MDA has no pointwise loss"),
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Per-period loss contributions before the `1/P` or `100/P` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    pub kind: LossKind,
    pub model_id: String,
    /// Dates the contributions belong to; MDA starts at the second panel date.
    pub dates: Vec<TradingDay>,
    pub values: Vec<f64>,
}

impl LossSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Loss contributions from raw sequences; MDA yields `P − 1` values.
pub fn loss_values(kind: LossKind, actuals: &[f64], forecasts: &[f64]) -> Result<Vec<f64>> {
    if actuals.len() != forecasts.len() {
        return Err(Error::domain(format!(
            "{} actuals but {} forecasts",
            actuals.len(),
            forecasts.len()
        )));
    }
    if kind == LossKind::Mda {
        if actuals.len() < 2 {
            return Err(Error::domain("MDA needs at least two periods"));
        }
        return Ok((1..actuals.len())
            .map(|t| {
                let same = sign(actuals[t] - actuals[t - 1]) == sign(forecasts[t] - forecasts[t - 1]);
                if same {
                    1.0
                } else {
                    0.0
                }
            })
            .collect());
    }
    Ok(actuals
        .iter()
        .zip(forecasts)
        .map(|(a, f)| pointwise_loss(kind, *a, *f))
        .collect())
}

pub fn loss_series(kind: LossKind, panel: &AlignedPanel, model_id: &str) -> Result<LossSeries> {
    let forecasts = panel.forecast(model_id)?;
    if kind.needs_positive_actuals() {
        let bad: Vec<String> = panel
            .dates
            .iter()
            .zip(&panel.actuals)
            .filter(|(_, a)| **a <= 0.0)
            .map(|(d, _)| d.to_string())
            .collect();
        if !bad.is_empty() {
            return Err(Error::domain(format!(
                "{kind} undefined for non-positive actuals on {}",
                bad.join(", ")
            )));
        }
    }
    let values = loss_values(kind, &panel.actuals, forecasts)?;
    let dates = panel.dates[panel.dates.len() - values.len()..].to_vec();
    Ok(LossSeries {
        kind,
        model_id: model_id.to_string(),
        dates,
        values,
    })
}

/// Mean contribution, times 100 for MAPE, MDA and SMAPE.
pub fn aggregate_loss(series: &LossSeries) -> f64 {
    aggregate_values(series.kind, &series.values)
}

pub fn aggregate_values(kind: LossKind, values: &[f64]) -> f64 {
    kind.scale() * values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillMatrix {
    pub kind: LossKind,
    pub model_ids: Vec<String>,
    /// `ratios[i][j]` is model `j`'s aggregate over model `i`'s.
    pub ratios: Vec<Vec<f64>>,
    pub higher_is_better: bool,
}

pub fn skill_matrix(kind: LossKind, panel: &AlignedPanel) -> Result<SkillMatrix> {
    let ids = panel.model_ids();
    if ids.len() < 2 {
        return Err(Error::domain("skill matrix needs at least two models"));
    }
    let agg = ids
        .iter()
        .map(|id| {
            let a = aggregate_loss(&loss_series(kind, panel, id)?);
            if a > 0.0 {
                Ok(a)
            } else {
                Err(Error::domain(format!("{id} has zero {kind}; ratio undefined")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(skill_from_aggregates(kind, ids.iter().map(|s| s.to_string()).collect(), &agg))
}

/// Skill ratios from precomputed aggregates (all assumed positive).
pub fn skill_from_aggregates(kind: LossKind, model_ids: Vec<String>, agg: &[f64]) -> SkillMatrix {
    let ratios = agg
        .iter()
        .map(|row| agg.iter().map(|col| if col == row { 1.0 } else { col / row }).collect())
        .collect();
    SkillMatrix {
        kind,
        model_ids,
        ratios,
        higher_is_better: kind.higher_is_better(),
    }
}

/// Ten equal rank groups.
pub fn deciles() -> Vec<(f64, f64)> {
    (0..10).map(|i| (i as f64 / 10.0, (i + 1) as f64 / 10.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecileReport {
    pub kind: LossKind,
    pub benchmark: String,
    pub groups: Vec<(f64, f64)>,
    /// Model id with its aggregate relative to the benchmark's, per group.
    pub relative_losses: Vec<(String, Vec<f64>)>,
}

const MIN_GROUP: usize = 5;

/// Groups periods by the rank of the actual (ties by date) and reports each
/// model's aggregate within a group relative to the benchmark's.
pub fn decile_report(
    kind: LossKind,
    panel: &AlignedPanel,
    benchmark_id: &str,
    groups: &[(f64, f64)],
) -> Result<DecileReport> {
    panel.forecast(benchmark_id)?;
    if groups.is_empty() {
        return Err(Error::domain("no quantile groups"));
    }
    for &(lo, hi) in groups {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::domain(format!("malformed quantile group ({lo}, {hi})")));
        }
    }
    let p = panel.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| panel.actuals[a].total_cmp(&panel.actuals[b]).then(a.cmp(&b)));

    let series: Vec<LossSeries> = panel
        .model_ids()
        .iter()
        .map(|id| loss_series(kind, panel, id))
        .collect::<Result<_>>()?;
    // MDA contributions start at the second period
    let offset = p - series[0].len();

    let mut members: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for &(lo, hi) in groups {
        let a = (lo * p as f64).floor() as usize;
        let b = if hi == 1.0 { p } else { (hi * p as f64).floor() as usize };
        let idx: Vec<usize> = order[a..b]
            .iter()
            .filter(|&&t| t >= offset)
            .map(|&t| t - offset)
            .collect();
        if idx.len() < MIN_GROUP {
            return Err(Error::domain(format!(
                "quantile group ({lo}, {hi}) has {} periods, need at least {MIN_GROUP}",
                idx.len()
            )));
        }
        members.push(idx);
    }

    let group_agg = |s: &LossSeries, idx: &[usize]| {
        let vals: Vec<f64> = idx.iter().map(|&i| s.values[i]).collect();
        aggregate_values(kind, &vals)
    };
    let bench = series
        .iter()
        .find(|s| s.model_id == benchmark_id)
        .expect("benchmark checked above");
    let bench_agg: Vec<f64> = members.iter().map(|m| group_agg(bench, m)).collect();
    let relative_losses = series
        .iter()
        .map(|s| {
            let rel = members
                .iter()
                .zip(&bench_agg)
                .map(|(m, b)| {
                    let a = group_agg(s, m);
                    if s.model_id == benchmark_id {
                        1.0
                    } else {
                        a / b
                    }
                })
                .collect();
            (s.model_id.clone(), rel)
        })
        .collect();
    Ok(DecileReport {
        kind,
        benchmark: benchmark_id.to_string(),
        groups: groups.to_vec(),
        relative_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn panel(actuals: Vec<f64>, models: Vec<(&str, Vec<f64>)>) -> AlignedPanel {
        let mut d = TradingDay::from_ymd(2010, 1, 4).unwrap();
        let dates = actuals
            .iter()
            .map(|_| {
                let c = d;
                d = d.next_weekday();
                c
            })
            .collect();
        AlignedPanel {
            symbol: "T".into(),
            dates,
            actuals,
            forecasts: models.into_iter().map(|(id, f)| (id.to_string(), f)).collect(),
        }
    }

    #[test]
    fn perfect_forecast() {
        let a = vec![1.0, 2.0, 1.5, 3.0, 0.5];
        let p = panel(a.clone(), vec![("M", a)]);
        for kind in LossKind::ALL {
            let s = loss_series(kind, &p, "M").unwrap();
            let expect = if kind == LossKind::Mda { 1.0 } else { 0.0 };
            assert!(s.values.iter().all(|v| *v == expect), "{kind}");
        }
        assert_eq!(aggregate_loss(&loss_series(LossKind::Mda, &p, "M").unwrap()), 100.0);
    }

    #[test]
    fn formula_examples() {
        assert!((pointwise_loss(LossKind::Qlike, 2.0, 1.0) - 0.3068528194400547).abs() < 1e-15);
        assert_eq!(pointwise_loss(LossKind::Smape, 1.0, 3.0), 1.0);
        assert_eq!(pointwise_loss(LossKind::Mape, 4.0, 3.0), 0.25);
        let s = LossSeries {
            kind: LossKind::Mse,
            model_id: "M".into(),
            dates: vec![],
            values: vec![0.0, 0.0002],
        };
        assert!((aggregate_loss(&s) - 0.0001).abs() < 1e-18);
    }

    #[test]
    fn mda_has_p_minus_one_terms_and_sign_zero() {
        let p = panel(
            vec![1.0, 2.0, 2.0, 1.0, 3.0],
            vec![("M", vec![1.0, 1.5, 1.5, 2.0, 2.5])],
        );
        let s = loss_series(LossKind::Mda, &p, "M").unwrap();
        // changes: actual (+, 0, −, +), forecast (+, 0, +, +)
        assert_eq!(s.values, vec![1.0, 1.0, 0.0, 1.0]);
        assert_eq!(s.dates[0], p.dates[1]);
        assert_eq!(aggregate_loss(&s), 75.0);
    }

    #[test]
    fn zero_actual_lists_dates() {
        let p = panel(vec![1.0, 0.0, 2.0], vec![("M", vec![1.0, 1.0, 1.0])]);
        for kind in [LossKind::Qlike, LossKind::Mape, LossKind::Smape] {
            let err = loss_series(kind, &p, "M").unwrap_err().to_string();
            assert!(err.contains(&p.dates[1].to_string()), "{err}");
        }
        assert!(loss_series(LossKind::Mse, &p, "M").is_ok());
        assert!(loss_series(LossKind::Mse, &p, "X").is_err());
    }

    #[test]
    fn qlike_penalizes_under_prediction() {
        for a in [1e-4, 0.5, 1.0, 7.0] {
            assert_eq!(pointwise_loss(LossKind::Qlike, a, a), 0.0);
            let under = pointwise_loss(LossKind::Qlike, a, a * 0.9);
            let over = pointwise_loss(LossKind::Qlike, a, a * 1.1);
            assert!(under > over && over > 0.0);
        }
    }

    #[test]
    fn skill_matrix_conventions() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let fa: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        let fb: Vec<f64> = a.iter().zip([1.0, -1.0, 1.0, -1.0]).map(|(v, s)| v + s * 2f64.sqrt()).collect();
        let p = panel(a, vec![("A", fa), ("B", fb), ("C", vec![2.0, 1.0, 5.0, 3.0])]);
        let m = skill_matrix(LossKind::Mse, &p).unwrap();
        assert!((m.ratios[0][1] - 2.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(m.ratios[i][i], 1.0);
            for j in 0..3 {
                assert!((m.ratios[i][j] * m.ratios[j][i] - 1.0).abs() < 1e-12);
            }
        }
        assert!(!m.higher_is_better);
        assert!(skill_matrix(LossKind::Mda, &p).unwrap().higher_is_better);
    }

    #[test]
    fn skill_matrix_rejects_perfect_model() {
        let a = vec![1.0, 2.0, 3.0];
        let p = panel(a.clone(), vec![("A", a), ("B", vec![1.0, 1.0, 1.0])]);
        assert!(skill_matrix(LossKind::Mse, &p).is_err());
        let single = panel(vec![1.0, 2.0], vec![("A", vec![1.0, 1.0])]);
        assert!(skill_matrix(LossKind::Mse, &single).is_err());
    }

    #[test]
    fn decile_rank_selection_and_locality() {
        // actuals 100..1 in date order so rank and date order disagree
        let a: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        let bench: Vec<f64> = a.iter().map(|v| v * 1.1).collect();
        let mut other = bench.clone();
        // perturb the ten largest actuals: the first ten dates
        for v in &mut other[..10] {
            *v *= 1.5;
        }
        let p = panel(a, vec![("B", bench), ("O", other)]);
        let r = decile_report(LossKind::Mse, &p, "B", &deciles()).unwrap();
        assert_eq!(r.relative_losses[0].1, vec![1.0; 10]);
        let o = &r.relative_losses[1].1;
        for (k, v) in o.iter().enumerate() {
            if k == 9 {
                assert!(*v > 1.0);
            } else {
                assert_eq!(*v, 1.0);
            }
        }
        // the lowest decile holds actuals 1..=10, which sit on the last ten dates
        let mut low = p.forecasts[0].1.clone();
        for v in &mut low[90..] {
            *v *= 2.0;
        }
        let q = panel(p.actuals.clone(), vec![("B", p.forecasts[0].1.clone()), ("L", low)]);
        let r = decile_report(LossKind::Mae, &q, "B", &[(0.0, 0.1), (0.1, 1.0)]).unwrap();
        // forecast 1.1a vs 2.2a: MAE 0.1a vs 1.2a
        assert!((r.relative_losses[1].1[0] - 12.0).abs() < 1e-12);
        assert_eq!(r.relative_losses[1].1[1], 1.0);
        assert!(decile_report(LossKind::Mse, &p, "B", &[(0.0, 0.04)]).is_err());
        assert!(decile_report(LossKind::Mse, &p, "Z", &deciles()).is_err());
        assert!(decile_report(LossKind::Mse, &p, "B", &[(0.5, 0.4)]).is_err());
    }

    #[test]
    fn parse_kinds() {
        for k in LossKind::ALL {
            assert_eq!(k.name().parse::<LossKind>().unwrap(), k);
        }
        assert_eq!("mad".parse::<LossKind>().unwrap(), LossKind::Mae);
        assert!("RMSE".parse::<LossKind>().is_err());
    }

    proptest! {
        #[test]
        fn aggregates_are_permutation_invariant_and_bounded(
            pairs in prop::collection::vec((1e-3f64..10.0, 1e-3f64..10.0), 5..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (a, f): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (a2, f2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            for kind in LossKind::ALL {
                let x = aggregate_values(kind, &loss_values(kind, &a, &f).unwrap());
                if kind != LossKind::Mda {
                    let y = aggregate_values(kind, &loss_values(kind, &a2, &f2).unwrap());
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                }
                prop_assert!(x >= 0.0);
                match kind {
                    LossKind::Smape => prop_assert!(x <= 200.0 + 1e-9),
                    LossKind::Mda => prop_assert!(x <= 100.0),
                    _ => {}
                }
            }
        }

        #[test]
        fn rescaling_preserves_mse_and_qlike_ranking(
            a in prop::collection::vec(0.1f64..5.0, 10..40),
            m1 in 0.5f64..1.5, m2 in 0.5f64..1.5, c in 1e-3f64..1e3,
        ) {
            let f1: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * if i % 2 == 0 { m1 } else { 1.0 / m1 }).collect();
            let f2: Vec<f64> = a.iter().map(|v| v * m2).collect();
            for kind in [LossKind::Mse, LossKind::Qlike] {
                let l = |a: &[f64], f: &[f64]| aggregate_values(kind, &loss_values(kind, a, f).unwrap());
                let before = l(&a, &f1) < l(&a, &f2);
                let sc = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<f64>>();
                let after = l(&sc(&a), &sc(&f1)) < l(&sc(&a), &sc(&f2));
                let gap = (l(&a, &f1) - l(&a, &f2)).abs();
                if gap > 1e-9 * l(&a, &f1).max(l(&a, &f2)) {
                    prop_assert_eq!(before, after);
                }
            }
        }
    }
}
