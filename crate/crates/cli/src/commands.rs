use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use volcast_core::io::{
    find_symbol, format_real, parse_omi_csv, read_canonical, read_forecasts, write_canonical,
    write_forecasts, Table,
};
use volcast_core::losses::{
    aggregate_loss, decile_report, deciles, loss_series, skill_matrix, LossKind, LossSeries,
};
use volcast_core::protocol::{
    align, make_split_plan, run_backtest, AlignedPanel, ForecastSet, ModelKind, ModelSpec,
};
use volcast_core::series::{summary_stats, RvSeries, ZeroPolicy};
use volcast_core::sim::{simulate_market, MarketConfig};
use volcast_core::stats::{
    dm_test, gw_test, inclusion_rates, mcs, BootstrapConfig, GwInstruments, McsResult,
};

use crate::{Command, InstrumentArg, ModelArg, PanelArgs, Usage};

pub(crate) fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { omi, out, floor } => ingest(&omi, &out, floor),
        Command::Summarize {
            data,
            symbol,
            segments,
            transform,
            out,
        } => {
            let all = load_data(&data)?;
            let series = lookup(&all, &symbol)?;
            let t = summary_stats(series, &segments, transform)?;
            let mut table = Table::new([
                "symbol", "segment", "count", "min", "mean", "sd", "median", "max",
            ]);
            for r in &t.rows {
                table.push([
                    t.symbol.clone(),
                    r.label.clone(),
                    r.count.to_string(),
                    format_real(r.min),
                    format_real(r.mean),
                    format_real(r.sd),
                    format_real(r.median),
                    format_real(r.max),
                ])?;
            }
            emit(&table, out.as_deref())
        }
        Command::Backtest {
            data,
            symbol,
            model,
            log,
            segments,
            out,
        } => backtest(&data, symbol.as_deref(), model, log, &segments, &out),
        Command::Evaluate { input, losses, out } => evaluate(&input, &losses, out.as_deref()),
        Command::Skill { input, loss, out } => skill(&input, loss, out.as_deref()),
        Command::Dmtest {
            input,
            loss,
            lags,
            out,
        } => pairwise(
            &input,
            loss,
            out.as_deref(),
            |a, b| {
                let r = dm_test(a, b, lags)?;
                Ok(vec![
                    r.n.to_string(),
                    format_real(r.statistic),
                    format_real(r.p_one_sided),
                    format_real(r.p_two_sided),
                    r.hac_lags.to_string(),
                    r.degenerate.to_string(),
                ])
            },
            &[
                "n",
                "statistic",
                "p_one_sided",
                "p_two_sided",
                "lags",
                "degenerate",
            ],
        ),
        Command::Gwtest {
            input,
            loss,
            instruments,
            out,
        } => {
            let instruments = match instruments {
                InstrumentArg::Constant => GwInstruments::Constant,
                InstrumentArg::Lagged => GwInstruments::LaggedDifferential,
            };
            pairwise(
                &input,
                loss,
                out.as_deref(),
                |a, b| {
                    let r = gw_test(a, b, instruments)?;
                    Ok(vec![
                        r.n.to_string(),
                        format_real(r.statistic),
                        format_real(r.p_value),
                        r.k.to_string(),
                        r.degenerate.to_string(),
                    ])
                },
                &["n", "statistic", "p_value", "instruments", "degenerate"],
            )
        }
        Command::Mcs {
            input,
            loss,
            levels,
            reps,
            block,
            seed,
            statistic,
            out,
            rates_out,
        } => {
            let cfg = BootstrapConfig::new(reps, block, seed)?;
            let panels = load_panels(&input)?;
            let results: Vec<(String, McsResult)> = panels
                .par_iter()
                .map(|p| {
                    let series = all_losses(loss, p)?;
                    let r = mcs(&series, &cfg, levels[0], statistic)
                        .with_context(|| format!("MCS for {}", p.symbol))?;
                    Ok((p.symbol.clone(), r))
                })
                .collect::<Result<_>>()?;
            let mut header = vec![
                "symbol".to_string(),
                "model".into(),
                "mcs_p".into(),
                "elimination".into(),
            ];
            header.extend(levels.iter().map(|l| format!("retained_{l}")));
            let mut table = Table::new(header);
            for (symbol, r) in &results {
                for (id, p) in &r.mcs_p {
                    let step = r
                        .sequence
                        .iter()
                        .position(|(s, _)| s == id)
                        .map_or(0, |k| k + 1);
                    let mut row = vec![
                        symbol.clone(),
                        id.clone(),
                        format_real(*p),
                        step.to_string(),
                    ];
                    row.extend(
                        levels
                            .iter()
                            .map(|&l| r.retained_at(l).contains(id).to_string()),
                    );
                    table.push(row)?;
                }
            }
            emit(&table, out.as_deref())?;
            if let Some(path) = rates_out {
                let only: Vec<McsResult> = results.into_iter().map(|(_, r)| r).collect();
                let mut header = vec!["model".to_string()];
                header.extend(levels.iter().map(|l| format!("rate_{l}")));
                let mut table = Table::new(header);
                for (id, rates) in inclusion_rates(&only, &levels) {
                    let mut row = vec![id];
                    row.extend(rates.into_iter().map(format_real));
                    table.push(row)?;
                }
                table.write_csv(&path)?;
            }
            Ok(())
        }
        Command::Deciles {
            input,
            benchmark,
            loss,
            out,
        } => {
            let mut table = Table::new(["symbol", "model", "lower", "upper", "relative_loss"]);
            for p in load_panels(&input)? {
                let report = decile_report(loss, &p, &benchmark, &deciles())
                    .with_context(|| format!("decile report for {}", p.symbol))?;
                for (id, values) in &report.relative_losses {
                    for ((lo, hi), v) in report.groups.iter().zip(values) {
                        table.push([
                            p.symbol.clone(),
                            id.clone(),
                            format!("{lo:.1}"),
                            format!("{hi:.1}"),
                            format_real(*v),
                        ])?;
                    }
                }
            }
            emit(&table, out.as_deref())
        }
        Command::Simulate {
            symbols,
            days,
            seed,
            out,
        } => {
            let cfg = MarketConfig {
                days,
                ..Default::default()
            };
            let series: Vec<RvSeries> = symbols
                .iter()
                .enumerate()
                .map(|(k, s)| simulate_market(s, &cfg, seed.wrapping_add(k as u64)))
                .collect();
            write_canonical(&series.iter().collect::<Vec<_>>(), &out)?;
            log::info!(
                "wrote {} synthetic series of {days} days to {}",
                series.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => table
            .write_csv(path)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv_to(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn ingest(omi: &Path, out: &Path, floor: Option<f64>) -> Result<()> {
    let policy = match floor {
        None => ZeroPolicy::Drop,
        Some(eps) if eps > 0.0 && eps.is_finite() => ZeroPolicy::Floor(eps),
        Some(eps) => return Err(Usage(format!("--floor must be positive, got {eps}")).into()),
    };
    let imp = parse_omi_csv(omi, policy).with_context(|| format!("reading {}", omi.display()))?;
    if imp.series.is_empty() {
        log::warn!("{} contains no rows", omi.display());
    }
    let verb = if floor.is_some() {
        "floored"
    } else {
        "dropped"
    };
    for (symbol, n) in imp.zero_rows.iter().filter(|(_, n)| **n > 0) {
        log::info!("{symbol}: {n} rows with non-positive RV or BPV {verb}");
    }
    let series: Vec<&RvSeries> = imp.series.values().collect();
    write_canonical(&series, out)?;
    log::info!("wrote {} series to {}", series.len(), out.display());
    Ok(())
}

fn load_data(path: &Path) -> Result<BTreeMap<String, RvSeries>> {
    read_canonical(path).with_context(|| format!("reading {}", path.display()))
}

fn lookup<'a>(all: &'a BTreeMap<String, RvSeries>, symbol: &str) -> Result<&'a RvSeries> {
    find_symbol(all, symbol).map(|(_, s)| s).ok_or_else(|| {
        volcast_core::Error::Domain(format!("symbol {symbol:?} is not in the data file")).into()
    })
}

fn specs(model: ModelArg, log: bool) -> Result<Vec<ModelSpec>> {
    let kind = match model {
        ModelArg::All if log => {
            return Err(Usage("--log cannot be combined with --model all".into()).into())
        }
        ModelArg::All => return Ok(ModelSpec::all()),
        ModelArg::Har => ModelKind::Har,
        ModelArg::Char => ModelKind::Char,
        ModelArg::Arfima => ModelKind::Arfima,
        ModelArg::Rgarch => ModelKind::Rgarch,
    };
    Ok(vec![
        ModelSpec::new(kind, log).map_err(|e| Usage(e.to_string()))?
    ])
}

fn backtest(
    data: &Path,
    symbol: Option<&str>,
    model: ModelArg,
    log: bool,
    segments: &[f64],
    out: &Path,
) -> Result<()> {
    let specs = specs(model, log)?;
    let all = load_data(data)?;
    let series: Vec<&RvSeries> = match symbol {
        Some(s) => vec![lookup(&all, s)?],
        None => all.values().collect(),
    };
    let jobs: Vec<(&RvSeries, &ModelSpec)> = series
        .iter()
        .flat_map(|s| specs.iter().map(move |spec| (*s, spec)))
        .collect();
    let sets: Vec<ForecastSet> = jobs
        .par_iter()
        .map(|(s, spec)| {
            let plan = make_split_plan(s.len(), segments)
                .with_context(|| format!("split plan for {}", s.symbol()))?;
            let r = run_backtest(s, spec, &plan)?;
            if r.floored > 0 {
                log::warn!(
                    "{} on {}: {} forecasts floored",
                    spec,
                    s.symbol(),
                    r.floored
                );
            }
            log::info!(
                "{} on {}: {} forecasts",
                spec,
                s.symbol(),
                r.forecasts.len()
            );
            Ok(r.forecasts)
        })
        .collect::<Result<_>>()?;
    write_forecasts(&sets, out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

/// One aligned panel per forecast symbol, in symbol order.
fn load_panels(input: &PanelArgs) -> Result<Vec<AlignedPanel>> {
    let all = load_data(&input.data)?;
    let mut by_symbol: BTreeMap<String, Vec<ForecastSet>> = BTreeMap::new();
    for path in &input.forecasts {
        let sets = read_forecasts(path).with_context(|| format!("reading {}", path.display()))?;
        for set in sets {
            let key = set.symbol.trim_start_matches('.').to_string();
            by_symbol.entry(key).or_default().push(set);
        }
    }
    if by_symbol.is_empty() {
        return Err(volcast_core::Error::Domain("forecast files contain no rows".into()).into());
    }
    by_symbol
        .iter()
        .map(|(symbol, sets)| {
            let series = lookup(&all, symbol)?;
            align(series, sets, None).with_context(|| format!("aligning forecasts for {symbol}"))
        })
        .collect()
}

fn all_losses(kind: LossKind, panel: &AlignedPanel) -> Result<Vec<LossSeries>> {
    panel
        .model_ids()
        .iter()
        .map(|id| Ok(loss_series(kind, panel, id)?))
        .collect()
}

fn evaluate(input: &PanelArgs, losses: &[LossKind], out: Option<&Path>) -> Result<()> {
    let mut header = vec!["symbol".to_string(), "model".into(), "n".into()];
    header.extend(losses.iter().map(|k| k.name().to_string()));
    let mut table = Table::new(header);
    for p in load_panels(input)? {
        for id in p.model_ids() {
            let mut row = vec![p.symbol.clone(), id.to_string(), p.len().to_string()];
            for &kind in losses {
                row.push(format_real(aggregate_loss(&loss_series(kind, &p, id)?)));
            }
            table.push(row)?;
        }
    }
    emit(&table, out)
}

fn skill(input: &PanelArgs, loss: LossKind, out: Option<&Path>) -> Result<()> {
    let panels = load_panels(input)?;
    let ids: Vec<String> = panels[0]
        .model_ids()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut header = vec!["symbol".to_string(), "model".into()];
    header.extend(ids.iter().cloned());
    let mut table = Table::new(header);
    for p in &panels {
        let m = skill_matrix(loss, p).with_context(|| format!("skill matrix for {}", p.symbol))?;
        if m.model_ids != ids {
            return Err(volcast_core::Error::Domain(format!(
                "{} has models {:?}, expected {:?}",
                p.symbol, m.model_ids, ids
            ))
            .into());
        }
        for (id, row) in m.model_ids.iter().zip(&m.ratios) {
            let mut cells = vec![p.symbol.clone(), id.clone()];
            cells.extend(row.iter().map(|v| format_real(*v)));
            table.push(cells)?;
        }
    }
    emit(&table, out)
}

fn pairwise(
    input: &PanelArgs,
    loss: LossKind,
    out: Option<&Path>,
    test: impl Fn(&LossSeries, &LossSeries) -> volcast_core::Result<Vec<String>>,
    columns: &[&str],
) -> Result<()> {
    let mut header = vec!["symbol".to_string(), "model_a".into(), "model_b".into()];
    header.extend(columns.iter().map(|c| c.to_string()));
    let mut table = Table::new(header);
    for p in load_panels(input)? {
        let series = all_losses(loss, &p)?;
        for (i, a) in series.iter().enumerate() {
            for b in &series[i + 1..] {
                let cells = test(a, b)
                    .with_context(|| format!("{} vs {} on {}", a.model_id, b.model_id, p.symbol))?;
                let mut row = vec![p.symbol.clone(), a.model_id.clone(), b.model_id.clone()];
                row.extend(cells);
                table.push(row)?;
            }
        }
    }
    emit(&table, out)
}
