use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{RvObservation, RvSeries, TradingDay, ZeroPolicy};

const DATE_ALIASES: [&str; 5] = ["", "Unnamed: 0", "date", "Date", "datetime"];
const SYMBOL_ALIASES: [&str; 2] = ["Symbol", "symbol"];
const RV: &str = "rv5_ss";
const BV: &str = "bv";
const CLOSE: &str = "close_price";
const OPEN: &str = "open_price";

/// Parsed series with the number of rows removed or floored by the zero policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OmiImport {
    pub series: BTreeMap<String, RvSeries>,
    pub zero_rows: BTreeMap<String, usize>,
}

/// Looks a symbol up with or without the library's leading dot.
pub fn find_symbol<'a, T>(map: &'a BTreeMap<String, T>, symbol: &str) -> Option<(&'a str, &'a T)> {
    let bare = symbol.strip_prefix('.').unwrap_or(symbol);
    [bare.to_string(), format!(".{bare}")]
        .iter()
        .find_map(|k| map.get_key_value(k.as_str()))
        .map(|(k, v)| (k.as_str(), v))
}

fn column(header: &csv::StringRecord, names: &[&str], label: &str) -> Result<usize> {
    names
        .iter()
        .find_map(|n| header.iter().position(|h| h.trim() == *n))
        .ok_or_else(|| Error::format(Some(1), format!("missing column {label}")))
}

pub fn parse_omi_from<R: Read>(reader: R, policy: ZeroPolicy) -> Result<OmiImport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        log::warn!("realized library file is empty");
        return Ok(OmiImport {
            series: BTreeMap::new(),
            zero_rows: BTreeMap::new(),
        });
    }
    let date_col = column(&header, &DATE_ALIASES, "date")?;
    let sym_col = column(&header, &SYMBOL_ALIASES, "Symbol")?;
    let rv_col = column(&header, &[RV], RV)?;
    let bv_col = column(&header, &[BV], BV)?;
    let close_col = column(&header, &[CLOSE], CLOSE)?;
    column(&header, &[OPEN], OPEN)?;

    let mut rows: BTreeMap<String, Vec<(RvObservation, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |col: usize, name: &str| -> Result<f64> {
            rec[col]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::format(Some(line), format!("{name} value {:?} is not a number", &rec[col])))
        };
        let date: TradingDay = rec[date_col]
            .parse()
            .map_err(|e| Error::format(Some(line), format!("{e}")))?;
        let bpv = match rec[bv_col].trim() {
            "" => None,
            _ => Some(num(bv_col, BV)?),
        };
        let obs = RvObservation {
            date,
            close: num(close_col, CLOSE)?,
            rv: num(rv_col, RV)?,
            bpv,
        };
        rows.entry(rec[sym_col].trim().to_string()).or_default().push((obs, line));
    }

    let mut series = BTreeMap::new();
    let mut zero_rows = BTreeMap::new();
    for (symbol, mut obs) in rows {
        obs.sort_by_key(|(o, _)| o.date);
        if let Some(w) = obs.windows(2).find(|w| w[0].0.date == w[1].0.date) {
            return Err(Error::format(
                Some(w[0].1.max(w[1].1)),
                format!("duplicate row for {symbol} on {}", w[0].0.date),
            ));
        }
        let (kept, touched) = policy.apply(obs.into_iter().map(|(o, _)| o).collect());
        if touched > 0 {
            log::warn!("{symbol}: {touched} rows with non-positive rv or bpv ({policy:?})");
        }
        if kept.is_empty() {
            log::warn!("{symbol}: no usable rows");
            continue;
        }
        let s = RvSeries::new(symbol.clone(), kept).map_err(|e| Error::format(None, format!("{symbol}: {e}")))?;
        zero_rows.insert(symbol.clone(), touched);
        series.insert(symbol, s);
    }
    Ok(OmiImport { series, zero_rows })
}

/// Reads the realized library CSV export into one series per symbol.
pub fn parse_omi_csv(path: &Path, policy: ZeroPolicy) -> Result<OmiImport> {
    parse_omi_from(std::fs::File::open(path)?, policy)
}
