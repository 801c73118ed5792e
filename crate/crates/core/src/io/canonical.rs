use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{format_real, write_atomic};
use crate::series::{RvObservation, RvSeries, TradingDay};

pub const CANONICAL_HEADER: [&str; 5] = ["symbol", "date", "close", "rv", "bpv"];

fn parse_field(raw: &str, name: &str, line: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::format(Some(line), format!("{name} value {raw:?} is not a number")))
}

/// Series keyed by symbol; rows of one symbol may appear in any order.
pub fn read_canonical_from<R: Read>(reader: R) -> Result<BTreeMap<String, RvSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != CANONICAL_HEADER {
        return Err(Error::format(
            Some(1),
            format!("header must be {}, got {}", CANONICAL_HEADER.join(","), header.join(",")),
        ));
    }
    let mut rows: BTreeMap<String, Vec<(RvObservation, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let date: TradingDay = rec[1]
            .parse()
            .map_err(|e| Error::format(Some(line), format!("{e}")))?;
        let bpv = match rec[4].trim() {
            "" => None,
            s => Some(parse_field(s, "bpv", line)?),
        };
        let obs = RvObservation {
            date,
            close: parse_field(&rec[2], "close", line)?,
            rv: parse_field(&rec[3], "rv", line)?,
            bpv,
        };
        rows.entry(rec[0].trim().to_string()).or_default().push((obs, line));
    }
    rows.into_iter()
        .map(|(symbol, mut obs)| {
            obs.sort_by_key(|(o, _)| o.date);
            if let Some(w) = obs.windows(2).find(|w| w[0].0.date == w[1].0.date) {
                return Err(Error::format(
                    Some(w[1].1.max(w[0].1)),
                    format!("duplicate row for {symbol} on {}", w[0].0.date),
                ));
            }
            let series = RvSeries::new(symbol.clone(), obs.into_iter().map(|(o, _)| o).collect())
                .map_err(|e| Error::format(None, format!("{symbol}: {e}")))?;
            Ok((symbol, series))
        })
        .collect()
}

pub fn read_canonical(path: &Path) -> Result<BTreeMap<String, RvSeries>> {
    read_canonical_from(std::fs::File::open(path)?)
}

pub fn write_canonical_to<W: Write>(series: &[&RvSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_HEADER)?;
    for s in series {
        if s.is_log_space() {
            return Err(Error::domain(format!("{}: canonical files hold linear-space values", s.symbol())));
        }
        for o in s.observations() {
            w.write_record([
                s.symbol().to_string(),
                o.date.to_string(),
                format_real(o.close),
                format_real(o.rv),
                o.bpv.map(format_real).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_canonical(series: &[&RvSeries], path: &Path) -> Result<()> {
    write_atomic(path, |w| write_canonical_to(series, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_market, MarketConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = MarketConfig {
            days: 40,
            ..Default::default()
        };
        let a = simulate_market("AAA", &cfg, 1);
        let mut obs = simulate_market("BBB", &cfg, 2).observations().to_vec();
        obs[3].bpv = None;
        let b = RvSeries::new("BBB", obs).unwrap();
        let mut buf = Vec::new();
        write_canonical_to(&[&a, &b], &mut buf).unwrap();
        let back = read_canonical_from(buf.as_slice()).unwrap();
        assert_eq!(back["AAA"], a);
        assert_eq!(back["BBB"], b);
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let csv = "symbol,date,close,rv,bpv\nX,2020-01-03,10,0.2,\nX,2020-01-02,10,0.1,0.1\n";
        let m = read_canonical_from(csv.as_bytes()).unwrap();
        assert_eq!(m["X"].rv(), vec![0.1, 0.2]);
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        let bad_header = "symbol,date,close,rv\nX,2020-01-02,1,1\n";
        assert!(matches!(read_canonical_from(bad_header.as_bytes()), Err(Error::Format { line: Some(1), .. })));
        let bad_num = "symbol,date,close,rv,bpv\nX,2020-01-02,1,1,\nX,2020-01-03,1,abc,\n";
        assert!(matches!(read_canonical_from(bad_num.as_bytes()), Err(Error::Format { line: Some(3), .. })));
        let dup = "symbol,date,close,rv,bpv\nX,2020-01-02,1,1,\nX,2020-01-02,1,2,\n";
        let err = read_canonical_from(dup.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(3), .. }), "{err}");
        let negative = "symbol,date,close,rv,bpv\nX,2020-01-02,1,-1,\n";
        assert!(read_canonical_from(negative.as_bytes()).is_err());
    }
}
