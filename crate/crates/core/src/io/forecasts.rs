use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{format_real, write_atomic};
use crate::protocol::ForecastSet;
use crate::series::TradingDay;

pub const FORECAST_HEADER: [&str; 4] = ["model", "symbol", "date", "forecast"];

/// Forecast sets in order of first appearance of each (model, symbol) pair.
pub fn read_forecasts_from<R: Read>(reader: R) -> Result<Vec<ForecastSet>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != FORECAST_HEADER {
        return Err(Error::format(
            Some(1),
            format!("header must be {}, got {}", FORECAST_HEADER.join(","), header.join(",")),
        ));
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<(TradingDay, f64)>> = HashMap::new();
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let model = rec[0].trim().to_string();
        let symbol = rec[1].trim().to_string();
        let date: TradingDay = rec[2].parse().map_err(|e| Error::format(Some(line), format!("{e}")))?;
        let value: f64 = rec[3].trim().parse().map_err(|_| {
            Error::format(Some(line), format!("forecast {:?} is not a number", &rec[3]))
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::format(Some(line), format!("forecast {value} is not positive")));
        }
        if !seen.insert((model.clone(), symbol.clone(), date)) {
            return Err(Error::format(
                Some(line),
                format!("duplicate forecast for {model}/{symbol} on {date}"),
            ));
        }
        let key = (model, symbol);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push((date, value));
    }
    order
        .into_iter()
        .map(|key| {
            let entries = groups.remove(&key).unwrap_or_default();
            ForecastSet::new(key.0, key.1, entries)
        })
        .collect()
}

pub fn read_forecasts(path: &Path) -> Result<Vec<ForecastSet>> {
    read_forecasts_from(std::fs::File::open(path)?)
}

pub fn write_forecasts_to<W: Write>(sets: &[ForecastSet], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FORECAST_HEADER)?;
    for s in sets {
        for (date, v) in s.entries() {
            w.write_record([s.model_id.as_str(), s.symbol.as_str(), &date.to_string(), &format_real(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_forecasts(sets: &[ForecastSet], path: &Path) -> Result<()> {
    write_atomic(path, |w| write_forecasts_to(sets, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(d: u32) -> TradingDay {
        TradingDay::from_ymd(2021, 3, d).unwrap()
    }

    #[test]
    fn three_row_round_trip() {
        let set = ForecastSet::new("HAR", ".AEX", vec![(day(1), 1e-4), (day(2), 0.1 + 0.2), (day(3), 1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_forecasts_to(std::slice::from_ref(&set), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,symbol,date,forecast\n"));
        assert_eq!(read_forecasts_from(buf.as_slice()).unwrap(), vec![set]);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "model,symbol,date,forecast\nA,X,2021-03-01,1\nA,X,2021-03-01,2\n";
        assert!(matches!(read_forecasts_from(dup.as_bytes()), Err(Error::Format { line: Some(3), .. })));
        let zero = "model,symbol,date,forecast\nA,X,2021-03-01,0\n";
        assert!(matches!(read_forecasts_from(zero.as_bytes()), Err(Error::Format { line: Some(2), .. })));
        let header = "model,symbol,day,forecast\n";
        assert!(read_forecasts_from(header.as_bytes()).is_err());
    }

    #[test]
    fn groups_by_model_and_symbol_in_file_order() {
        let csv = "model,symbol,date,forecast\nB,X,2021-03-02,1\nA,X,2021-03-01,1\nB,X,2021-03-01,2\nB,Y,2021-03-01,3\n";
        let sets = read_forecasts_from(csv.as_bytes()).unwrap();
        let keys: Vec<_> = sets.iter().map(|s| (s.model_id.as_str(), s.symbol.as_str(), s.len())).collect();
        assert_eq!(keys, vec![("B", "X", 2), ("A", "X", 1), ("B", "Y", 1)]);
    }

    proptest! {
        #[test]
        fn any_positive_values_round_trip(values in prop::collection::vec(1e-300f64..1e300, 1..30)) {
            let entries: Vec<_> = values.iter().enumerate().map(|(i, v)| (day(1).next_weekday_n(i), *v)).collect();
            let set = ForecastSet::new("M", "S", entries).unwrap();
            let mut buf = Vec::new();
            write_forecasts_to(std::slice::from_ref(&set), &mut buf).unwrap();
            prop_assert_eq!(read_forecasts_from(buf.as_slice()).unwrap(), vec![set]);
        }
    }

    trait Step {
        fn next_weekday_n(self, n: usize) -> Self;
    }

    impl Step for TradingDay {
        fn next_weekday_n(self, n: usize) -> Self {
            (0..n).fold(self, |d, _| d.next_weekday())
        }
    }
}
