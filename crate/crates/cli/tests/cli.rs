use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use volcast_core::io::{read_canonical, read_forecasts, write_canonical, write_forecasts, Table};
use volcast_core::protocol::ForecastSet;
use volcast_core::series::{RvObservation, RvSeries, TradingDay};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn volcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volcast"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = volcast(args);
    assert!(
        out.status.success(),
        "volcast {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(args: &[&str]) -> i32 {
    volcast(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Compares a produced file with its committed copy; `VOLCAST_BLESS=1` rewrites the copy instead.
fn check_golden(produced: &Path, name: &str) {
    let golden = fixtures().join(name);
    let got = std::fs::read(produced).unwrap();
    if std::env::var_os("VOLCAST_BLESS").is_some() {
        std::fs::write(&golden, &got).unwrap();
        return;
    }
    let want = std::fs::read(&golden).unwrap_or_else(|e| panic!("{}: {e}", golden.display()));
    assert!(got == want, "{name} differs from the committed golden file");
}

#[test]
fn fixture_pipeline_matches_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    ok(&[
        "simulate",
        "--symbols",
        "ALPHA,BETA",
        "--days",
        "300",
        "--seed",
        "11",
        "--out",
        s(&p("market.csv")),
    ]);
    check_golden(&p("market.csv"), "market.csv");
    let data = fixtures().join("market.csv");
    ok(&[
        "backtest",
        "--data",
        s(&data),
        "--model",
        "har",
        "--out",
        s(&p("har.csv")),
    ]);
    check_golden(&p("har.csv"), "har.csv");
    ok(&[
        "--jobs",
        "2",
        "backtest",
        "--data",
        s(&data),
        "--model",
        "char",
        "--log",
        "--out",
        s(&p("char_log.csv")),
    ]);
    check_golden(&p("char_log.csv"), "char_log.csv");

    let har = fixtures().join("har.csv");
    let char_log = fixtures().join("char_log.csv");
    let panel = ["--data", s(&data), "--forecasts", s(&har), s(&char_log)];
    let runs: [(&str, Vec<&str>); 6] = [
        ("evaluate.csv", vec!["evaluate"]),
        ("skill.csv", vec!["skill", "--loss", "qlike"]),
        ("dmtest.csv", vec!["dmtest", "--loss", "mse"]),
        (
            "gwtest.csv",
            vec!["gwtest", "--loss", "mse", "--instruments", "lagged"],
        ),
        (
            "mcs.csv",
            vec![
                "mcs", "--loss", "qlike", "--seed", "42", "--reps", "500", "--level", "0.9",
                "--level", "0.75",
            ],
        ),
        (
            "deciles.csv",
            vec!["deciles", "--loss", "mse", "--benchmark", "HAR"],
        ),
    ];
    for (name, cmd) in runs {
        let out = p(name);
        let mut args = cmd.clone();
        args.extend(panel);
        args.extend(["--out", s(&out)]);
        ok(&args);
        check_golden(&out, name);
        // every report parses back as a rectangular table
        let t = Table::read_csv(&out).unwrap();
        assert!(!t.rows.is_empty(), "{name} is empty");
    }
}

#[test]
fn mcs_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures().join("market.csv");
    let har = fixtures().join("har.csv");
    let char_log = fixtures().join("char_log.csv");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("mcs{k}.csv"));
        let rates = dir.path().join(format!("rates{k}.csv"));
        ok(&[
            "mcs",
            "--data",
            s(&data),
            "--forecasts",
            s(&har),
            s(&char_log),
            "--loss",
            "mse",
            "--seed",
            "7",
            "--reps",
            "300",
            "--block",
            "5",
            "--out",
            s(&out),
            "--rates-out",
            s(&rates),
        ]);
        outputs.push((std::fs::read(out).unwrap(), std::fs::read(rates).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn evaluate_with_forecasts_equal_to_actuals_gives_zero_mse() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures().join("market.csv");
    let all = read_canonical(&data).unwrap();
    let sets: Vec<ForecastSet> = all
        .values()
        .map(|series| {
            let entries = series.observations()[100..].iter().map(|o| (o.date, o.rv));
            ForecastSet::new("ORACLE", series.symbol(), entries).unwrap()
        })
        .collect();
    let fc = dir.path().join("oracle.csv");
    write_forecasts(&sets, &fc).unwrap();
    assert_eq!(read_forecasts(&fc).unwrap(), sets);

    let out = dir.path().join("eval.csv");
    ok(&[
        "evaluate",
        "--data",
        s(&data),
        "--forecasts",
        s(&fc),
        "--losses",
        "mse,mda,qlike",
        "--out",
        s(&out),
    ]);
    let t = Table::read_csv(&out).unwrap();
    assert_eq!(t.header, ["symbol", "model", "n", "MSE", "MDA", "QLIKE"]);
    assert_eq!(t.rows.len(), 2);
    for row in &t.rows {
        assert_eq!(row[2], "200");
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[4].parse::<f64>().unwrap(), 100.0);
        assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn summarize_writes_to_stdout_without_out() {
    let data = fixtures().join("market.csv");
    let out = volcast(&[
        "summarize",
        "--data",
        s(&data),
        "--symbol",
        "BETA",
        "--transform",
        "variance",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "symbol,segment,count,min,mean,sd,median,max");
    assert!(lines[1].starts_with("BETA,Total,300,"));
    assert_eq!(lines.len(), 6);
}

fn constant_series(dir: &Path) -> PathBuf {
    let mut date = TradingDay::from_ymd(2001, 1, 2).unwrap();
    let obs = (0..200)
        .map(|_| {
            let o = RvObservation {
                date,
                close: 100.0,
                rv: 1e-4,
                bpv: Some(1e-4),
            };
            date = date.next_weekday();
            o
        })
        .collect();
    let series = RvSeries::new("FLAT", obs).unwrap();
    let path = dir.join("flat.csv");
    write_canonical(&[&series], &path).unwrap();
    path
}

#[test]
fn exit_codes_follow_the_documented_classes() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures().join("market.csv");
    let out = dir.path().join("out.csv");
    let har = fixtures().join("har.csv");

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(
        code(&[
            "backtest",
            "--data",
            s(&data),
            "--model",
            "lasso",
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(
        code(&[
            "backtest",
            "--data",
            s(&data),
            "--model",
            "rgarch",
            "--log",
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(
        code(&[
            "backtest",
            "--data",
            s(&data),
            "--model",
            "all",
            "--log",
            "--out",
            s(&out)
        ]),
        1
    );
    // the seed is mandatory for reproducibility
    assert_eq!(
        code(&[
            "mcs",
            "--data",
            s(&data),
            "--forecasts",
            s(&har),
            "--loss",
            "mse"
        ]),
        1
    );
    assert_eq!(
        code(&[
            "evaluate",
            "--data",
            s(&data),
            "--forecasts",
            s(&har),
            "--losses",
            "rmse"
        ]),
        1
    );

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&[
            "backtest",
            "--data",
            s(&missing),
            "--model",
            "har",
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        code(&["summarize", "--data", s(&data), "--symbol", "GAMMA"]),
        2
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "model,symbol,date,forecast\nHAR,ALPHA,2001-02-01,0\n").unwrap();
    assert_eq!(
        code(&["evaluate", "--data", s(&data), "--forecasts", s(&bad)]),
        2
    );
    let wrong_header = dir.path().join("wrong.csv");
    std::fs::write(&wrong_header, "model,ticker,date,forecast\n").unwrap();
    assert_eq!(
        code(&[
            "evaluate",
            "--data",
            s(&data),
            "--forecasts",
            s(&wrong_header)
        ]),
        2
    );

    let flat = constant_series(dir.path());
    assert_eq!(
        code(&[
            "backtest",
            "--data",
            s(&flat),
            "--model",
            "har",
            "--out",
            s(&out)
        ]),
        3
    );
    assert!(!out.exists(), "failed runs must not leave an output file");
}

#[test]
fn backtest_all_models_covers_seven_variants() {
    let dir = tempfile::tempdir().unwrap();
    // ARFIMA needs 200 observations in the first fit window
    let data = dir.path().join("long.csv");
    ok(&[
        "simulate",
        "--symbols",
        "ALPHA",
        "--days",
        "500",
        "--seed",
        "3",
        "--out",
        s(&data),
    ]);
    let out = dir.path().join("all.csv");
    ok(&[
        "backtest",
        "--data",
        s(&data),
        "--symbol",
        "ALPHA",
        "--model",
        "all",
        "--out",
        s(&out),
    ]);
    let sets = read_forecasts(&out).unwrap();
    let ids: Vec<&str> = sets.iter().map(|s| s.model_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "HAR",
            "HAR_log",
            "CHAR",
            "CHAR_log",
            "ARFIMA",
            "ARFIMA_log",
            "RGARCH"
        ]
    );
    assert!(sets.iter().all(|s| s.symbol == "ALPHA" && s.len() == 250));
}
