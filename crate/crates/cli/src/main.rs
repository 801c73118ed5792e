//! `volcast` command-line front end.
//!
//! Exit status: 0 success, 1 usage error, 2 data or format error, 3 estimation failure.
//! Diagnostics go to standard error; set `RUST_LOG` to change their verbosity.

mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use volcast_core::losses::LossKind;
use volcast_core::series::Transform;
use volcast_core::stats::McsStatistic;

#[derive(Parser, Debug)]
#[command(
    name = "volcast",
    version,
    about = "Realized-volatility forecasting and forecast evaluation"
)]
struct Cli {
    /// Worker threads for per-symbol work (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert an Oxford-Man realized library export to the canonical CSV.
    Ingest {
        #[arg(long)]
        omi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace non-positive RV/BPV by this value instead of dropping the row.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Descriptive statistics over the whole sample and each segment.
    Summarize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        symbol: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9,1.0")]
        segments: Vec<f64>,
        #[arg(long, default_value = "volatility")]
        transform: Transform,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expanding-window re-estimation and one-day-ahead forecasts.
    Backtest {
        #[arg(long)]
        data: PathBuf,
        /// Restrict to one symbol; every symbol in the file otherwise.
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Estimate on log RV and map forecasts back with exp.
        #[arg(long)]
        log: bool,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9,1.0")]
        segments: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average losses per symbol and model.
    Evaluate {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "mse,mae,mape,mda,qlike,smape"
        )]
        losses: Vec<LossKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise ratios of aggregate losses.
    Skill {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(long)]
        loss: LossKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diebold–Mariano tests for every model pair.
    Dmtest {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(long)]
        loss: LossKind,
        /// Newey–West lags; automatic when omitted.
        #[arg(long)]
        lags: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Giacomini–White tests for every model pair.
    Gwtest {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(long)]
        loss: LossKind,
        #[arg(long, value_enum, default_value = "constant")]
        instruments: InstrumentArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model Confidence Set per symbol.
    Mcs {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(long)]
        loss: LossKind,
        /// Confidence level; repeat for several superior-set columns.
        #[arg(long = "level", default_value = "0.95")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        /// Expected block length of the stationary bootstrap.
        #[arg(long, default_value_t = 12.0)]
        block: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "range")]
        statistic: McsStatistic,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Share of symbols whose superior set contains each model.
        #[arg(long)]
        rates_out: Option<PathBuf>,
    },
    /// Losses relative to a benchmark within deciles of the realized measure.
    Deciles {
        #[command(flatten)]
        input: PanelArgs,
        #[arg(long)]
        benchmark: String,
        #[arg(long)]
        loss: LossKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic canonical CSV for testing.
    Simulate {
        #[arg(long, value_delimiter = ',', default_value = "SYN")]
        symbols: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        days: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PanelArgs {
    /// Canonical CSV with the realized measures.
    #[arg(long)]
    data: PathBuf,
    /// Forecast files; sets are grouped by symbol.
    #[arg(long, num_args = 1.., required = true)]
    forecasts: Vec<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelArg {
    Har,
    Char,
    Arfima,
    Rgarch,
    /// The seven benchmark variants.
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum InstrumentArg {
    Constant,
    Lagged,
}

/// A well-formed command line that asks for something inconsistent.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<volcast_core::Error>() {
            return if e.is_estimation_failure() { 3 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
