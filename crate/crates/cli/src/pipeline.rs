//! Orchestration: ingest, split, train, detect, backtest, and write the
//! artifact tree. One seed governs every job; identical config and seed
//! reproduce the tree byte for byte.
//!
//! Layout under the output directory:
//!
//! ```text
//! config.json                    resolved configuration echo
//! comparison.txt / .json         combined table, also printed to stdout
//! <ticker>/price.csv|.svg        input series
//! <ticker>/buy_and_hold/         report.json
//! <ticker>/strategy1/            report, ledger, predictions, overlay,
//!                                density, histogram, losses, model
//! <ticker>/strategy2/            report, ledger, anomalies, overlay,
//!                                losses, model
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use breakout_core::anomaly::{label_anomalies, AnomalyError, BreakoutDetector};
use breakout_core::backtest::{
    run_buy_and_hold, run_strategy1, run_strategy2, BacktestError, Strategy,
};
use breakout_core::checkpoint;
use breakout_core::market_data::{
    parse_csv, split_train_test, MarketDataError, PriceSeries, SplitSeries,
};
use breakout_core::neural::{TrainConfig, TrainError, TrainReport};
use breakout_core::predictor::{PredictorError, PricePredictor};
use breakout_core::report::{
    gaussian_kde, histogram, render_comparison_table, write_anomaly_csv, write_anomaly_svg,
    write_density_csv, write_histogram_csv, write_ledger_csv, write_prediction_csv,
    write_prediction_svg, write_price_svg, ReportError, ReportRow,
};
use thiserror::Error;

use crate::config::RunConfig;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error("{0}")]
    Artifact(String),
    #[error(transparent)]
    Training(#[from] TrainError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Data(_) | RunError::Artifact(_) => EXIT_DATA,
            RunError::Training(_) => EXIT_TRAINING,
        }
    }
}

impl From<ReportError> for RunError {
    fn from(e: ReportError) -> Self {
        RunError::Artifact(e.to_string())
    }
}

impl From<checkpoint::CheckpointError> for RunError {
    fn from(e: checkpoint::CheckpointError) -> Self {
        RunError::Artifact(e.to_string())
    }
}

impl From<PredictorError> for RunError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::Train(t) => RunError::Training(t),
            other => RunError::Artifact(other.to_string()),
        }
    }
}

impl From<AnomalyError> for RunError {
    fn from(e: AnomalyError) -> Self {
        match e {
            AnomalyError::Train(t) => RunError::Training(t),
            other => RunError::Artifact(other.to_string()),
        }
    }
}

impl From<BacktestError> for RunError {
    fn from(e: BacktestError) -> Self {
        RunError::Artifact(e.to_string())
    }
}

fn create_dir(path: &Path) -> Result<(), RunError> {
    fs::create_dir_all(path)
        .map_err(|e| RunError::Artifact(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Artifact(format!("cannot encode {}: {e}", path.display())))?;
    fs::write(path, json)
        .map_err(|e| RunError::Artifact(format!("cannot write {}: {e}", path.display())))
}

fn write_losses_csv(report: &TrainReport, path: &Path) -> Result<(), RunError> {
    let mut out = String::from("epoch,loss\n");
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, loss);
    }
    fs::write(path, out)
        .map_err(|e| RunError::Artifact(format!("cannot write {}: {e}", path.display())))
}

/// Stable per-job seed: FNV-1a over ticker and strategy, mixed with the
/// run seed, so adding tickers or reordering jobs never shifts streams.
fn job_seed(base: u64, ticker: &str, strategy: Strategy) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in ticker.bytes().chain([strategy.id()]) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ base
}

fn train_config(cfg: &RunConfig, lookback: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lookback,
        dropout: cfg.dropout,
        seed,
        ..TrainConfig::default()
    }
}

fn dir_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::BuyAndHold => "buy_and_hold",
        Strategy::Prediction => "strategy1",
        Strategy::Breakout => "strategy2",
    }
}

fn run_job(
    cfg: &RunConfig,
    strategy: Strategy,
    series: &PriceSeries,
    split: &SplitSeries,
    job_dir: &Path,
) -> Result<ReportRow, RunError> {
    let ticker = series.ticker().to_owned();
    let seed = job_seed(cfg.seed, &ticker, strategy);
    let report = match strategy {
        Strategy::BuyAndHold => run_buy_and_hold(series)?,
        Strategy::Prediction => {
            let tc = train_config(cfg, cfg.lookback, seed);
            let started = Instant::now();
            let (model, train_report) = PricePredictor::fit(split, &tc)?;
            eprintln!(
                "[{ticker}] strategy 1: trained {} epochs in {:.1}s, final mse {:.3e}",
                tc.epochs,
                started.elapsed().as_secs_f64(),
                train_report.epoch_losses.last().unwrap()
            );
            let predictions = model.predict_test(split)?;
            let (ledger, report) = run_strategy1(&split.test, &predictions)?;

            checkpoint::save(job_dir.join("model.json"), &model)?;
            write_losses_csv(&train_report, &job_dir.join("losses.csv"))?;
            write_prediction_csv(&predictions, &job_dir.join("predictions.csv"))?;
            write_prediction_svg(&ticker, &predictions, &job_dir.join("overlay.svg"))?;
            write_ledger_csv(&ledger, &job_dir.join("ledger.csv"))?;
            let errors = predictions.squared_errors();
            match gaussian_kde(&errors, 512) {
                Ok(kde) => write_density_csv(&kde, &job_dir.join("squared_error_density.csv"))?,
                Err(e) => eprintln!("[{ticker}] strategy 1: skipping density: {e}"),
            }
            match histogram(&errors, 50) {
                Ok(h) => write_histogram_csv(&h, &job_dir.join("squared_error_histogram.csv"))?,
                Err(e) => eprintln!("[{ticker}] strategy 1: skipping histogram: {e}"),
            }
            report
        }
        Strategy::Breakout => {
            let tc = train_config(cfg, cfg.ae_lookback, seed);
            let started = Instant::now();
            let (model, train_report) = BreakoutDetector::fit(split, &tc)?;
            eprintln!(
                "[{ticker}] strategy 2: trained {} epochs in {:.1}s, final mae {:.3e}",
                tc.epochs,
                started.elapsed().as_secs_f64(),
                train_report.epoch_losses.last().unwrap()
            );
            let errors = model.reconstruction_errors(&split.test)?;
            let labels = label_anomalies(&errors, cfg.threshold);
            let (ledger, report) = run_strategy2(&split.test, &labels, cfg.hold_days)?;

            checkpoint::save(job_dir.join("model.json"), &model)?;
            write_losses_csv(&train_report, &job_dir.join("losses.csv"))?;
            write_anomaly_csv(&split.test, &labels, &job_dir.join("anomalies.csv"))?;
            write_anomaly_svg(&ticker, &split.test, &labels, &job_dir.join("overlay.svg"))?;
            write_ledger_csv(&ledger, &job_dir.join("ledger.csv"))?;
            report
        }
    };
    let row = ReportRow {
        ticker,
        strategy,
        report,
    };
    write_json(&job_dir.join("report.json"), &row)?;
    Ok(row)
}

/// Runs the full pipeline and returns the rendered comparison table.
pub fn run(cfg: &RunConfig) -> Result<String, RunError> {
    create_dir(&cfg.out)?;
    let mut rows = Vec::new();
    for input in &cfg.inputs {
        let series = parse_csv(&input.path, &input.ticker)?;
        let ticker_dir = cfg.out.join(&input.ticker);
        create_dir(&ticker_dir)?;

        let mut price_csv = Vec::new();
        series
            .write_csv(&mut price_csv)
            .map_err(|e| RunError::Artifact(format!("cannot encode price csv: {e}")))?;
        fs::write(ticker_dir.join("price.csv"), price_csv)
            .map_err(|e| RunError::Artifact(format!("cannot write price.csv: {e}")))?;
        write_price_svg(&series, &ticker_dir.join("price.svg"))?;

        let split = split_train_test(&series, cfg.split_ratio)?;
        for &id in &cfg.strategies {
            let strategy = Strategy::from_id(id)
                .ok_or_else(|| RunError::Config(format!("unknown strategy {id}")))?;
            let job_dir = ticker_dir.join(dir_name(strategy));
            create_dir(&job_dir)?;
            match run_job(cfg, strategy, &series, &split, &job_dir) {
                Ok(row) => rows.push(row),
                Err(e) => {
                    // Do not leave half-written artifacts behind.
                    let _ = fs::remove_dir_all(&job_dir);
                    return Err(e);
                }
            }
        }
    }

    let table = render_comparison_table(&rows);
    fs::write(cfg.out.join("comparison.txt"), &table)
        .map_err(|e| RunError::Artifact(format!("cannot write comparison.txt: {e}")))?;
    write_json(&cfg.out.join("comparison.json"), &rows)?;
    write_json(&cfg.out.join("config.json"), cfg)?;
    Ok(table)
}
