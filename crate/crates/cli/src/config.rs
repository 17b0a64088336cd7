//! Flag and environment parsing. Every flag can also come from a
//! `BREAKOUT_`-prefixed environment variable; flags win over the
//! environment, which wins over the published defaults.

use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "breakout",
    version,
    about = "Backtest LSTM trading strategies on daily adjusted-close CSVs"
)]
pub struct Cli {
    /// Input CSV and ticker as <path>=<ticker>; repeatable.
    #[arg(
        long = "input",
        value_name = "PATH=TICKER",
        required = true,
        env = "BREAKOUT_INPUT",
        value_delimiter = ','
    )]
    pub inputs: Vec<String>,

    /// Strategies to run: any subset of 0 (buy & hold), 1 (prediction), 2 (breakout).
    #[arg(long, default_value = "0,1,2", env = "BREAKOUT_STRATEGIES")]
    pub strategies: String,

    /// Chronological train fraction.
    #[arg(
        long = "split-ratio",
        default_value_t = 0.8,
        env = "BREAKOUT_SPLIT_RATIO"
    )]
    pub split_ratio: f64,

    /// Lookback window for the price predictor, in trading days.
    #[arg(long, default_value_t = 60, env = "BREAKOUT_LOOKBACK")]
    pub lookback: usize,

    /// Lookback window for the autoencoder, in trading days.
    #[arg(
        long = "ae-lookback",
        default_value_t = 30,
        env = "BREAKOUT_AE_LOOKBACK"
    )]
    pub ae_lookback: usize,

    /// Dropout rate between LSTM layers.
    #[arg(long, default_value_t = 0.2, env = "BREAKOUT_DROPOUT")]
    pub dropout: f64,

    #[arg(long, default_value_t = 100, env = "BREAKOUT_EPOCHS")]
    pub epochs: usize,

    #[arg(long = "batch-size", default_value_t = 32, env = "BREAKOUT_BATCH_SIZE")]
    pub batch_size: usize,

    /// Reconstruction-MAE threshold; that value or more marks a breakout.
    #[arg(long, default_value_t = 0.55, env = "BREAKOUT_THRESHOLD")]
    pub threshold: f64,

    /// Trading days to hold a strategy-2 position.
    #[arg(long = "hold-days", default_value_t = 3, env = "BREAKOUT_HOLD_DAYS")]
    pub hold_days: usize,

    /// Seed for every source of randomness: init, shuffling, dropout.
    #[arg(long, default_value_t = 42, env = "BREAKOUT_SEED")]
    pub seed: u64,

    /// Output directory for all artifacts.
    #[arg(long, default_value = "out", env = "BREAKOUT_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub ticker: String,
}

/// Validated run configuration; echoed into the output directory so any
/// artifact can be regenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    pub strategies: Vec<u8>,
    pub split_ratio: f64,
    pub lookback: usize,
    pub ae_lookback: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub threshold: f64,
    pub hold_days: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// Range checks with the legal range in every rejection message.
pub fn validate(cli: Cli) -> Result<RunConfig, String> {
    let mut inputs = Vec::with_capacity(cli.inputs.len());
    for raw in &cli.inputs {
        let (path, ticker) = raw
            .rsplit_once('=')
            .ok_or_else(|| format!("input '{raw}' must be <path>=<ticker>"))?;
        if path.is_empty() || ticker.is_empty() {
            return Err(format!("input '{raw}' must be <path>=<ticker>"));
        }
        if inputs.iter().any(|i: &InputSpec| i.ticker == ticker) {
            return Err(format!("duplicate ticker '{ticker}'"));
        }
        inputs.push(InputSpec {
            path: PathBuf::from(path),
            ticker: ticker.to_owned(),
        });
    }

    let mut strategies = Vec::new();
    for part in cli.strategies.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let id: u8 = part
            .parse()
            .map_err(|_| format!("strategy '{part}' is not one of 0, 1, 2"))?;
        if id > 2 {
            return Err(format!("strategy '{part}' is not one of 0, 1, 2"));
        }
        if !strategies.contains(&id) {
            strategies.push(id);
        }
    }
    strategies.sort_unstable();
    if strategies.is_empty() {
        return Err("no strategies selected; pick a subset of 0,1,2".to_owned());
    }

    if !(cli.split_ratio > 0.0 && cli.split_ratio < 1.0) {
        return Err(format!("split ratio {} outside (0, 1)", cli.split_ratio));
    }
    if !(cli.threshold > 0.0 && cli.threshold <= 1.0) {
        return Err(format!("threshold {} outside (0, 1]", cli.threshold));
    }
    if !(0.0..1.0).contains(&cli.dropout) {
        return Err(format!("dropout {} outside [0, 1)", cli.dropout));
    }
    if cli.epochs == 0 {
        return Err("epochs must be at least 1".to_owned());
    }
    if cli.batch_size == 0 {
        return Err("batch size must be at least 1".to_owned());
    }
    if cli.lookback == 0 || cli.ae_lookback == 0 {
        return Err("lookback must be at least 1".to_owned());
    }
    if cli.hold_days == 0 {
        return Err("hold days must be at least 1".to_owned());
    }

    Ok(RunConfig {
        inputs,
        strategies,
        split_ratio: cli.split_ratio,
        lookback: cli.lookback,
        ae_lookback: cli.ae_lookback,
        dropout: cli.dropout,
        epochs: cli.epochs,
        batch_size: cli.batch_size,
        threshold: cli.threshold,
        hold_days: cli.hold_days,
        seed: cli.seed,
        out: cli.out,
    })
}
