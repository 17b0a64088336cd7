//! Backtesting toolkit for LSTM-based trading strategies on daily
//! adjusted-close price series: a recurrent one-step price predictor,
//! an autoencoder breakout detector, and a buy-and-hold benchmark,
//! with a deterministic single-share long-only simulator and reporting.

pub mod anomaly;
pub mod backtest;
pub mod checkpoint;
pub mod market_data;
pub mod money;
pub mod neural;
pub mod predictor;
pub mod preprocess;
pub mod report;
