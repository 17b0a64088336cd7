//! Strategy-2 model: an LSTM autoencoder trained to reconstruct normal
//! windows of the training split. Windows the trained model cannot
//! reconstruct — reconstruction MAE at or above the threshold — mark
//! consolidation breakouts.
//!
//! The training data is taken as anomaly-free as published; no filtering
//! is performed. A window's error is dated by its last bar so a breakout
//! is flagged on the day it completes, never ahead of it.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{PriceSeries, SplitSeries};
use crate::neural::{train, AutoencoderNet, Matrix, Targets, TrainConfig, TrainError, TrainReport};
use crate::preprocess::{make_windows, MinMaxScaler, PreprocessError};

/// Default decision threshold on reconstruction MAE.
pub const DEFAULT_THRESHOLD: f64 = 0.55;

/// Autoencoder widths; the published pipeline fixes lookback 30 but no
/// dimensions, so these are overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub hidden: usize,
    pub latent: usize,
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        AutoencoderSpec {
            hidden: 32,
            latent: 16,
        }
    }
}

/// One scored day: reconstruction error of the window ending on `date`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyLabel {
    pub date: NaiveDate,
    pub reconstruction_mae: f64,
    pub is_anomaly: bool,
}

#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("train split of {len} bars is too short for lookback {lookback}")]
    TrainTooShort { len: usize, lookback: usize },
    #[error("series of {len} bars is too short for lookback {lookback}")]
    SeriesTooShort { len: usize, lookback: usize },
    #[error("constant training series: {0}")]
    Degenerate(#[from] PreprocessError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Trained breakout detector: autoencoder, train-fitted scaler, and the
/// normalized training tail used as context for the first test windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakoutDetector {
    pub net: AutoencoderNet,
    pub scaler: MinMaxScaler,
    pub lookback: usize,
    pub train_tail: Vec<f64>,
    pub config: TrainConfig,
}

impl BreakoutDetector {
    /// Trains the autoencoder to minimize reconstruction MAE over the
    /// training windows.
    pub fn fit(
        split: &SplitSeries,
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport), AnomalyError> {
        Self::fit_with_spec(split, cfg, &AutoencoderSpec::default())
    }

    pub fn fit_with_spec(
        split: &SplitSeries,
        cfg: &TrainConfig,
        spec: &AutoencoderSpec,
    ) -> Result<(Self, TrainReport), AnomalyError> {
        let lookback = cfg.lookback;
        if split.train.len() <= lookback {
            return Err(AnomalyError::TrainTooShort {
                len: split.train.len(),
                lookback,
            });
        }
        let scaler = MinMaxScaler::fit(&split.train);
        if scaler.is_degenerate() {
            return Err(PreprocessError::DegenerateScaler(scaler.min()).into());
        }
        let normalized = scaler.transform_series(&split.train);
        let dataset = make_windows(&normalized, lookback)?;

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut net = AutoencoderNet::init(lookback, spec.hidden, spec.latent, &mut rng);
        let report = train(&mut net, &dataset.inputs, &Targets::Reconstruction, cfg)?;

        let train_tail = normalized[normalized.len() - lookback..].to_vec();
        Ok((
            BreakoutDetector {
                net,
                scaler,
                lookback,
                train_tail,
                config: *cfg,
            },
            report,
        ))
    }

    /// Reconstruction MAE for the window ending at each bar of `series`,
    /// in normalized space. The stored training tail provides context so
    /// every bar of the series gets a score.
    pub fn reconstruction_errors(
        &self,
        series: &PriceSeries,
    ) -> Result<Vec<(NaiveDate, f64)>, AnomalyError> {
        if series.len() <= self.lookback {
            return Err(AnomalyError::SeriesTooShort {
                len: series.len(),
                lookback: self.lookback,
            });
        }
        let mut context = self.train_tail.clone();
        context.extend(self.scaler.transform_series(series));
        let n = series.len();
        let mut windows = Matrix::zeros(n, self.lookback);
        for i in 0..n {
            // Window ending at series bar i: context[i+1 .. i+1+lookback).
            windows
                .row_mut(i)
                .copy_from_slice(&context[i + 1..i + 1 + self.lookback]);
        }
        let maes = self.net.reconstruction_mae_batch(&windows);
        Ok(series.dates().zip(maes).collect())
    }
}

/// Applies the threshold: MAE of `threshold` or more marks an anomaly.
/// Pure mapping; every input reappears in the output.
pub fn label_anomalies(errors: &[(NaiveDate, f64)], threshold: f64) -> Vec<AnomalyLabel> {
    errors
        .iter()
        .map(|&(date, reconstruction_mae)| AnomalyLabel {
            date,
            reconstruction_mae,
            is_anomaly: reconstruction_mae >= threshold,
        })
        .collect()
}
