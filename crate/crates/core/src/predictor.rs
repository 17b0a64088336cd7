//! Strategy-1 model: a stacked LSTM trained on the training split that
//! emits one-step-ahead predicted prices, in dollars, over the test split.
//!
//! Test windows are built from the last `lookback` training bars joined
//! with the test series, so every test bar gets a prediction and the
//! trade simulation spans the whole test period.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::SplitSeries;
use crate::money::Dollars;
use crate::neural::{train, Matrix, PredictorNet, Targets, TrainConfig, TrainError, TrainReport};
use crate::preprocess::{make_windows, MinMaxScaler, PreprocessError};

/// Network widths for the predictor; the published pipeline fixes
/// lookback and dropout but not depth, so these are overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub hidden_sizes: Vec<usize>,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        PredictorSpec {
            hidden_sizes: vec![50, 50],
        }
    }
}

/// Dated one-step-ahead predictions aligned to actual test closes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSeries {
    pub dates: Vec<NaiveDate>,
    pub predicted: Vec<f64>,
    pub actual: Vec<Dollars>,
}

impl PredictionSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Squared dollar errors, element-wise.
    pub fn squared_errors(&self) -> Vec<f64> {
        self.predicted
            .iter()
            .zip(&self.actual)
            .map(|(p, a)| {
                let e = p - a.to_f64();
                e * e
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("train split of {len} bars is too short for lookback {lookback}")]
    TrainTooShort { len: usize, lookback: usize },
    #[error("test split of {len} bars is too short for lookback {lookback}")]
    TestTooShort { len: usize, lookback: usize },
    #[error("constant training series: {0}")]
    Degenerate(#[from] PreprocessError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Trained predictor: network, train-fitted scaler, and the normalized
/// tail of the training series used as context for the first test windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePredictor {
    pub net: PredictorNet,
    pub scaler: MinMaxScaler,
    pub lookback: usize,
    pub train_tail: Vec<f64>,
    pub config: TrainConfig,
}

impl PricePredictor {
    /// Fits the scaler on the training split only, trains with MSE on
    /// one-step-ahead windows, and keeps the training tail for inference.
    pub fn fit(
        split: &SplitSeries,
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport), PredictorError> {
        Self::fit_with_spec(split, cfg, &PredictorSpec::default())
    }

    pub fn fit_with_spec(
        split: &SplitSeries,
        cfg: &TrainConfig,
        spec: &PredictorSpec,
    ) -> Result<(Self, TrainReport), PredictorError> {
        let lookback = cfg.lookback;
        if split.train.len() <= lookback {
            return Err(PredictorError::TrainTooShort {
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
        let mut net = PredictorNet::init(lookback, &spec.hidden_sizes, &mut rng);
        let report = train(
            &mut net,
            &dataset.inputs,
            &Targets::NextValue(&dataset.targets),
            cfg,
        )?;

        let train_tail = normalized[normalized.len() - lookback..].to_vec();
        Ok((
            PricePredictor {
                net,
                scaler,
                lookback,
                train_tail,
                config: *cfg,
            },
            report,
        ))
    }

    /// Builds the normalized window ending just before each test bar,
    /// prepending the stored training tail so test bar 0 is covered.
    fn test_windows(&self, split: &SplitSeries) -> Result<Matrix, PredictorError> {
        if split.test.len() <= self.lookback {
            return Err(PredictorError::TestTooShort {
                len: split.test.len(),
                lookback: self.lookback,
            });
        }
        let mut context = self.train_tail.clone();
        context.extend(self.scaler.transform_series(&split.test));
        let n = split.test.len();
        let mut windows = Matrix::zeros(n, self.lookback);
        for i in 0..n {
            windows
                .row_mut(i)
                .copy_from_slice(&context[i..i + self.lookback]);
        }
        Ok(windows)
    }

    /// One prediction per test bar, inverse-transformed to dollars.
    /// Deterministic: inference uses no dropout and no generator.
    pub fn predict_test(&self, split: &SplitSeries) -> Result<PredictionSeries, PredictorError> {
        let windows = self.test_windows(split)?;
        let normalized_preds = self.net.predict_batch(&windows);
        let mut predicted = Vec::with_capacity(normalized_preds.len());
        for p in normalized_preds {
            predicted.push(self.scaler.inverse_transform(p)?);
        }
        Ok(PredictionSeries {
            dates: split.test.dates().collect(),
            predicted,
            actual: split.test.bars().iter().map(|b| b.adj_close).collect(),
        })
    }
}
