//! Min-max normalization and sliding-window dataset construction shared
//! by both strategies. Scalers are fit on the training split only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::PriceSeries;
use crate::neural::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("degenerate scaler: min equals max ({0}), inverse transform is ill-defined")]
    DegenerateScaler(f64),
    #[error(
        "series of {len} values is too short for lookback {lookback}: need at least lookback + 1"
    )]
    TooShort { len: usize, lookback: usize },
}

/// Linear map from the training price range onto [0, 1].
///
/// Test values outside the fitted range are intentionally not clipped;
/// out-of-range spikes are exactly what the detector must see.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: f64,
    max: f64,
}

impl MinMaxScaler {
    /// Fits on the extrema of the training series.
    pub fn fit(train: &PriceSeries) -> Self {
        let closes = train.closes_f64();
        assert!(!closes.is_empty(), "cannot fit scaler on empty series");
        let min = closes.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = closes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        MinMaxScaler { min, max }
    }

    pub fn from_bounds(min: f64, max: f64) -> Self {
        assert!(max >= min, "max must be >= min");
        MinMaxScaler { min, max }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// A constant training series gives min == max; such a scaler maps
    /// everything to 0 and cannot be inverted.
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    /// `(x - min) / (max - min)`; 0.0 by convention when the range is empty.
    pub fn transform(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn transform_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.transform(x)).collect()
    }

    pub fn transform_series(&self, series: &PriceSeries) -> Vec<f64> {
        self.transform_all(&series.closes_f64())
    }

    /// Maps a normalized value back to dollars.
    pub fn inverse_transform(&self, y: f64) -> Result<f64, PreprocessError> {
        if self.is_degenerate() {
            return Err(PreprocessError::DegenerateScaler(self.min));
        }
        Ok(y * (self.max - self.min) + self.min)
    }
}

/// Supervised one-step-ahead samples: row i of `inputs` holds the
/// `lookback` normalized values immediately preceding `targets[i]`.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
    pub lookback: usize,
}

impl WindowedDataset {
    pub fn num_samples(&self) -> usize {
        self.inputs.rows()
    }
}

/// Slides a window of `lookback` values over the series, pairing each
/// window with the single next value. Produces `len - lookback` samples.
pub fn make_windows(
    normalized: &[f64],
    lookback: usize,
) -> Result<WindowedDataset, PreprocessError> {
    assert!(lookback > 0, "lookback must be positive");
    if normalized.len() <= lookback {
        return Err(PreprocessError::TooShort {
            len: normalized.len(),
            lookback,
        });
    }
    let samples = normalized.len() - lookback;
    let mut inputs = Matrix::zeros(samples, lookback);
    let mut targets = Vec::with_capacity(samples);
    for i in 0..samples {
        inputs
            .row_mut(i)
            .copy_from_slice(&normalized[i..i + lookback]);
        targets.push(normalized[i + lookback]);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        lookback,
    })
}
