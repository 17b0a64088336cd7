//! From-scratch LSTM machinery: matrices, LSTM and dense layers, inverted
//! dropout, losses, Adam, gradient checking, and the train loop. No
//! external autodiff; gradients are hand-derived and finite-difference
//! checked.

pub mod adam;
pub mod dense;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod matrix;
pub mod net;
pub mod train;

pub use adam::AdamState;
pub use dense::DenseLayer;
pub use lstm::{DropoutSpec, LstmLayer};
pub use matrix::Matrix;
pub use net::{AutoencoderNet, Net, PredictorNet, Targets};
pub use train::{train, TrainConfig, TrainError, TrainReport};
