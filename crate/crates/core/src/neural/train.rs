//! Seeded mini-batch training shared by both networks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adam::AdamState;
use super::lstm::DropoutSpec;
use super::matrix::Matrix;
use super::net::{Net, Targets};

/// Hyperparameters. Defaults are the published pipeline values:
/// 100 epochs, batch 32, lookback 60, dropout 0.2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lookback: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    /// Global-norm gradient clip; BPTT on spike windows explodes without it.
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            lookback: 60,
            dropout: 0.2,
            learning_rate: 0.001,
            grad_clip: 5.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch, exactly `epochs` entries.
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite gradient at epoch {epoch}, batch {batch}")]
    NonFiniteGradient { epoch: usize, batch: usize },
}

/// Runs seeded mini-batch Adam over the windows. Batches are drawn in a
/// freshly shuffled order each epoch and the final partial batch is
/// included. Identical config and inputs give bitwise-identical results.
pub fn train<N: Net>(
    net: &mut N,
    windows: &Matrix,
    targets: &Targets,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    assert!(cfg.epochs >= 1, "epochs must be at least 1");
    assert!(cfg.batch_size >= 1, "batch size must be at least 1");
    let n = windows.rows();
    if n == 0 {
        return Err(TrainError::EmptyDataset);
    }
    if let Targets::NextValue(t) = targets {
        assert_eq!(t.len(), n, "target count must match window count");
    }
    let dropout = DropoutSpec::new(cfg.dropout);
    // Distinct stream from weight init, which consumes the raw seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let shapes: Vec<(usize, usize)> = net.tensors().iter().map(|t| t.shape()).collect();
    let mut adam = AdamState::new(&shapes, cfg.learning_rate);

    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch_windows = Matrix::gather_rows(windows, chunk);
            let gathered;
            let batch_targets = match targets {
                Targets::NextValue(all) => {
                    gathered = chunk.iter().map(|&i| all[i]).collect::<Vec<f64>>();
                    Targets::NextValue(&gathered)
                }
                Targets::Reconstruction => Targets::Reconstruction,
            };
            let (loss, mut grads) =
                net.loss_and_grads(&batch_windows, &batch_targets, dropout, &mut rng);
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            clip_global_norm(&mut grads, cfg.grad_clip).map_err(|_| {
                TrainError::NonFiniteGradient {
                    epoch,
                    batch: batch_idx,
                }
            })?;
            adam.step(&mut net.tensors_mut(), &grads);
            epoch_loss += loss * chunk.len() as f64;
        }
        epoch_losses.push(epoch_loss / n as f64);
    }
    Ok(TrainReport { epoch_losses })
}

/// Scales all gradients by `max_norm / norm` when the global L2 norm
/// exceeds `max_norm`. Errors on non-finite norms.
fn clip_global_norm(grads: &mut [Matrix], max_norm: f64) -> Result<(), ()> {
    let norm_sq: f64 = grads.iter().map(Matrix::norm_sq).sum();
    if !norm_sq.is_finite() {
        return Err(());
    }
    let norm = norm_sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale(scale);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::net::{AutoencoderNet, PredictorNet};
    use crate::preprocess::make_windows;

    fn sine(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.5 + 0.5 * (i as f64 * 0.2).sin()).collect()
    }

    fn small_cfg(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            lookback: 10,
            dropout: 0.1,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_history_has_one_entry_per_epoch() {
        let data = make_windows(&sine(60), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = PredictorNet::init(10, &[6], &mut rng);
        let cfg = small_cfg(5, 1);
        let report = train(
            &mut net,
            &data.inputs,
            &Targets::NextValue(&data.targets),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.epoch_losses.len(), 5);
        assert!(report.epoch_losses.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn sine_training_reduces_loss() {
        let data = make_windows(&sine(160), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = PredictorNet::init(10, &[8], &mut rng);
        let cfg = small_cfg(12, 2);
        let report = train(
            &mut net,
            &data.inputs,
            &Targets::NextValue(&data.targets),
            &cfg,
        )
        .unwrap();
        assert!(
            report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap(),
            "losses {:?}",
            report.epoch_losses
        );
    }

    #[test]
    fn autoencoder_training_reduces_reconstruction_error() {
        let data = make_windows(&sine(120), 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = AutoencoderNet::init(12, 8, 4, &mut rng);
        let cfg = TrainConfig {
            lookback: 12,
            ..small_cfg(15, 3)
        };
        let report = train(&mut net, &data.inputs, &Targets::Reconstruction, &cfg).unwrap();
        assert!(report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap());
    }

    #[test]
    fn identical_seeds_give_identical_training() {
        let data = make_windows(&sine(80), 10).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = PredictorNet::init(10, &[5], &mut rng);
            let cfg = small_cfg(4, seed);
            let report = train(
                &mut net,
                &data.inputs,
                &Targets::NextValue(&data.targets),
                &cfg,
            )
            .unwrap();
            (report.epoch_losses, net)
        };
        let (losses_a, net_a) = run(7);
        let (losses_b, net_b) = run(7);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&losses_a), bits(&losses_b));
        for (a, b) in net_a.tensors().iter().zip(net_b.tensors()) {
            assert_eq!(bits(a.data()), bits(b.data()));
        }
        let (losses_c, _) = run(8);
        assert_ne!(
            bits(&losses_a),
            bits(&losses_c),
            "different seeds should differ"
        );
    }

    #[test]
    fn non_finite_loss_aborts_with_diagnostic() {
        let data = make_windows(&sine(40), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = PredictorNet::init(10, &[4], &mut rng);
        // A target at the f64 edge overflows the squared error immediately.
        let targets = vec![1e200; data.targets.len()];
        match train(
            &mut net,
            &data.inputs,
            &Targets::NextValue(&targets),
            &small_cfg(3, 4),
        ) {
            Err(TrainError::NonFiniteLoss { epoch, batch }) => {
                assert_eq!((epoch, batch), (0, 0));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = PredictorNet::init(10, &[4], &mut rng);
        let empty = Matrix::zeros(0, 10);
        assert!(matches!(
            train(&mut net, &empty, &Targets::NextValue(&[]), &small_cfg(1, 5)),
            Err(TrainError::EmptyDataset)
        ));
    }
}
