//! The two network shapes used by the strategies: a stacked LSTM with a
//! dense head reading the final hidden state (price predictor), and an
//! LSTM encoder/decoder reconstructing its input window (breakout
//! detector). Both expose loss-plus-gradients for the shared train loop.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseLayer;
use super::loss::{mae_loss, mse_grad, mse_loss};
use super::lstm::{apply_mask, DropoutSpec, LstmCache, LstmLayer};
use super::matrix::Matrix;

/// What the network is being trained against.
pub enum Targets<'a> {
    /// One-step-ahead regression target per window (MSE objective).
    NextValue(&'a [f64]),
    /// Reproduce the input window itself (MAE objective).
    Reconstruction,
}

/// Anything the train loop can optimize.
pub trait Net {
    /// Parameter tensors in a stable order.
    fn tensors(&self) -> Vec<&Matrix>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;
    /// Mean batch loss and the gradient for every tensor, in `tensors()`
    /// order. Dropout masks are drawn from `rng` only when `dropout` is
    /// active; inference paths never touch the generator.
    fn loss_and_grads(
        &self,
        windows: &Matrix,
        targets: &Targets,
        dropout: DropoutSpec,
        rng: &mut ChaCha8Rng,
    ) -> (f64, Vec<Matrix>);
}

/// Splits a batch of windows (batch x lookback) into per-timestep columns.
fn windows_to_steps(windows: &Matrix) -> Vec<Matrix> {
    (0..windows.cols())
        .map(|t| {
            let col: Vec<f64> = (0..windows.rows()).map(|r| windows.get(r, t)).collect();
            Matrix::from_vec(windows.rows(), 1, col)
        })
        .collect()
}

/// Runs a stack of LSTM layers with inverted dropout on the hidden
/// sequences between consecutive layers (never after the last).
/// Masks are `None` outside training.
fn stack_forward(
    layers: &[LstmLayer],
    mut seq: Vec<Matrix>,
    dropout: DropoutSpec,
    mut rng: Option<&mut ChaCha8Rng>,
) -> (Vec<Matrix>, Vec<LstmCache>, Vec<Vec<Matrix>>) {
    let mut caches = Vec::with_capacity(layers.len());
    let mut masks: Vec<Vec<Matrix>> = Vec::new();
    for (li, layer) in layers.iter().enumerate() {
        let (mut out, cache) = layer.forward_seq(seq);
        caches.push(cache);
        if li + 1 < layers.len() {
            if let (true, Some(rng)) = (dropout.is_active(), rng.as_deref_mut()) {
                let layer_masks: Vec<Matrix> = out
                    .iter()
                    .map(|h| dropout.sample_mask(h.rows(), h.cols(), rng))
                    .collect();
                for (h, m) in out.iter_mut().zip(&layer_masks) {
                    *h = apply_mask(h, m);
                }
                masks.push(layer_masks);
            } else {
                masks.push(Vec::new());
            }
        }
        seq = out;
    }
    (seq, caches, masks)
}

/// Backward through a stack, mirroring `stack_forward`. `d_out` is the
/// gradient w.r.t. the final layer's (possibly masked) output sequence.
/// Pushes per-layer grads into `grads` in layer order (w, u, b each) and
/// returns the gradient w.r.t. the stack's input sequence.
fn stack_backward(
    layers: &[LstmLayer],
    caches: &[LstmCache],
    masks: &[Vec<Matrix>],
    mut d_out: Vec<Matrix>,
    grads: &mut Vec<Matrix>,
) -> Vec<Matrix> {
    let mut per_layer: Vec<[Matrix; 3]> = Vec::with_capacity(layers.len());
    for (li, layer) in layers.iter().enumerate().rev() {
        let (g, d_in) = layer.backward_seq(&caches[li], &d_out);
        per_layer.push([g.dw, g.du, g.db]);
        d_out = d_in;
        if li > 0 && !masks[li - 1].is_empty() {
            for (d, m) in d_out.iter_mut().zip(&masks[li - 1]) {
                *d = apply_mask(d, m);
            }
        }
    }
    for [dw, du, db] in per_layer.into_iter().rev() {
        grads.push(dw);
        grads.push(du);
        grads.push(db);
    }
    d_out
}

/// Stacked LSTM + dense head predicting the next normalized value from a
/// lookback window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorNet {
    pub layers: Vec<LstmLayer>,
    pub head: DenseLayer,
    pub lookback: usize,
}

impl PredictorNet {
    pub fn init(lookback: usize, hidden_sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(!hidden_sizes.is_empty(), "need at least one LSTM layer");
        let mut layers = Vec::with_capacity(hidden_sizes.len());
        let mut input_dim = 1;
        for &hidden in hidden_sizes {
            layers.push(LstmLayer::init(input_dim, hidden, rng));
            input_dim = hidden;
        }
        let head = DenseLayer::init(input_dim, 1, rng);
        PredictorNet {
            layers,
            head,
            lookback,
        }
    }

    /// Inference: no dropout, no caches.
    pub fn predict_batch(&self, windows: &Matrix) -> Vec<f64> {
        assert_eq!(windows.cols(), self.lookback, "window width mismatch");
        let steps = windows_to_steps(windows);
        let (seq, _, _) = stack_forward(&self.layers, steps, DropoutSpec::disabled(), None);
        let out = self.head.forward(seq.last().expect("non-empty sequence"));
        (0..out.rows()).map(|r| out.get(r, 0)).collect()
    }

    fn forward_train(
        &self,
        windows: &Matrix,
        dropout: DropoutSpec,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<f64>, PredictorCache) {
        assert_eq!(windows.cols(), self.lookback, "window width mismatch");
        let steps = windows_to_steps(windows);
        let (seq, caches, masks) = stack_forward(&self.layers, steps, dropout, Some(rng));
        let last_h = seq.last().expect("non-empty sequence").clone();
        let out = self.head.forward(&last_h);
        let preds = (0..out.rows()).map(|r| out.get(r, 0)).collect();
        (
            preds,
            PredictorCache {
                caches,
                masks,
                last_h,
            },
        )
    }

    fn backward(&self, cache: &PredictorCache, d_preds: &[f64]) -> Vec<Matrix> {
        let batch = cache.last_h.rows();
        assert_eq!(d_preds.len(), batch, "gradient length mismatch");
        let d_out = Matrix::from_vec(batch, 1, d_preds.to_vec());
        let (head_grads, d_last_h) = self.head.backward(&cache.last_h, &d_out);

        let steps = cache.caches[0].xs.len();
        let hidden = d_last_h.cols();
        let mut d_seq: Vec<Matrix> = (0..steps).map(|_| Matrix::zeros(batch, hidden)).collect();
        d_seq[steps - 1] = d_last_h;

        let mut grads = Vec::new();
        stack_backward(&self.layers, &cache.caches, &cache.masks, d_seq, &mut grads);
        grads.push(head_grads.dw);
        grads.push(head_grads.db);
        grads
    }
}

struct PredictorCache {
    caches: Vec<LstmCache>,
    masks: Vec<Vec<Matrix>>,
    last_h: Matrix,
}

impl Net for PredictorNet {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t: Vec<&Matrix> = Vec::new();
        for l in &self.layers {
            t.extend([&l.w, &l.u, &l.b]);
        }
        t.extend([&self.head.w, &self.head.b]);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t: Vec<&mut Matrix> = Vec::new();
        for l in &mut self.layers {
            t.extend([&mut l.w, &mut l.u, &mut l.b]);
        }
        t.extend([&mut self.head.w, &mut self.head.b]);
        t
    }

    fn loss_and_grads(
        &self,
        windows: &Matrix,
        targets: &Targets,
        dropout: DropoutSpec,
        rng: &mut ChaCha8Rng,
    ) -> (f64, Vec<Matrix>) {
        let Targets::NextValue(targets) = targets else {
            panic!("predictor expects next-value targets");
        };
        let (preds, cache) = self.forward_train(windows, dropout, rng);
        let loss = mse_loss(&preds, targets);
        let d_preds = mse_grad(&preds, targets);
        (loss, self.backward(&cache, &d_preds))
    }
}

/// LSTM autoencoder: the encoder compresses a window into its final
/// hidden state, the decoder re-expands that latent vector (repeated at
/// every timestep) and a shared dense head emits one value per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderNet {
    pub encoder: Vec<LstmLayer>,
    pub decoder: Vec<LstmLayer>,
    pub head: DenseLayer,
    pub lookback: usize,
    pub latent: usize,
}

impl AutoencoderNet {
    /// `hidden` is the outer width, `latent` the bottleneck:
    /// encoder 1 -> hidden -> latent, decoder latent -> latent -> hidden -> 1.
    pub fn init(lookback: usize, hidden: usize, latent: usize, rng: &mut ChaCha8Rng) -> Self {
        let encoder = vec![
            LstmLayer::init(1, hidden, rng),
            LstmLayer::init(hidden, latent, rng),
        ];
        let decoder = vec![
            LstmLayer::init(latent, latent, rng),
            LstmLayer::init(latent, hidden, rng),
        ];
        let head = DenseLayer::init(hidden, 1, rng);
        AutoencoderNet {
            encoder,
            decoder,
            head,
            lookback,
            latent,
        }
    }

    /// Inference reconstruction, batch x lookback.
    pub fn reconstruct_batch(&self, windows: &Matrix) -> Matrix {
        let (recon, _) = self.forward(windows, DropoutSpec::disabled(), None);
        recon
    }

    /// Per-window reconstruction MAE in normalized space.
    pub fn reconstruction_mae_batch(&self, windows: &Matrix) -> Vec<f64> {
        let recon = self.reconstruct_batch(windows);
        (0..windows.rows())
            .map(|r| mae_loss(recon.row(r), windows.row(r)))
            .collect()
    }

    fn forward(
        &self,
        windows: &Matrix,
        dropout: DropoutSpec,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> (Matrix, AutoencoderCache) {
        assert_eq!(windows.cols(), self.lookback, "window width mismatch");
        let batch = windows.rows();
        let steps = windows_to_steps(windows);
        let (enc_seq, enc_caches, enc_masks) =
            stack_forward(&self.encoder, steps, dropout, rng.as_deref_mut());
        let latent = enc_seq.last().expect("non-empty sequence").clone();

        let repeated: Vec<Matrix> = (0..self.lookback).map(|_| latent.clone()).collect();
        let (dec_seq, dec_caches, dec_masks) = stack_forward(&self.decoder, repeated, dropout, rng);

        let mut recon = Matrix::zeros(batch, self.lookback);
        for (t, h) in dec_seq.iter().enumerate() {
            let out = self.head.forward(h);
            for r in 0..batch {
                recon.set(r, t, out.get(r, 0));
            }
        }
        let cache = AutoencoderCache {
            enc_caches,
            enc_masks,
            dec_caches,
            dec_masks,
            dec_seq,
        };
        (recon, cache)
    }

    fn backward(&self, cache: &AutoencoderCache, d_recon: &Matrix) -> Vec<Matrix> {
        let batch = d_recon.rows();
        let steps = self.lookback;

        // Head is shared across timesteps; accumulate its gradients.
        let mut head_dw = Matrix::zeros(self.head.input_dim, 1);
        let mut head_db = Matrix::zeros(1, 1);
        let mut d_dec_seq = Vec::with_capacity(steps);
        for t in 0..steps {
            let d_out = Matrix::from_vec(batch, 1, (0..batch).map(|r| d_recon.get(r, t)).collect());
            let (g, d_h) = self.head.backward(&cache.dec_seq[t], &d_out);
            head_dw.add_scaled(&g.dw, 1.0);
            head_db.add_scaled(&g.db, 1.0);
            d_dec_seq.push(d_h);
        }

        let mut dec_grads = Vec::new();
        let d_repeated = stack_backward(
            &self.decoder,
            &cache.dec_caches,
            &cache.dec_masks,
            d_dec_seq,
            &mut dec_grads,
        );

        // The latent vector feeds every decoder timestep.
        let mut d_latent = Matrix::zeros(batch, self.latent);
        for d in &d_repeated {
            d_latent.add_scaled(d, 1.0);
        }
        let mut d_enc_seq: Vec<Matrix> = (0..steps)
            .map(|_| Matrix::zeros(batch, self.latent))
            .collect();
        d_enc_seq[steps - 1] = d_latent;

        let mut grads = Vec::new();
        stack_backward(
            &self.encoder,
            &cache.enc_caches,
            &cache.enc_masks,
            d_enc_seq,
            &mut grads,
        );
        grads.extend(dec_grads);
        grads.push(head_dw);
        grads.push(head_db);
        grads
    }
}

struct AutoencoderCache {
    enc_caches: Vec<LstmCache>,
    enc_masks: Vec<Vec<Matrix>>,
    dec_caches: Vec<LstmCache>,
    dec_masks: Vec<Vec<Matrix>>,
    dec_seq: Vec<Matrix>,
}

impl Net for AutoencoderNet {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t: Vec<&Matrix> = Vec::new();
        for l in self.encoder.iter().chain(&self.decoder) {
            t.extend([&l.w, &l.u, &l.b]);
        }
        t.extend([&self.head.w, &self.head.b]);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t: Vec<&mut Matrix> = Vec::new();
        for l in self.encoder.iter_mut().chain(&mut self.decoder) {
            t.extend([&mut l.w, &mut l.u, &mut l.b]);
        }
        t.extend([&mut self.head.w, &mut self.head.b]);
        t
    }

    fn loss_and_grads(
        &self,
        windows: &Matrix,
        targets: &Targets,
        dropout: DropoutSpec,
        rng: &mut ChaCha8Rng,
    ) -> (f64, Vec<Matrix>) {
        assert!(
            matches!(targets, Targets::Reconstruction),
            "autoencoder expects reconstruction targets"
        );
        let (recon, cache) = self.forward(windows, dropout, Some(rng));
        let loss = mae_loss(recon.data(), windows.data());
        // d(mean |r - x|)/dr = sign(r - x) / (batch * lookback)
        let n = recon.len() as f64;
        let d_data: Vec<f64> = recon
            .iter()
            .zip(windows.iter())
            .map(|(r, x)| {
                if r > x {
                    1.0 / n
                } else if r < x {
                    -1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        let d_recon = Matrix::from_vec(recon.rows(), recon.cols(), d_data);
        (loss, self.backward(&cache, &d_recon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn window(values: &[f64]) -> Matrix {
        Matrix::from_vec(1, values.len(), values.to_vec())
    }

    #[test]
    fn inference_is_deterministic_without_rng() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = PredictorNet::init(5, &[4, 4], &mut rng);
        let w = window(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let a = net.predict_batch(&w);
        let b = net.predict_batch(&w);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn zero_dropout_training_forward_equals_inference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = PredictorNet::init(4, &[3, 3], &mut rng);
        let w = window(&[0.5, 0.25, 0.75, 0.1]);
        let inference = net.predict_batch(&w)[0];
        let mut rng_a = ChaCha8Rng::seed_from_u64(99);
        let (train_preds, _) = net.forward_train(&w, DropoutSpec::new(0.0), &mut rng_a);
        assert_eq!(train_preds[0].to_bits(), inference.to_bits());
    }

    #[test]
    fn batched_forward_matches_single_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = PredictorNet::init(6, &[5], &mut rng);
        let batch = Matrix::from_rows(&[
            &[0.1, 0.9, 0.3, 0.6, 0.2, 0.8],
            &[0.4, 0.1, 0.7, 0.2, 0.9, 0.5],
            &[0.0, 0.0, 1.0, 1.0, 0.5, 0.5],
        ]);
        let batched = net.predict_batch(&batch);
        for (r, &expected) in batched.iter().enumerate() {
            let single = net.predict_batch(&Matrix::from_vec(1, 6, batch.row(r).to_vec()));
            assert_eq!(expected.to_bits(), single[0].to_bits());
        }
    }

    #[test]
    fn batch_gradients_are_the_mean_of_per_sample_gradients() {
        // Samples only influence their own window's gradient contribution;
        // the batch gradient is exactly the mean of per-sample gradients.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = PredictorNet::init(4, &[3], &mut rng);
        let batch = Matrix::from_rows(&[
            &[0.1, 0.4, 0.7, 0.2],
            &[0.9, 0.3, 0.5, 0.8],
            &[0.2, 0.2, 0.6, 0.1],
        ]);
        let targets = [0.3, 0.6, 0.9];
        let (_, batch_grads) = net.loss_and_grads(
            &batch,
            &Targets::NextValue(&targets),
            DropoutSpec::disabled(),
            &mut rng,
        );
        let mut summed: Vec<Matrix> = net
            .tensors()
            .iter()
            .map(|t| Matrix::zeros(t.rows(), t.cols()))
            .collect();
        for r in 0..3 {
            let w = Matrix::from_vec(1, 4, batch.row(r).to_vec());
            let (_, g) = net.loss_and_grads(
                &w,
                &Targets::NextValue(&targets[r..r + 1]),
                DropoutSpec::disabled(),
                &mut rng,
            );
            for (acc, gi) in summed.iter_mut().zip(&g) {
                acc.add_scaled(gi, 1.0 / 3.0);
            }
        }
        for (b, s) in batch_grads.iter().zip(&summed) {
            for (x, y) in b.iter().zip(s.iter()) {
                assert!((x - y).abs() < 1e-12, "batch {x} vs mean {y}");
            }
        }
    }

    #[test]
    fn autoencoder_reconstruction_shape_matches_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = AutoencoderNet::init(7, 6, 3, &mut rng);
        let batch = Matrix::zeros(4, 7);
        let recon = net.reconstruct_batch(&batch);
        assert_eq!(recon.shape(), (4, 7));
        let maes = net.reconstruction_mae_batch(&batch);
        assert_eq!(maes.len(), 4);
        assert!(maes.iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn gradient_count_matches_tensor_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = PredictorNet::init(4, &[3, 2], &mut rng);
        let w = Matrix::from_rows(&[&[0.1, 0.2, 0.3, 0.4]]);
        let (_, grads) = net.loss_and_grads(
            &w,
            &Targets::NextValue(&[0.5]),
            DropoutSpec::disabled(),
            &mut rng,
        );
        assert_eq!(grads.len(), net.tensors().len());
        for (g, p) in grads.iter().zip(net.tensors()) {
            assert_eq!(g.shape(), p.shape());
            assert!(g.all_finite());
        }

        let ae = AutoencoderNet::init(4, 3, 2, &mut rng);
        let (_, grads) = ae.loss_and_grads(
            &w,
            &Targets::Reconstruction,
            DropoutSpec::disabled(),
            &mut rng,
        );
        assert_eq!(grads.len(), ae.tensors().len());
    }
}
