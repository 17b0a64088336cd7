//! A single LSTM layer with batched forward over a sequence and full
//! backpropagation through time. Gradients are hand-derived; the finite
//! difference suite in `gradcheck` is the independent oracle for them.
//!
//! Per timestep, with gate blocks packed `[i | f | g | o]`:
//!
//!   pre = x_t W + h_{t-1} U + b
//!   i = sigmoid(pre_i), f = sigmoid(pre_f), g = tanh(pre_g), o = sigmoid(pre_o)
//!   c_t = f * c_{t-1} + i * g
//!   h_t = o * tanh(c_t)

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{
    add_bias_rows, column_sums_acc, matmul_acc, matmul_transpose_a_acc, matmul_transpose_b_acc,
    Matrix,
};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `tanh` as `expm1(2x) / (expm1(2x) + 2)`: same accuracy class as libm
/// (a few ulps, no cancellation near zero) at roughly a third of the
/// cost, which matters because gate activation is a training hot spot.
#[inline]
fn tanh_fast(x: f64) -> f64 {
    if x > 20.0 {
        return 1.0;
    }
    if x < -20.0 {
        return -1.0;
    }
    let e = (2.0 * x).exp_m1();
    e / (e + 2.0)
}

/// Weights for one LSTM layer. `w` maps layer input to the four gate
/// pre-activations, `u` maps the previous hidden state, `b` is the bias row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub input_dim: usize,
    pub hidden: usize,
    /// input_dim x 4*hidden
    pub w: Matrix,
    /// hidden x 4*hidden
    pub u: Matrix,
    /// 1 x 4*hidden
    pub b: Matrix,
}

/// Post-activation gate values and cell states for one forward pass,
/// kept for the backward sweep.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Layer inputs per timestep, batch x input_dim.
    pub xs: Vec<Matrix>,
    /// Hidden states h_0..h_T (h_0 is zeros), batch x hidden.
    hs: Vec<Matrix>,
    /// Cell states c_0..c_T, batch x hidden.
    cs: Vec<Matrix>,
    /// Activated gates per timestep, batch x 4*hidden.
    gates: Vec<Matrix>,
    /// tanh(c_t) per timestep, batch x hidden.
    tanh_cs: Vec<Matrix>,
}

/// Parameter gradients mirroring `LstmLayer` shapes.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub dw: Matrix,
    pub du: Matrix,
    pub db: Matrix,
}

impl LstmLayer {
    /// Uniform init in [-1/sqrt(hidden), +1/sqrt(hidden)], zero biases
    /// except the forget gate, which starts at 1.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut sample = |rows: usize, cols: usize| {
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            Matrix::from_vec(rows, cols, data)
        };
        let w = sample(input_dim, 4 * hidden);
        let u = sample(hidden, 4 * hidden);
        let mut b = Matrix::zeros(1, 4 * hidden);
        for j in hidden..2 * hidden {
            b.set(0, j, 1.0);
        }
        LstmLayer {
            input_dim,
            hidden,
            w,
            u,
            b,
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmLayer {
            input_dim,
            hidden,
            w: Matrix::zeros(input_dim, 4 * hidden),
            u: Matrix::zeros(hidden, 4 * hidden),
            b: Matrix::zeros(1, 4 * hidden),
        }
    }

    /// One timestep for a batch. Returns (h, c, activated gates, tanh(c)).
    pub fn step(
        &self,
        x: &Matrix,
        h_prev: &Matrix,
        c_prev: &Matrix,
    ) -> (Matrix, Matrix, Matrix, Matrix) {
        let batch = x.rows();
        assert_eq!(x.cols(), self.input_dim, "input dimension mismatch");
        assert_eq!(
            h_prev.shape(),
            (batch, self.hidden),
            "hidden state shape mismatch"
        );
        assert_eq!(
            c_prev.shape(),
            (batch, self.hidden),
            "cell state shape mismatch"
        );
        let hid = self.hidden;

        let mut gates = Matrix::zeros(batch, 4 * hid);
        matmul_acc(&mut gates, x, &self.w);
        matmul_acc(&mut gates, h_prev, &self.u);
        add_bias_rows(&mut gates, &self.b);

        let mut c = Matrix::zeros(batch, hid);
        let mut h = Matrix::zeros(batch, hid);
        let mut tanh_c = Matrix::zeros(batch, hid);
        for r in 0..batch {
            let g_row = gates.row_mut(r);
            let (i_blk, rest) = g_row.split_at_mut(hid);
            let (f_blk, rest) = rest.split_at_mut(hid);
            let (g_blk, o_blk) = rest.split_at_mut(hid);
            for v in i_blk
                .iter_mut()
                .chain(f_blk.iter_mut())
                .chain(o_blk.iter_mut())
            {
                *v = sigmoid(*v);
            }
            for v in g_blk.iter_mut() {
                *v = tanh_fast(*v);
            }
            let c_row = c.row_mut(r);
            let cp_row = c_prev.row(r);
            let tc_row = tanh_c.row_mut(r);
            let h_row = h.row_mut(r);
            for j in 0..hid {
                c_row[j] = f_blk[j] * cp_row[j] + i_blk[j] * g_blk[j];
                tc_row[j] = tanh_fast(c_row[j]);
                h_row[j] = o_blk[j] * tc_row[j];
            }
        }
        (h, c, gates, tanh_c)
    }

    /// Runs the layer over a whole sequence from zero initial state.
    /// Returns the h_t outputs per timestep and the cache for backward.
    pub fn forward_seq(&self, xs: Vec<Matrix>) -> (Vec<Matrix>, LstmCache) {
        assert!(!xs.is_empty(), "empty sequence");
        let batch = xs[0].rows();
        let mut hs = vec![Matrix::zeros(batch, self.hidden)];
        let mut cs = vec![Matrix::zeros(batch, self.hidden)];
        let mut gates = Vec::with_capacity(xs.len());
        let mut tanh_cs = Vec::with_capacity(xs.len());
        for x in &xs {
            let (h, c, g, tc) = self.step(x, hs.last().unwrap(), cs.last().unwrap());
            hs.push(h);
            cs.push(c);
            gates.push(g);
            tanh_cs.push(tc);
        }
        let outputs = hs[1..].to_vec();
        (
            outputs,
            LstmCache {
                xs,
                hs,
                cs,
                gates,
                tanh_cs,
            },
        )
    }

    /// BPTT over a cached forward pass. `d_hs[t]` is the loss gradient
    /// w.r.t. this layer's output h_{t+1}. Returns parameter gradients and
    /// the gradient w.r.t. each timestep's input.
    pub fn backward_seq(&self, cache: &LstmCache, d_hs: &[Matrix]) -> (LstmGrads, Vec<Matrix>) {
        let steps = cache.xs.len();
        assert_eq!(d_hs.len(), steps, "upstream gradient length mismatch");
        let batch = cache.xs[0].rows();
        let hid = self.hidden;

        let mut grads = LstmGrads {
            dw: Matrix::zeros(self.input_dim, 4 * hid),
            du: Matrix::zeros(hid, 4 * hid),
            db: Matrix::zeros(1, 4 * hid),
        };
        let mut d_xs = vec![Matrix::zeros(batch, self.input_dim); steps];
        let mut dh_next = Matrix::zeros(batch, hid);
        let mut dc_next = Matrix::zeros(batch, hid);
        let mut d_pre = Matrix::zeros(batch, 4 * hid);

        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let tanh_c = &cache.tanh_cs[t];
            let c_prev = &cache.cs[t];
            for r in 0..batch {
                let g_row = gates.row(r);
                let (gi, rest) = g_row.split_at(hid);
                let (gf, rest) = rest.split_at(hid);
                let (gg, go) = rest.split_at(hid);
                let tc_row = tanh_c.row(r);
                let cp_row = c_prev.row(r);
                let dh_up = d_hs[t].row(r);
                let dhn_row = dh_next.row(r);
                let dcn_row = dc_next.row_mut(r);
                let dp_row = d_pre.row_mut(r);
                let (dpi, rest) = dp_row.split_at_mut(hid);
                let (dpf, rest) = rest.split_at_mut(hid);
                let (dpg, dpo) = rest.split_at_mut(hid);
                for j in 0..hid {
                    let tc = tc_row[j];
                    let dh = dh_up[j] + dhn_row[j];
                    let d_o = dh * tc;
                    let dc = dcn_row[j] + dh * go[j] * (1.0 - tc * tc);
                    dcn_row[j] = dc * gf[j];

                    dpi[j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
                    dpf[j] = dc * cp_row[j] * gf[j] * (1.0 - gf[j]);
                    dpg[j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
                    dpo[j] = d_o * go[j] * (1.0 - go[j]);
                }
            }
            matmul_transpose_a_acc(&mut grads.dw, &cache.xs[t], &d_pre);
            matmul_transpose_a_acc(&mut grads.du, &cache.hs[t], &d_pre);
            column_sums_acc(&mut grads.db, &d_pre);
            matmul_transpose_b_acc(&mut d_xs[t], &d_pre, &self.w);
            dh_next.fill(0.0);
            matmul_transpose_b_acc(&mut dh_next, &d_pre, &self.u);
        }
        (grads, d_xs)
    }
}

/// Inverted dropout: surviving activations are scaled by 1/(1-rate) at
/// train time so inference needs no rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    rate: f64,
}

impl DropoutSpec {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        DropoutSpec { rate }
    }

    pub const fn disabled() -> Self {
        DropoutSpec { rate: 0.0 }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    /// Samples a mask whose entries are 0 (dropped) or 1/(1-rate) (kept).
    pub fn sample_mask(&self, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let keep_scale = 1.0 / (1.0 - self.rate);
        let data = (0..rows * cols)
            .map(|_| {
                if rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep_scale
                }
            })
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

/// Element-wise product, used to apply dropout masks in both directions.
pub fn apply_mask(values: &Matrix, mask: &Matrix) -> Matrix {
    assert_eq!(values.shape(), mask.shape(), "mask shape mismatch");
    let data = values.iter().zip(mask.iter()).map(|(v, m)| v * m).collect();
    Matrix::from_vec(values.rows(), values.cols(), data)
}
