//! Fully connected output head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{
    add_bias_rows, column_sums_acc, matmul_acc, matmul_transpose_a_acc, matmul_transpose_b_acc,
    Matrix,
};

/// Linear layer `y = x W + b` with no activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub input_dim: usize,
    pub output_dim: usize,
    /// input_dim x output_dim
    pub w: Matrix,
    /// 1 x output_dim
    pub b: Matrix,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub dw: Matrix,
    pub db: Matrix,
}

impl DenseLayer {
    pub fn init(input_dim: usize, output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input_dim as f64).sqrt();
        let data = (0..input_dim * output_dim)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        DenseLayer {
            input_dim,
            output_dim,
            w: Matrix::from_vec(input_dim, output_dim, data),
            b: Matrix::zeros(1, output_dim),
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.input_dim, "input dimension mismatch");
        let mut y = Matrix::zeros(x.rows(), self.output_dim);
        matmul_acc(&mut y, x, &self.w);
        add_bias_rows(&mut y, &self.b);
        y
    }

    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, x: &Matrix, d_out: &Matrix) -> (DenseGrads, Matrix) {
        assert_eq!(
            d_out.shape(),
            (x.rows(), self.output_dim),
            "gradient shape mismatch"
        );
        let mut dw = Matrix::zeros(self.input_dim, self.output_dim);
        matmul_transpose_a_acc(&mut dw, x, d_out);
        let mut db = Matrix::zeros(1, self.output_dim);
        column_sums_acc(&mut db, d_out);
        let mut dx = Matrix::zeros(x.rows(), self.input_dim);
        matmul_transpose_b_acc(&mut dx, d_out, &self.w);
        (DenseGrads { dw, db }, dx)
    }
}
