//! Adam with bias correction, one moment pair per parameter tensor.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first_moments: Vec<Matrix>,
    second_moments: Vec<Matrix>,
}

impl AdamState {
    /// Moment accumulators start at zero, one pair per tensor shape.
    pub fn new(shapes: &[(usize, usize)], learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            step: 0,
            first_moments: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second_moments: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) {
        assert_eq!(
            params.len(),
            self.first_moments.len(),
            "tensor count mismatch"
        );
        assert_eq!(grads.len(), params.len(), "gradient count mismatch");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moments.iter_mut().zip(&mut self.second_moments))
        {
            assert_eq!(
                param.shape(),
                grad.shape(),
                "parameter/gradient shape mismatch"
            );
            let p = param.data_mut();
            let g = grad.data();
            let m = m.data_mut();
            let v = v.data_mut();
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}
