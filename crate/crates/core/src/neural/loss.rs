//! Training and evaluation losses.

/// Mean squared error over equal-length slices.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len(), "length mismatch");
    assert!(!pred.is_empty(), "empty input");
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64
}

/// Mean absolute error over equal-length slices.
pub fn mae_loss(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len(), "length mismatch");
    assert!(!pred.is_empty(), "empty input");
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64
}

/// Gradient of `mse_loss` w.r.t. each prediction: 2 (p - t) / n.
pub fn mse_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    assert_eq!(pred.len(), target.len(), "length mismatch");
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect()
}

/// Gradient of `mae_loss` w.r.t. each prediction: sign(p - t) / n,
/// with 0 at exact ties.
pub fn mae_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    assert_eq!(pred.len(), target.len(), "length mismatch");
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(p, t)| {
            if p > t {
                1.0 / n
            } else if p < t {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_vectors_have_zero_loss() {
        let v = [0.3, 0.7, 1.1];
        assert_eq!(mse_loss(&v, &v), 0.0);
        assert_eq!(mae_loss(&v, &v), 0.0);
    }

    #[test]
    fn hand_computed_case() {
        let pred = [0.0, 1.0];
        let target = [1.0, 1.0];
        assert_eq!(mse_loss(&pred, &target), 0.5);
        assert_eq!(mae_loss(&pred, &target), 0.5);
    }

    #[test]
    fn mae_bounded_by_rmse() {
        // Jensen: mean|e| <= sqrt(mean e^2).
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let n = rng.gen_range(1..20);
            let pred: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let target: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            assert!(mae_loss(&pred, &target) <= mse_loss(&pred, &target).sqrt() + 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pred = [0.4, -0.3, 1.2];
        let target = [0.1, 0.1, 0.1];
        let step = 1e-6;
        for i in 0..pred.len() {
            let mut up = pred;
            let mut down = pred;
            up[i] += step;
            down[i] -= step;
            let fd_mse = (mse_loss(&up, &target) - mse_loss(&down, &target)) / (2.0 * step);
            assert!((mse_grad(&pred, &target)[i] - fd_mse).abs() < 1e-8);
            let fd_mae = (mae_loss(&up, &target) - mae_loss(&down, &target)) / (2.0 * step);
            assert!((mae_grad(&pred, &target)[i] - fd_mae).abs() < 1e-8);
        }
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn length_mismatch_panics() {
        mse_loss(&[1.0], &[1.0, 2.0]);
    }

    #[test]
    #[should_panic(expected = "empty input")]
    fn empty_input_panics() {
        mae_loss(&[], &[]);
    }
}
