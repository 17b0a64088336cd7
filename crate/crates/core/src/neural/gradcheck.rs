//! Central finite-difference gradients, the independent oracle for every
//! hand-derived backward pass. Only the forward/loss path is exercised:
//! each parameter is nudged up and down and the loss re-evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lstm::DropoutSpec;
use super::matrix::Matrix;
use super::net::{Net, Targets};

/// Loss with dropout disabled; the generator is never consulted.
fn loss_only<N: Net>(net: &N, windows: &Matrix, targets: &Targets) -> f64 {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    net.loss_and_grads(windows, targets, DropoutSpec::disabled(), &mut unused)
        .0
}

/// Central finite differences for every parameter tensor, in
/// `tensors()` order.
pub fn finite_difference_grads<N: Net>(
    net: &mut N,
    windows: &Matrix,
    targets: &Targets,
    step: f64,
) -> Vec<Matrix> {
    let shapes: Vec<(usize, usize)> = net.tensors().iter().map(|t| t.shape()).collect();
    let mut fd = Vec::with_capacity(shapes.len());
    for (ti, &(rows, cols)) in shapes.iter().enumerate() {
        let mut grad = Matrix::zeros(rows, cols);
        for i in 0..rows * cols {
            let original = net.tensors()[ti].data()[i];
            net.tensors_mut()[ti].data_mut()[i] = original + step;
            let up = loss_only(net, windows, targets);
            net.tensors_mut()[ti].data_mut()[i] = original - step;
            let down = loss_only(net, windows, targets);
            net.tensors_mut()[ti].data_mut()[i] = original;
            grad.data_mut()[i] = (up - down) / (2.0 * step);
        }
        fd.push(grad);
    }
    fd
}

/// Largest element-wise relative error `|a - f| / (|a| + 1e-8)` between
/// analytic and finite-difference gradients.
pub fn max_relative_error(analytic: &[Matrix], fd: &[Matrix]) -> f64 {
    assert_eq!(analytic.len(), fd.len(), "tensor count mismatch");
    let mut worst: f64 = 0.0;
    for (a, f) in analytic.iter().zip(fd) {
        assert_eq!(a.shape(), f.shape(), "tensor shape mismatch");
        for (&av, &fv) in a.iter().zip(f.iter()) {
            worst = worst.max((av - fv).abs() / (av.abs() + 1e-8));
        }
    }
    worst
}
