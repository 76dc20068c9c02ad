//! Central-finite-difference gradient checking.
//!
//! These helpers never call the reverse-mode sweep; they only re-evaluate a
//! caller-supplied forward closure at perturbed inputs, which is what makes
//! them a trustworthy reference for it.

use crate::tensor::Tensor;

/// Relative error with a unit floor: `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

/// Central difference `(f(x+eps) - f(x-eps)) / (2 eps)` for every element of
/// every leaf. `f` must treat its argument as the full set of leaf values.
pub fn central_diff<F>(mut f: F, leaves: &[Tensor<f64>], eps: f64) -> Vec<Tensor<f64>>
where
    F: FnMut(&[Tensor<f64>]) -> f64,
{
    let mut work: Vec<Tensor<f64>> = leaves.to_vec();
    let mut out = Vec::with_capacity(leaves.len());
    for li in 0..leaves.len() {
        let mut grad = vec![0.0; leaves[li].numel()];
        for ei in 0..leaves[li].numel() {
            grad[ei] = central_diff_at(&mut f, &mut work, li, ei, eps);
        }
        out.push(Tensor::new(leaves[li].shape().to_vec(), grad));
    }
    out
}

/// Central difference at selected `(leaf index, element index)` positions.
pub fn central_diff_sampled<F>(
    mut f: F,
    leaves: &[Tensor<f64>],
    samples: &[(usize, usize)],
    eps: f64,
) -> Vec<f64>
where
    F: FnMut(&[Tensor<f64>]) -> f64,
{
    let mut work: Vec<Tensor<f64>> = leaves.to_vec();
    samples
        .iter()
        .map(|&(li, ei)| central_diff_at(&mut f, &mut work, li, ei, eps))
        .collect()
}

fn central_diff_at<F>(f: &mut F, work: &mut [Tensor<f64>], li: usize, ei: usize, eps: f64) -> f64
where
    F: FnMut(&[Tensor<f64>]) -> f64,
{
    let orig = work[li].data()[ei];
    work[li].data_mut()[ei] = orig + eps;
    let plus = f(work);
    work[li].data_mut()[ei] = orig - eps;
    let minus = f(work);
    work[li].data_mut()[ei] = orig;
    (plus - minus) / (2.0 * eps)
}

/// Largest relative error between matching elements of analytic and numeric
/// gradients, across all leaves.
pub fn max_rel_err(analytic: &[Tensor<f64>], numeric: &[Tensor<f64>]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "leaf count mismatch");
    let mut worst = 0.0_f64;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape(), "gradient shape mismatch");
        for (&av, &nv) in a.data().iter().zip(n.data()) {
            worst = worst.max(rel_err(av, nv));
        }
    }
    worst
}
