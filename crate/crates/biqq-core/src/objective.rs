//! Composite training objective: an uncertainty blend of weighted MSE and
//! weighted NLL, an L1 gap penalty between each prediction and its
//! counterfactual twin, and L2 weight decay.
//!
//! `L = gamma * sum_k w_k (y_k - p_k)^2
//!    + (1 - gamma) * sum_k -w_k log q_k
//!    + lambda * sum_k |p_k - p'_k|
//!    + omega * sum_l ||W_l||^2`
//!
//! where `q_k` is the probability assigned to example k's true class and
//! `w_k` the weight of that class. With mean reduction (the default) the
//! three batch sums are divided by the batch size; the L2 term never is.

use crate::error::{CoreError, Result};
use crate::tape::{NodeId, Tape};
use crate::tensor::{Real, Tensor};

pub const PROB_CLAMP: f64 = 1e-7;
const PROB_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct LossConfig {
    /// Blend between MSE (1.0) and NLL (0.0).
    pub gamma: f64,
    /// Weight of the counterfactual gap term.
    pub lambda: f64,
    /// L2 coefficient.
    pub omega: f64,
    /// Per-class weights, indexed by label.
    pub class_weights: [f64; 2],
    /// Divide the batch sums (not the L2 term) by the batch size.
    pub mean_reduce: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            gamma: 0.5,
            lambda: 0.5,
            omega: 0.0,
            class_weights: [1.0, 1.0],
            mean_reduce: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::InvalidConfig(format!(
                "gamma {} must lie in [0, 1]",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(CoreError::InvalidConfig(format!(
                "lambda {} must lie in [0, 1]",
                self.lambda
            )));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "omega {} must be finite and >= 0",
                self.omega
            )));
        }
        for w in self.class_weights {
            if !(w > 0.0) || !w.is_finite() {
                return Err(CoreError::InvalidConfig(format!(
                    "class weight {w} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

fn check_prob(p: f64) -> Result<f64> {
    if !(p >= -PROB_SLACK && p <= 1.0 + PROB_SLACK) {
        return Err(CoreError::BadProbability(p));
    }
    Ok(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
}

/// Scalar reference evaluation of the full objective over a batch.
/// `l2_sum` should come from [`crate::nn::params::ModelParams::l2_sum`].
pub fn loss_value(
    yhat: &[f64],
    yhat_cf: &[f64],
    labels: &[u8],
    l2_sum: f64,
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    if yhat.len() != labels.len() || yhat_cf.len() != labels.len() {
        return Err(CoreError::ShapeMismatch {
            op: "loss",
            details: format!(
                "batch lengths {}/{}/{}",
                yhat.len(),
                yhat_cf.len(),
                labels.len()
            ),
        });
    }
    if yhat.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let mut mse = 0.0;
    let mut nll = 0.0;
    let mut gap = 0.0;
    for ((&p_raw, &pc_raw), &y) in yhat.iter().zip(yhat_cf).zip(labels) {
        let p = check_prob(p_raw)?;
        let pc = check_prob(pc_raw)?;
        let w = cfg.class_weights[y as usize];
        let target = y as f64;
        mse += w * (target - p) * (target - p);
        let q = if y == 1 { p } else { 1.0 - p };
        nll += -w * q.ln();
        gap += (p - pc).abs();
    }
    let scale = if cfg.mean_reduce {
        1.0 / yhat.len() as f64
    } else {
        1.0
    };
    Ok(scale * (cfg.gamma * mse + (1.0 - cfg.gamma) * nll + cfg.lambda * gap) + cfg.omega * l2_sum)
}

/// Clamp to `[lo, hi]` built from relu pieces:
/// `lo + relu(x - lo) - relu(x - hi)`. Exact forward, zero gradient
/// outside the band, identity gradient inside.
fn clamp_unit<T: Real>(tape: &mut Tape<T>, x: NodeId, lo: f64, hi: f64) -> Result<NodeId> {
    let shape = tape.value(x).shape().to_vec();
    let n = tape.value(x).numel();
    let lo_leaf = tape.leaf(Tensor::new(shape.clone(), vec![T::from_f64(lo); n]));
    let hi_leaf = tape.leaf(Tensor::new(shape, vec![T::from_f64(hi); n]));
    let over_lo = tape.sub(x, lo_leaf)?;
    let over_lo = tape.relu(over_lo)?;
    let over_hi = tape.sub(x, hi_leaf)?;
    let over_hi = tape.relu(over_hi)?;
    let body = tape.sub(over_lo, over_hi)?;
    tape.add(lo_leaf, body)
}

/// Tape graph of one example's data terms (MSE blend, NLL blend, gap).
/// The L2 term is handled outside the per-example tapes: its value is
/// `omega * l2_sum` and its gradient `2 * omega * W`, both added by the
/// trainer after batch reduction. Returns a scalar node.
pub fn example_data_loss<T: Real>(
    tape: &mut Tape<T>,
    yhat: NodeId,
    yhat_cf: Option<NodeId>,
    label: u8,
    cfg: &LossConfig,
) -> Result<NodeId> {
    cfg.validate()?;
    check_prob(Real::to_f64(tape.value(yhat).item()))?;
    if let Some(cf) = yhat_cf {
        check_prob(Real::to_f64(tape.value(cf).item()))?;
    }
    let w = cfg.class_weights[label as usize];
    let p = clamp_unit(tape, yhat, PROB_CLAMP, 1.0 - PROB_CLAMP)?;

    let target = tape.leaf(Tensor::new(
        tape.value(p).shape().to_vec(),
        vec![T::from_f64(label as f64)],
    ));
    let diff = tape.sub(target, p)?;
    let sq = tape.mul(diff, diff)?;
    let mse = tape.sum_all(sq)?;

    let q = if label == 1 {
        p
    } else {
        let one = tape.leaf(Tensor::new(
            tape.value(p).shape().to_vec(),
            vec![T::one()],
        ));
        tape.sub(one, p)?
    };
    let logq = tape.log(q)?;
    let nll_raw = tape.sum_all(logq)?;
    let nll = tape.neg(nll_raw)?;

    let mse_term = tape.scale(mse, T::from_f64(cfg.gamma * w))?;
    let nll_term = tape.scale(nll, T::from_f64((1.0 - cfg.gamma) * w))?;
    let mut total = tape.add(mse_term, nll_term)?;

    if let Some(cf) = yhat_cf {
        let pc = clamp_unit(tape, cf, PROB_CLAMP, 1.0 - PROB_CLAMP)?;
        let d = tape.sub(p, pc)?;
        let gap = tape.l1(d)?;
        let gap_term = tape.scale(gap, T::from_f64(cfg.lambda))?;
        total = tape.add(total, gap_term)?;
    }
    Ok(total)
}

/// L2 gradient contribution for one weight tensor: `2 * omega * W`, with
/// the embedding's padding row left untouched (it is frozen at zero, so
/// its contribution is identically zero anyway).
pub fn l2_grad_into<T: Real>(grad: &mut Tensor<T>, weights: &Tensor<T>, omega: f64) {
    let c = T::from_f64(2.0 * omega);
    for (g, &w) in grad.data_mut().iter_mut().zip(weights.data()) {
        *g = *g + c * w;
    }
}

/// Inverse-class-frequency weights, normalized so they average to 1 over
/// the training distribution.
pub fn inverse_frequency_weights(labels: &[u8]) -> Result<[f64; 2]> {
    if labels.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        // Single-class corpus: weighting cannot help, fall back to 1.
        return Ok([1.0, 1.0]);
    }
    let n = labels.len() as f64;
    Ok([n / (2.0 * neg as f64), n / (2.0 * pos as f64)])
}
