//! Batch inference and metric computation.

use crate::nn::layers::predict;
use crate::nn::{ModelConfig, ModelParams};
use crate::par;
use crate::pipeline::dataset::Example;
use crate::pipeline::metrics::{self, Metrics};
use crate::{CoreError, Result};

/// Positive-class probability for every example, in corpus order.
pub fn predict_probs(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    examples: &[Example],
) -> Result<Vec<f64>> {
    par::try_map_indexed(examples, |_, ex| predict(params, cfg, &ex.ids))
}

/// Evaluates the model at threshold 0.5. Examples carrying counterfactual
/// ids also contribute a |p − p′| term to the mean counterfactual gap;
/// when none carry one the gap is reported as absent.
pub fn evaluate(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    examples: &[Example],
) -> Result<Metrics> {
    if examples.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let probs = predict_probs(params, cfg, examples)?;
    let gaps: Vec<Option<f64>> = par::try_map_indexed(examples, |i, ex| match &ex.clp_ids {
        Some(cf) if *cf != ex.ids => {
            let p_cf = predict(params, cfg, cf)?;
            Ok(Some((probs[i] - p_cf).abs()))
        }
        Some(_) => Ok(Some(0.0)),
        None => Ok(None),
    })?;
    let present: Vec<f64> = gaps.into_iter().flatten().collect();
    let mean_gap = if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    };
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    Ok(metrics::compute(&labels, &probs, mean_gap))
}
