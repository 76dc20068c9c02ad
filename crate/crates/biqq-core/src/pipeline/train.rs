//! Minibatch training with per-example autodiff tapes.
//!
//! Each example in a batch builds its own tape (original forward, plus the
//! counterfactual forward when a twin is attached), so batch members run
//! in parallel. Gradients are folded in index order and every random
//! choice draws from a stream keyed on the global seed, which makes runs
//! bit-reproducible whether or not the parallel feature is enabled.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fairness::{make_clp, IdentityLexicon};
use crate::nn::layers::{forward_ids, LoadedParams};
use crate::nn::params::is_bias;
use crate::nn::{ModelConfig, ModelParams};
use crate::objective::{example_data_loss, inverse_frequency_weights, l2_grad_into, LossConfig};
use crate::par;
use crate::pipeline::dataset::Example;
use crate::pipeline::evaluate::evaluate;
use crate::pipeline::vocab::Vocab;
use crate::seeds::{derive_seed, derive_seed_indexed};
use crate::tape::Tape;
use crate::tensor::Tensor;
use crate::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam step size.
    pub lr: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    /// Consecutive epochs without a validation macro-F1 improvement
    /// tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Token truncation length for counterfactual twins.
    pub max_len: usize,
    pub loss: LossConfig,
    /// Reweight classes by inverse frequency of the training labels.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            lr: 1e-3,
            clip_norm: 5.0,
            patience: 5,
            seed: 0,
            max_len: 128,
            loss: LossConfig::default(),
            class_weighting: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoreError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(CoreError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "lr {} must be positive and finite",
                self.lr
            )));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "clip_norm {} must be positive and finite",
                self.clip_norm
            )));
        }
        if self.patience == 0 {
            return Err(CoreError::InvalidConfig("patience must be >= 1".into()));
        }
        if self.max_len == 0 {
            return Err(CoreError::InvalidConfig("max_len must be >= 1".into()));
        }
        self.loss.validate()
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_macro_f1: f64,
    pub val_mcc: f64,
    /// Mean counterfactual gap on validation; absent when no example has
    /// a twin.
    pub val_gap: Option<f64>,
}

/// Renders history as CSV with a fixed header.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut s = String::from("epoch,train_loss,val_acc,val_macF1,val_MCC,val_gap\n");
    for row in history {
        let gap = row.val_gap.map(|g| g.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_acc, row.val_macro_f1, row.val_mcc, gap
        ));
    }
    s
}

pub struct TrainOutput {
    /// Weights from the best validation epoch.
    pub params: ModelParams<f64>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    /// Parameter updates performed (one per batch).
    pub updates: usize,
    pub class_weights: [f64; 2],
}

/// Adam with bias correction, elementwise over the parameter list.
struct Adam {
    m: Vec<Tensor<f64>>,
    v: Vec<Tensor<f64>>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(params: &ModelParams<f64>, lr: f64) -> Self {
        let zeros: Vec<Tensor<f64>> = params
            .names()
            .iter()
            .map(|n| Tensor::zeros(params.get(n).shape().to_vec()))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step(&mut self, params: &mut ModelParams<f64>, grads: &[Tensor<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..grads.len() {
            let g = grads[i].data();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = params.tensor_at_mut(i).data_mut();
            for j in 0..g.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

/// Forward + backward for one example on a fresh tape. Returns the data
/// loss (MSE/NLL blend plus the gap term when a distinct twin is given)
/// and the gradient for every parameter, in parameter order.
pub fn example_grads(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    loss_cfg: &LossConfig,
    ex: &Example,
    dropout_masks: Option<&[Tensor<f64>]>,
) -> Result<(f64, Vec<Tensor<f64>>)> {
    let mut tape: Tape<f64> = Tape::new();
    let lp = LoadedParams::load(&mut tape, params);
    let out = forward_ids(&mut tape, &lp, cfg, &ex.ids, dropout_masks)?;
    let cf = match &ex.clp_ids {
        Some(c) if loss_cfg.lambda > 0.0 && *c != ex.ids => {
            Some(forward_ids(&mut tape, &lp, cfg, c, dropout_masks)?.prob)
        }
        _ => None,
    };
    let loss = example_data_loss(&mut tape, out.prob, cf, ex.label, loss_cfg)?;
    let grads = tape.backward(loss)?;
    let gvec = params
        .names()
        .iter()
        .map(|n| grads.get_or_zeros(lp.id(n), params.get(n).shape()))
        .collect();
    Ok((tape.value(loss).item(), gvec))
}

fn attach_clp(
    examples: &mut [Example],
    lex: &IdentityLexicon,
    vocab: &Vocab,
    seed: u64,
    stream: &str,
    max_len: usize,
) {
    for ex in examples.iter_mut() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed_indexed(seed, stream, ex.id as u64));
        let swapped = make_clp(&ex.tokens, lex, &mut rng);
        let mut ids = vocab.encode(&swapped);
        ids.truncate(max_len);
        ex.clp_ids = Some(ids);
    }
}

fn dropout_masks_for(
    cfg: &ModelConfig,
    n_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Tensor<f64>> {
    let keep = 1.0 - cfg.dropout;
    let width = cfg.stack_out_dim();
    (0..cfg.layers)
        .map(|_| {
            let data = (0..n_steps * width)
                .map(|_| {
                    if rng.gen::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect();
            Tensor::matrix(n_steps, width, data)
        })
        .collect()
}

/// Trains on encoded examples and returns the weights from the best
/// validation epoch. The caller persists checkpoints and history.
///
/// When an identity lexicon is given, validation twins are generated once
/// (fixed stream, so runs differing only in the gap weight stay
/// comparable) and training twins are resampled every epoch.
pub fn train(
    cfg: &ModelConfig,
    tc: &TrainConfig,
    train_set: &[Example],
    val_set: &[Example],
    identity: Option<&IdentityLexicon>,
    vocab: &Vocab,
) -> Result<TrainOutput> {
    cfg.validate()?;
    tc.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    for ex in train_set.iter().chain(val_set) {
        if ex.ids.is_empty() {
            return Err(CoreError::InvalidConfig(format!(
                "example {} has no token ids; encode the corpus first",
                ex.id
            )));
        }
        if let Some(&max) = ex.ids.iter().max() {
            if max >= cfg.vocab_size {
                return Err(CoreError::IdOutOfRange {
                    id: max,
                    vocab: cfg.vocab_size,
                });
            }
        }
    }

    let mut loss_cfg = tc.loss.clone();
    if tc.class_weighting {
        let labels: Vec<u8> = train_set.iter().map(|e| e.label).collect();
        loss_cfg.class_weights = inverse_frequency_weights(&labels)?;
    }

    let mut working: Vec<Example> = train_set.to_vec();
    let mut val: Vec<Example> = val_set.to_vec();
    let use_clp = identity.map(|l| !l.is_empty()).unwrap_or(false);
    if use_clp {
        attach_clp(&mut val, identity.unwrap(), vocab, tc.seed, "clp:val", tc.max_len);
    }

    let mut params = ModelParams::init(cfg, derive_seed(tc.seed, "init"))?;
    let mut adam = Adam::new(&params, tc.lr);
    let names: Vec<String> = params.names().to_vec();
    let embed_idx = names.iter().position(|n| n == "embed");

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams<f64>)> = None;
    let mut bad_epochs = 0;
    let mut updates = 0;

    for epoch in 1..=tc.epochs {
        if use_clp && loss_cfg.lambda > 0.0 {
            let stream = format!("clp:{epoch}");
            attach_clp(&mut working, identity.unwrap(), vocab, tc.seed, &stream, tc.max_len);
        }

        let mut order: Vec<usize> = (0..working.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed_indexed(tc.seed, "batches", epoch as u64));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut n_batches = 0;
        for chunk in order.chunks(tc.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &working[i]).collect();
            let masks: Vec<Option<Vec<Tensor<f64>>>> = if cfg.dropout > 0.0 {
                batch
                    .iter()
                    .map(|ex| {
                        let mut r = ChaCha8Rng::seed_from_u64(derive_seed_indexed(
                            tc.seed,
                            &format!("dropout:{epoch}"),
                            ex.id as u64,
                        ));
                        Some(dropout_masks_for(cfg, ex.ids.len(), &mut r))
                    })
                    .collect()
            } else {
                vec![None; batch.len()]
            };
            let results: Vec<(f64, Vec<Tensor<f64>>)> =
                par::try_map_indexed(&batch, |i, ex| {
                    example_grads(&params, cfg, &loss_cfg, ex, masks[i].as_deref())
                })?;

            let mut acc: Vec<Tensor<f64>> = names
                .iter()
                .map(|n| Tensor::zeros(params.get(n).shape().to_vec()))
                .collect();
            let mut data_loss = 0.0;
            for (l, gs) in &results {
                data_loss += l;
                for (a, g) in acc.iter_mut().zip(gs) {
                    a.add_assign(g);
                }
            }
            let scale = if loss_cfg.mean_reduce {
                1.0 / batch.len() as f64
            } else {
                1.0
            };
            for a in acc.iter_mut() {
                a.scale_assign(scale);
            }
            let l2_sum = params.l2_sum();
            if loss_cfg.omega != 0.0 {
                for (i, n) in names.iter().enumerate() {
                    if !is_bias(n) {
                        l2_grad_into(&mut acc[i], params.get(n), loss_cfg.omega);
                    }
                }
            }
            if let Some(ei) = embed_idx {
                let cols = cfg.embed_dim;
                for x in &mut acc[ei].data_mut()[..cols] {
                    *x = 0.0;
                }
            }
            let norm2: f64 = acc
                .iter()
                .map(|t| t.data().iter().map(|&x| x * x).sum::<f64>())
                .sum();
            let norm = norm2.sqrt();
            if norm > tc.clip_norm {
                let s = tc.clip_norm / norm;
                for a in acc.iter_mut() {
                    a.scale_assign(s);
                }
            }
            adam.step(&mut params, &acc);
            updates += 1;
            n_batches += 1;
            epoch_loss += data_loss * scale + loss_cfg.omega * l2_sum;
        }
        let train_loss = epoch_loss / n_batches as f64;

        let m = evaluate(&params, cfg, &val)?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_acc: m.accuracy,
            val_macro_f1: m.macro_f1,
            val_mcc: m.mcc,
            val_gap: m.mean_clp_gap,
        });

        let improved = best
            .as_ref()
            .map(|(f1, _, _)| m.macro_f1 > *f1)
            .unwrap_or(true);
        if improved {
            best = Some((m.macro_f1, epoch, params.clone()));
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= tc.patience {
                break;
            }
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutput {
        params: best_params,
        history,
        best_epoch,
        updates,
        class_weights: loss_cfg.class_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::loss_value;
    use crate::pipeline::dataset::{build_examples, encode_examples};

    fn tiny_cfg(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: 8,
            hidden: 2,
            layers: 1,
            conv_width: 2,
            mlp_dims: vec![4],
            dropout: 0.0,
        }
    }

    fn tiny_corpus() -> (Vec<Example>, Vec<Example>, Vocab) {
        let records: Vec<(u8, String)> = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    (1u8, format!("angry shout number {i} fills the room"))
                } else {
                    (0u8, format!("calm morning number {i} by the lake"))
                }
            })
            .collect();
        let mut examples = build_examples(&records);
        let lists: Vec<Vec<String>> = examples.iter().map(|e| e.tokens.clone()).collect();
        let vocab = Vocab::from_corpus(lists.iter().map(Vec::as_slice), 1);
        encode_examples(&mut examples, &vocab, 16);
        let val = examples.split_off(8);
        (examples, val, vocab)
    }

    fn tiny_tc(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 4,
            seed: 11,
            patience: 50,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut tc = TrainConfig::default();
        tc.lr = 0.0;
        assert!(tc.validate().is_err());
        let mut tc = TrainConfig::default();
        tc.loss.gamma = 1.5;
        assert!(tc.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn one_epoch_performs_one_update_per_batch() {
        let (train_set, val, vocab) = tiny_corpus();
        let cfg = tiny_cfg(vocab.len());
        let out = train(&cfg, &tiny_tc(1), &train_set, &val, None, &vocab).unwrap();
        // 8 examples / batch 4 = 2 batches.
        assert_eq!(out.updates, 2);
        assert_eq!(out.history.len(), 1);
        let out3 = train(&cfg, &tiny_tc(3), &train_set, &val, None, &vocab).unwrap();
        assert_eq!(out3.updates, 6);
    }

    #[test]
    fn training_is_deterministic_under_a_seed() {
        let (train_set, val, vocab) = tiny_corpus();
        let cfg = tiny_cfg(vocab.len());
        let a = train(&cfg, &tiny_tc(2), &train_set, &val, None, &vocab).unwrap();
        let b = train(&cfg, &tiny_tc(2), &train_set, &val, None, &vocab).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(history_csv(&a.history), history_csv(&b.history));
        for (i, n) in a.params.names().iter().enumerate() {
            assert_eq!(
                a.params.get(n).data(),
                b.params.tensor_at(i).data(),
                "parameter {n} differs between identical runs"
            );
        }
    }

    #[test]
    fn batch_gradient_step_moves_the_reported_loss_down() {
        let (train_set, val, vocab) = tiny_corpus();
        let cfg = tiny_cfg(vocab.len());
        let mut tc = tiny_tc(6);
        tc.lr = 5e-3;
        let out = train(&cfg, &tc, &train_set, &val, None, &vocab).unwrap();
        let first = out.history.first().unwrap().train_loss;
        let last = out.history.last().unwrap().train_loss;
        assert!(
            last < first,
            "loss failed to decrease: {first} -> {last}"
        );
    }

    #[test]
    fn reported_example_loss_matches_scalar_reference() {
        let (train_set, _, vocab) = tiny_corpus();
        let cfg = tiny_cfg(vocab.len());
        let params = ModelParams::init(&cfg, 5).unwrap();
        let loss_cfg = LossConfig {
            mean_reduce: false,
            ..LossConfig::default()
        };
        let ex = &train_set[0];
        let (l, _) = example_grads(&params, &cfg, &loss_cfg, ex, None).unwrap();
        let p = crate::nn::layers::predict(&params, &cfg, &ex.ids).unwrap();
        let reference =
            loss_value(&[p], &[p], &[ex.label], 0.0, &loss_cfg).unwrap();
        assert!((l - reference).abs() < 1e-12, "{l} vs {reference}");
    }

    #[test]
    fn early_stopping_respects_patience() {
        let (train_set, val, vocab) = tiny_corpus();
        let cfg = tiny_cfg(vocab.len());
        let mut tc = tiny_tc(30);
        // Zero step size: metrics never improve after the first epoch.
        tc.lr = 1e-30;
        tc.patience = 2;
        let out = train(&cfg, &tc, &train_set, &val, None, &vocab).unwrap();
        assert_eq!(out.history.len(), 3, "1 best epoch + 2 bad epochs");
        assert_eq!(out.best_epoch, 1);
    }

    #[test]
    fn counterfactual_twins_are_attached_when_lexicon_given() {
        let (mut train_set, mut val, _) = tiny_corpus();
        // Rebuild vocab with identity terms included so twins encode
        // to different ids.
        for (i, ex) in train_set.iter_mut().enumerate() {
            let term = if i % 2 == 0 { "norlander" } else { "sudrian" };
            ex.tokens.push(term.to_string());
        }
        for ex in val.iter_mut() {
            ex.tokens.push("norlander".to_string());
        }
        let lists: Vec<Vec<String>> = train_set
            .iter()
            .chain(val.iter())
            .map(|e| e.tokens.clone())
            .collect();
        let vocab = Vocab::from_corpus(lists.iter().map(Vec::as_slice), 1);
        encode_examples(&mut train_set, &vocab, 16);
        encode_examples(&mut val, &vocab, 16);
        let cfg = tiny_cfg(vocab.len());
        let lex = IdentityLexicon::from_groups(vec![vec![
            "norlander".to_string(),
            "sudrian".to_string(),
        ]])
        .unwrap();
        let out = train(&cfg, &tiny_tc(1), &train_set, &val, Some(&lex), &vocab).unwrap();
        let gap = out.history[0].val_gap;
        assert!(gap.is_some(), "validation gap missing despite identity terms");
        assert!(gap.unwrap() > 0.0);
    }

    #[test]
    fn history_csv_has_header_and_rows() {
        let rows = vec![EpochStats {
            epoch: 1,
            train_loss: 0.5,
            val_acc: 0.75,
            val_macro_f1: 0.7,
            val_mcc: 0.4,
            val_gap: None,
        }];
        let csv = history_csv(&rows);
        assert!(csv.starts_with("epoch,train_loss,val_acc,val_macF1,val_MCC,val_gap\n"));
        assert!(csv.lines().count() == 2);
        assert!(csv.contains("1,0.5,0.75,0.7,0.4,"));
    }
}
