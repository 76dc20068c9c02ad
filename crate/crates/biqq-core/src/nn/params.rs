use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::nn::config::ModelConfig;
use crate::seeds::derive_seed;
use crate::tensor::{Real, Tensor};
use crate::PAD_ID;

pub const GATES: [&str; 4] = ["f", "o", "i", "z"];
pub const DIRECTIONS: [&str; 2] = ["fwd", "rev"];
pub const COMPONENTS: [&str; 4] = ["r", "x", "y", "z"];

/// Named parameter tensors in a stable insertion order. Order matters: it
/// fixes initialization draws, checkpoint layout and optimizer-state
/// alignment.
#[derive(Clone, Debug)]
pub struct ModelParams<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

pub fn gate_weight_name(layer: usize, dir: &str, gate: &str, tap: usize, comp: &str) -> String {
    format!("l{layer}.{dir}.{gate}.t{tap}.{comp}")
}

pub fn gate_bias_name(layer: usize, dir: &str, gate: &str) -> String {
    format!("l{layer}.{dir}.{gate}.b")
}

/// Biases are exempt from L2 and from the parameter-reduction accounting.
pub fn is_bias(name: &str) -> bool {
    name.ends_with(".b")
}

impl<T: Real> ModelParams<T> {
    pub fn new() -> Self {
        ModelParams {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(CoreError::InvalidConfig(format!(
                "duplicate parameter name {name}"
            )));
        }
        self.index.insert(name.clone(), self.tensors.len());
        self.names.push(name);
        self.tensors.push(tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> &Tensor<T> {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor<T> {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &mut self.tensors[i]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensor_at(&self, i: usize) -> &Tensor<T> {
        &self.tensors[i]
    }

    pub fn tensor_at_mut(&mut self, i: usize) -> &mut Tensor<T> {
        &mut self.tensors[i]
    }

    pub fn from_named(pairs: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let mut p = ModelParams::new();
        for (name, t) in pairs {
            p.insert(name, t)?;
        }
        Ok(p)
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (name, t) in self.iter() {
            if t.data().iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidConfig(format!(
                    "parameter {name} contains a non-finite value"
                )));
            }
        }
        Ok(())
    }

    pub fn total_params(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Parameter count excluding biases (the regularized set).
    pub fn weight_params(&self) -> usize {
        self.iter()
            .filter(|(n, _)| !is_bias(n))
            .map(|(_, t)| t.numel())
            .sum()
    }

    /// Sum of squared weight entries: every non-bias tensor, minus the
    /// frozen padding row of the embedding.
    pub fn l2_sum(&self) -> f64 {
        let mut total = 0.0;
        for (name, t) in self.iter() {
            if is_bias(name) {
                continue;
            }
            let skip = if name == "embed" {
                let d = t.shape()[1];
                (PAD_ID * d, (PAD_ID + 1) * d)
            } else {
                (0, 0)
            };
            for (i, &v) in t.data().iter().enumerate() {
                if i >= skip.0 && i < skip.1 {
                    continue;
                }
                let v = Real::to_f64(v);
                total += v * v;
            }
        }
        total
    }

    /// Fresh parameters for `cfg`, drawn from a seeded generator.
    /// Quaternion kernels use uniform draws scaled by the reciprocal
    /// square root of the fan-in in quaternion units; biases start at zero
    /// except the forget gate's, which starts at +1 so early training
    /// carries state.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "init"));
        let mut p = ModelParams::new();

        let d = cfg.embed_dim;
        let mut emb = uniform(&mut rng, vec![cfg.vocab_size, d], 1.0 / (d as f64).sqrt());
        for v in emb.data_mut()[PAD_ID * d..(PAD_ID + 1) * d].iter_mut() {
            *v = T::zero();
        }
        p.insert("embed", emb)?;

        let h = cfg.hidden;
        for layer in 0..cfg.layers {
            let a = cfg.in_units(layer);
            let scale = 1.0 / ((cfg.conv_width * a) as f64).sqrt();
            for dir in DIRECTIONS {
                for gate in GATES {
                    for tap in 0..cfg.conv_width {
                        for comp in COMPONENTS {
                            p.insert(
                                gate_weight_name(layer, dir, gate, tap, comp),
                                uniform(&mut rng, vec![a, h], scale),
                            )?;
                        }
                    }
                    let mut b = Tensor::zeros(vec![4 * h]);
                    if gate == "f" {
                        for v in b.data_mut() {
                            *v = T::one();
                        }
                    }
                    p.insert(gate_bias_name(layer, dir, gate), b)?;
                }
            }
        }

        let dd = cfg.stack_out_dim();
        let aa = cfg.attn_dim();
        p.insert(
            "attn.w",
            uniform(&mut rng, vec![dd, aa], 1.0 / (dd as f64).sqrt()),
        )?;
        p.insert(
            "attn.v",
            uniform(&mut rng, vec![aa, 1], 1.0 / (aa as f64).sqrt()),
        )?;

        let mut prev = cfg.pooled_dim();
        for (i, &m) in cfg.mlp_dims.iter().enumerate() {
            p.insert(
                format!("mlp.{i}.w"),
                uniform(&mut rng, vec![prev, m], 1.0 / (prev as f64).sqrt()),
            )?;
            p.insert(format!("mlp.{i}.b"), Tensor::zeros(vec![m]))?;
            prev = m;
        }
        let last = cfg.mlp_dims.len();
        p.insert(
            format!("mlp.{last}.w"),
            uniform(&mut rng, vec![prev, 1], 1.0 / (prev as f64).sqrt()),
        )?;
        p.insert(format!("mlp.{last}.b"), Tensor::zeros(vec![1]))?;

        Ok(p)
    }
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn uniform<T: Real>(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f64) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64(rng.gen_range(-scale..scale)))
        .collect();
    Tensor::new(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            vocab_size: 10,
            embed_dim: 8,
            hidden: 2,
            layers: 1,
            conv_width: 2,
            mlp_dims: vec![6],
            dropout: 0.0,
        }
    }

    #[test]
    fn init_is_deterministic_and_pad_row_zero() {
        let a: ModelParams<f64> = ModelParams::init(&tiny(), 42).unwrap();
        let b: ModelParams<f64> = ModelParams::init(&tiny(), 42).unwrap();
        assert_eq!(a.names(), b.names());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.1.data(), y.1.data());
        }
        let emb = a.get("embed");
        assert!(emb.row(PAD_ID).iter().all(|&v| v == 0.0));
        let c: ModelParams<f64> = ModelParams::init(&tiny(), 43).unwrap();
        assert_ne!(a.get("embed").data(), c.get("embed").data());
    }

    #[test]
    fn forget_bias_is_one_other_biases_zero() {
        let p: ModelParams<f64> = ModelParams::init(&tiny(), 1).unwrap();
        assert!(p.get("l0.fwd.f.b").data().iter().all(|&v| v == 1.0));
        assert!(p.get("l0.fwd.i.b").data().iter().all(|&v| v == 0.0));
        assert!(p.get("l0.rev.z.b").data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut p: ModelParams<f64> = ModelParams::new();
        p.insert("w", Tensor::zeros(vec![1])).unwrap();
        assert!(p.insert("w", Tensor::zeros(vec![1])).is_err());
    }

    #[test]
    fn l2_excludes_biases_and_pad_row() {
        let mut p: ModelParams<f64> = ModelParams::new();
        // Row PAD_ID = 0 would contribute 4 * 81 if it were counted.
        let emb = Tensor::matrix(2, 4, vec![9.0, 9.0, 9.0, 9.0, 1.0, 2.0, 0.0, 0.0]);
        p.insert("embed", emb).unwrap();
        p.insert("mlp.0.w", Tensor::vector(vec![3.0])).unwrap();
        p.insert("mlp.0.b", Tensor::vector(vec![7.0])).unwrap();
        assert_eq!(p.l2_sum(), 1.0 + 4.0 + 9.0);
    }
}
