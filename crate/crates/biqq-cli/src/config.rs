//! Plain-text `key = value` configuration with dotted section names
//! (`model.hidden`, `loss.gamma`). Precedence, lowest to highest:
//! built-in defaults, the `BIQQ_SEED` environment variable (seed only),
//! the `--config` file, `--set` overrides in the order given, `--seed`.

use std::fmt::Write as _;
use std::path::Path;

use biqq_core::nn::ModelConfig;
use biqq_core::objective::LossConfig;
use biqq_core::pipeline::train::TrainConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Cfg {
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub conv_width: usize,
    pub mlp_dims: Vec<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub clip_norm: f64,
    pub patience: usize,
    pub max_len: usize,
    pub min_freq: usize,
    pub class_weighting: bool,
    /// Target hate fraction for seeded training-split subsampling.
    pub hate_ratio: Option<f64>,
    pub gamma: f64,
    pub lambda: f64,
    pub omega: f64,
}

impl Default for Cfg {
    fn default() -> Self {
        let tc = TrainConfig::default();
        let loss = LossConfig::default();
        Cfg {
            seed: 0,
            embed_dim: 32,
            hidden: 24,
            layers: 1,
            conv_width: 2,
            mlp_dims: vec![32],
            dropout: 0.0,
            epochs: tc.epochs,
            batch_size: tc.batch_size,
            lr: tc.lr,
            clip_norm: tc.clip_norm,
            patience: tc.patience,
            max_len: tc.max_len,
            min_freq: 2,
            class_weighting: tc.class_weighting,
            hate_ratio: None,
            gamma: loss.gamma,
            lambda: loss.lambda,
            omega: loss.omega,
        }
    }
}

fn bad_value(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Config(format!(
        "config key `{key}`: cannot parse `{value}` as {expected}"
    ))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, expected: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad_value(key, value, expected))
}

impl Cfg {
    /// Applies one dotted-key assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, value, "an unsigned integer")?,
            "model.embed_dim" => self.embed_dim = parse_num(key, value, "an unsigned integer")?,
            "model.hidden" | "model.h" => {
                self.hidden = parse_num(key, value, "an unsigned integer")?
            }
            "model.layers" => self.layers = parse_num(key, value, "an unsigned integer")?,
            "model.conv_width" => {
                self.conv_width = parse_num(key, value, "an unsigned integer")?
            }
            "model.mlp_dims" => {
                let mut dims = Vec::new();
                for part in value.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    dims.push(parse_num(key, part, "a comma list of unsigned integers")?);
                }
                self.mlp_dims = dims;
            }
            "model.dropout" => self.dropout = parse_num(key, value, "a number")?,
            "train.epochs" => self.epochs = parse_num(key, value, "an unsigned integer")?,
            "train.batch_size" => {
                self.batch_size = parse_num(key, value, "an unsigned integer")?
            }
            "train.lr" => self.lr = parse_num(key, value, "a number")?,
            "train.clip_norm" => self.clip_norm = parse_num(key, value, "a number")?,
            "train.patience" => self.patience = parse_num(key, value, "an unsigned integer")?,
            "train.max_len" => self.max_len = parse_num(key, value, "an unsigned integer")?,
            "train.min_freq" => self.min_freq = parse_num(key, value, "an unsigned integer")?,
            "train.class_weighting" => {
                self.class_weighting = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad_value(key, value, "true or false")),
                }
            }
            "train.hate_ratio" => {
                self.hate_ratio = if value == "none" {
                    None
                } else {
                    Some(parse_num(key, value, "a number or `none`")?)
                }
            }
            "loss.gamma" => self.gamma = parse_num(key, value, "a number")?,
            "loss.lambda" => self.lambda = parse_num(key, value, "a number")?,
            "loss.omega" => self.omega = parse_num(key, value, "a number")?,
            other => {
                return Err(CliError::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let body = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        for (lineno, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key, value).map_err(|e| {
                CliError::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    /// Builds the fully resolved configuration for one invocation.
    pub fn resolve(
        config: Option<&Path>,
        sets: &[String],
        seed_flag: Option<u64>,
    ) -> Result<Cfg> {
        let mut cfg = Cfg::default();
        if let Ok(s) = std::env::var("BIQQ_SEED") {
            cfg.seed = s.trim().parse().map_err(|_| {
                CliError::Config(format!("BIQQ_SEED must be an unsigned integer, got `{s}`"))
            })?;
        }
        if let Some(path) = config {
            cfg.apply_file(path)?;
        }
        for kv in sets {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`"))
            })?;
            cfg.set(key, value)?;
        }
        if let Some(seed) = seed_flag {
            cfg.seed = seed;
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Cross-field validation, run before any data is touched.
    fn check(&self) -> Result<()> {
        let conf = |e: biqq_core::CoreError| CliError::Config(e.to_string());
        // A placeholder vocabulary size: only the architecture fields are
        // being validated here.
        self.model_config(8).validate().map_err(conf)?;
        self.train_config().validate().map_err(conf)?;
        if self.min_freq == 0 {
            return Err(CliError::Config("train.min_freq must be >= 1".into()));
        }
        if let Some(r) = self.hate_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(CliError::Config(format!(
                    "train.hate_ratio {r} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(())
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden: self.hidden,
            layers: self.layers,
            conv_width: self.conv_width,
            mlp_dims: self.mlp_dims.clone(),
            dropout: self.dropout,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            gamma: self.gamma,
            lambda: self.lambda,
            omega: self.omega,
            ..LossConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            clip_norm: self.clip_norm,
            patience: self.patience,
            seed: self.seed,
            max_len: self.max_len,
            loss: self.loss_config(),
            class_weighting: self.class_weighting,
        }
    }

    /// Canonical `key = value` rendering of every setting.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("seed", self.seed.to_string());
        line("model.embed_dim", self.embed_dim.to_string());
        line("model.hidden", self.hidden.to_string());
        line("model.layers", self.layers.to_string());
        line("model.conv_width", self.conv_width.to_string());
        line(
            "model.mlp_dims",
            self.mlp_dims
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        line("model.dropout", self.dropout.to_string());
        line("train.epochs", self.epochs.to_string());
        line("train.batch_size", self.batch_size.to_string());
        line("train.lr", self.lr.to_string());
        line("train.clip_norm", self.clip_norm.to_string());
        line("train.patience", self.patience.to_string());
        line("train.max_len", self.max_len.to_string());
        line("train.min_freq", self.min_freq.to_string());
        line("train.class_weighting", self.class_weighting.to_string());
        line(
            "train.hate_ratio",
            self.hate_ratio.map_or("none".into(), |r| r.to_string()),
        );
        line("loss.gamma", self.gamma.to_string());
        line("loss.lambda", self.lambda.to_string());
        line("loss.omega", self.omega.to_string());
        s
    }
}
