//! Checkpoint files: model weights plus the config and vocabulary needed
//! to reload them for inference.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"BQCK"
//! u32    format version (currently 1)
//! u64    manifest byte length
//! bytes  manifest: UTF-8 `key=value` lines (config.* and vocab.words)
//! u64    tensor count
//! per tensor:
//!   u32   name length, then the UTF-8 name
//!   u32   rank, then rank u64 dims
//!   f64   payload, row-major
//! ```
//!
//! Weights are stored as raw f64 bits, so save → load is lossless and
//! metrics computed before and after a round trip are identical.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::nn::{ModelConfig, ModelParams};
use crate::pipeline::vocab::Vocab;
use crate::tensor::Tensor;
use crate::{CoreError, Result};

const MAGIC: &[u8; 4] = b"BQCK";
const VERSION: u32 = 1;

fn manifest_string(cfg: &ModelConfig, vocab: &Vocab) -> String {
    let dims: Vec<String> = cfg.mlp_dims.iter().map(|d| d.to_string()).collect();
    let mut s = String::new();
    s.push_str(&format!("config.vocab_size={}\n", cfg.vocab_size));
    s.push_str(&format!("config.embed_dim={}\n", cfg.embed_dim));
    s.push_str(&format!("config.hidden={}\n", cfg.hidden));
    s.push_str(&format!("config.layers={}\n", cfg.layers));
    s.push_str(&format!("config.conv_width={}\n", cfg.conv_width));
    s.push_str(&format!("config.mlp_dims={}\n", dims.join(",")));
    s.push_str(&format!("config.dropout={}\n", cfg.dropout));
    s.push_str(&format!("vocab.words={}\n", vocab.manifest_words()));
    s
}

fn bad(details: impl Into<String>) -> CoreError {
    CoreError::BadCheckpoint(details.into())
}

fn parse_manifest(text: &str) -> Result<(ModelConfig, Vocab)> {
    let mut kv: HashMap<&str, &str> = HashMap::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("manifest line without `=`: {line}")))?;
        kv.insert(k, v);
    }
    let get = |key: &str| -> Result<&str> {
        kv.get(key)
            .copied()
            .ok_or_else(|| bad(format!("manifest missing key {key}")))
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?
            .parse::<usize>()
            .map_err(|_| bad(format!("manifest key {key} is not an integer")))
    };
    let mlp_raw = get("config.mlp_dims")?;
    let mlp_dims = if mlp_raw.is_empty() {
        Vec::new()
    } else {
        mlp_raw
            .split(',')
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| bad(format!("bad mlp dim `{d}`")))
            })
            .collect::<Result<Vec<usize>>>()?
    };
    let dropout = get("config.dropout")?
        .parse::<f64>()
        .map_err(|_| bad("manifest key config.dropout is not a number"))?;
    let cfg = ModelConfig {
        vocab_size: num("config.vocab_size")?,
        embed_dim: num("config.embed_dim")?,
        hidden: num("config.hidden")?,
        layers: num("config.layers")?,
        conv_width: num("config.conv_width")?,
        mlp_dims,
        dropout,
    };
    let vocab = Vocab::from_manifest_words(get("vocab.words")?);
    Ok((cfg, vocab))
}

/// Serializes weights, config and vocabulary into checkpoint bytes.
pub fn to_bytes(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    vocab: &Vocab,
) -> Result<Vec<u8>> {
    if vocab.len() != cfg.vocab_size {
        return Err(bad(format!(
            "vocabulary has {} ids but the config says {}",
            vocab.len(),
            cfg.vocab_size
        )));
    }
    let manifest = manifest_string(cfg, vocab);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    out.extend_from_slice(manifest.as_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for (name, tensor) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
        for &d in tensor.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in tensor.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(bad(format!("truncated while reading {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Inverse of [`to_bytes`].
pub fn from_bytes(bytes: &[u8]) -> Result<(ModelParams<f64>, ModelConfig, Vocab)> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let mlen = cur.u64("manifest length")? as usize;
    let manifest = std::str::from_utf8(cur.take(mlen, "manifest")?)
        .map_err(|_| bad("manifest is not UTF-8"))?;
    let (cfg, vocab) = parse_manifest(manifest)?;
    let count = cur.u64("tensor count")? as usize;
    let mut pairs = Vec::with_capacity(count);
    for i in 0..count {
        let nlen = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(nlen, "tensor name")?)
            .map_err(|_| bad(format!("tensor {i} name is not UTF-8")))?
            .to_string();
        let rank = cur.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u64("dimension")? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = cur.take(numel * 8, "tensor payload")?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pairs.push((name, Tensor::new(shape, data)));
    }
    if cur.pos != bytes.len() {
        return Err(bad(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - cur.pos
        )));
    }
    let params = ModelParams::from_named(pairs)?;
    if vocab.len() != cfg.vocab_size {
        return Err(bad(format!(
            "vocabulary has {} ids but the config says {}",
            vocab.len(),
            cfg.vocab_size
        )));
    }
    cfg.validate()?;
    Ok((params, cfg, vocab))
}

/// Writes a checkpoint file.
pub fn save(
    path: &Path,
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    vocab: &Vocab,
) -> Result<()> {
    let bytes = to_bytes(params, cfg, vocab)?;
    fs::write(path, bytes).map_err(|e| CoreError::io(path, e))
}

/// Reads a checkpoint file.
pub fn load(path: &Path) -> Result<(ModelParams<f64>, ModelConfig, Vocab)> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    from_bytes(&bytes)
}
