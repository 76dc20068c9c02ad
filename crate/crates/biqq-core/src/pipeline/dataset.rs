//! TSV corpus loading, preprocessing, length filtering, and seeded
//! splitting.
//!
//! Corpus files are UTF-8 TSV with one `label<TAB>text` record per line,
//! label 0 (legitimate) or 1 (hate). Splitting shuffles a copy with a
//! stream-derived seed and cuts 80/10/10, so the same seed always yields
//! the same partition.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pipeline::preprocess::{preprocess, tokenize};
use crate::pipeline::vocab::Vocab;
use crate::seeds::derive_seed;
use crate::{CoreError, Result};

/// Token count an example must exceed to stay in the corpus.
pub const MIN_TOKENS: usize = 3;

/// Default truncation length, in tokens.
pub const DEFAULT_MAX_LEN: usize = 128;

/// One labeled text with its processed views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    /// Stable corpus-wide id.
    pub id: usize,
    /// 0 = legitimate, 1 = hate.
    pub label: u8,
    /// Text as loaded (pre-preprocessing).
    pub raw: String,
    /// Preprocessed tokens.
    pub tokens: Vec<String>,
    /// Token ids under the active vocabulary; empty until encoded.
    pub ids: Vec<usize>,
    /// Ids of the identity-swapped counterfactual twin, when one has been
    /// generated for training.
    pub clp_ids: Option<Vec<usize>>,
    /// Provenance tag: `None` for corpus originals, the augmenter method
    /// name for generated examples.
    pub source: Option<String>,
    /// Id of the example this one was derived from; equals `id` for
    /// originals.
    pub origin_id: usize,
}

impl Example {
    /// Builds an example by preprocessing raw text.
    pub fn new(id: usize, label: u8, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let clean = preprocess(&raw);
        let tokens = tokenize(&clean);
        Example {
            id,
            label,
            raw,
            tokens,
            ids: Vec::new(),
            clp_ids: None,
            source: None,
            origin_id: id,
        }
    }
}

/// Reads `label<TAB>text` records. Blank lines are skipped; anything else
/// malformed is an error naming the file and 1-based line number.
pub fn read_tsv(path: &Path) -> Result<Vec<(u8, String)>> {
    let body = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    parse_tsv(&body, &path.display().to_string())
}

/// Parses TSV text already in memory; `name` labels errors.
pub fn parse_tsv(body: &str, name: &str) -> Result<Vec<(u8, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label_str, text) = line.split_once('\t').ok_or_else(|| CoreError::Parse {
            path: name.to_string(),
            details: format!("line {}: expected label<TAB>text", lineno + 1),
        })?;
        let label = match label_str.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CoreError::Parse {
                    path: name.to_string(),
                    details: format!("line {}: label `{other}` is not 0 or 1", lineno + 1),
                })
            }
        };
        out.push((label, text.to_string()));
    }
    Ok(out)
}

/// Writes records in the same `label<TAB>text` format `read_tsv` accepts.
pub fn write_tsv(path: &Path, records: &[(u8, String)]) -> Result<()> {
    let mut body = String::new();
    for (label, text) in records {
        body.push_str(&format!("{label}\t{text}\n"));
    }
    fs::write(path, body).map_err(|e| CoreError::io(path, e))
}

/// Preprocesses raw records into examples with ids `0..n`.
pub fn build_examples(records: &[(u8, String)]) -> Vec<Example> {
    records
        .iter()
        .enumerate()
        .map(|(i, (label, text))| Example::new(i, *label, text.clone()))
        .collect()
}

/// Keeps only examples longer than [`MIN_TOKENS`] tokens.
pub fn filter_short(examples: Vec<Example>) -> Vec<Example> {
    examples
        .into_iter()
        .filter(|e| e.tokens.len() > MIN_TOKENS)
        .collect()
}

/// Seeded 80/10/10 shuffle-split into (train, validation, test).
pub fn split_corpus(
    mut examples: Vec<Example>,
    seed: u64,
) -> (Vec<Example>, Vec<Example>, Vec<Example>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "split"));
    examples.shuffle(&mut rng);
    let n = examples.len();
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = examples.split_off(n_train + n_val);
    let val = examples.split_off(n_train);
    (examples, val, test)
}

/// Fills `ids` for every example from the vocabulary, truncating to
/// `max_len` tokens. Counterfactual ids are cleared; they are regenerated
/// per epoch during training.
pub fn encode_examples(examples: &mut [Example], vocab: &Vocab, max_len: usize) {
    for ex in examples.iter_mut() {
        let mut ids = vocab.encode(&ex.tokens);
        ids.truncate(max_len);
        ex.ids = ids;
        ex.clp_ids = None;
    }
}
