//! Synonym replacement from a flat dictionary or from embedding
//! similarity.
//!
//! Dictionary mode swaps a token for one of its listed synonyms.
//! Embedding mode accepts a candidate only when cosine similarity is at
//! least [`SIMILARITY_THRESHOLD`] and, when a tag map is available, the
//! coarse part-of-speech tags match; with no tag map it falls back to
//! similarity alone and says so once on stderr.

use std::sync::Once;

use rand::Rng;

use super::charswap::choose_k;
use super::{AugRule, Lexicons};
use crate::{CoreError, Result};

pub const SIMILARITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynonymMode {
    Wordnet,
    Embedding,
}

/// Cosine similarity; zero vectors are rejected at lexicon parse time.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let dot: f64 = (0..n).map(|i| a[i] * b[i]).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

static POS_FALLBACK_WARNING: Once = Once::new();

fn candidates_for<'a>(
    token: &str,
    mode: SynonymMode,
    lex: &'a Lexicons,
) -> Vec<&'a str> {
    match mode {
        SynonymMode::Wordnet => lex
            .synonyms
            .get(token)
            .map(|syns| {
                syns.iter()
                    .map(String::as_str)
                    .filter(|s| *s != token && !lex.is_protected(s))
                    .collect()
            })
            .unwrap_or_default(),
        SynonymMode::Embedding => {
            let Some(vec) = lex.embedding(token) else {
                return Vec::new();
            };
            let use_pos = !lex.pos_tags.is_empty();
            if !use_pos {
                POS_FALLBACK_WARNING.call_once(|| {
                    eprintln!(
                        "warning: no part-of-speech tag map loaded; embedding synonym \
                         replacement falls back to similarity alone"
                    );
                });
            }
            let token_tag = lex.pos_tags.get(token);
            lex.embedding_rows()
                .iter()
                .filter(|(w, _)| w != token && !lex.is_protected(w))
                .filter(|(_, v)| cosine(vec, v) >= SIMILARITY_THRESHOLD)
                .filter(|(w, _)| {
                    if !use_pos {
                        return true;
                    }
                    match (token_tag, lex.pos_tags.get(w)) {
                        (Some(a), Some(b)) => a == b,
                        _ => false,
                    }
                })
                .map(|(w, _)| w.as_str())
                .collect()
        }
    }
}

/// Replaces ⌈rate · eligible⌉ tokens with sampled synonyms. Eligible
/// tokens are unprotected and have at least one acceptable candidate.
pub fn synonym_replace<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    mode: SynonymMode,
    rng: &mut R,
) -> Result<Vec<String>> {
    match mode {
        SynonymMode::Wordnet if lex.synonyms.is_empty() => {
            return Err(CoreError::MissingLexicon("synonyms"));
        }
        SynonymMode::Embedding if lex.embedding_rows().is_empty() => {
            return Err(CoreError::MissingLexicon("embeddings"));
        }
        _ => {}
    }
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !lex.is_protected(t) && !candidates_for(t, mode, lex).is_empty())
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Ok(tokens.to_vec());
    }
    let k = (rule.rate * eligible.len() as f64).ceil() as usize;
    let chosen = choose_k(&eligible, k, rng);
    let mut out = tokens.to_vec();
    for i in chosen {
        let cands = candidates_for(&tokens[i], mode, lex);
        out[i] = cands[rng.gen_range(0..cands.len())].to_string();
    }
    Ok(out)
}
