//! Single-operation lightweight text edits: one of synonym replacement,
//! random insertion, random swap, or random deletion is drawn per call.
//!
//! Inputs shorter than [`MIN_TOKENS`] tokens are rejected. Deletion and
//! insertion never touch protected words (negations and sensitive
//! terms), so guarded meaning-bearing tokens survive every edit.

use rand::Rng;

use super::synonym::{synonym_replace, SynonymMode};
use super::{AugRule, Lexicons};
use crate::{CoreError, Result};

pub const MIN_TOKENS: usize = 4;

/// Applies one randomly chosen edit operation to the token list.
pub fn easydata<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Result<Vec<String>> {
    if tokens.len() < MIN_TOKENS {
        return Err(CoreError::TooShort {
            len: tokens.len(),
            min: MIN_TOKENS,
        });
    }
    match rng.gen_range(0..4u8) {
        0 => synonym_replace(tokens, rule, lex, SynonymMode::Wordnet, rng),
        1 => Ok(random_insertion(tokens, rule, lex, rng)),
        2 => Ok(random_swap(tokens, rule, rng)),
        _ => Ok(random_deletion(tokens, rule, lex, rng)),
    }
}

/// Inserts ⌈rate · len⌉ synonyms of randomly chosen unprotected source
/// tokens at random positions. Both the source word and the inserted
/// synonym must be unprotected; with no usable source the list is
/// returned unchanged.
fn random_insertion<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Vec<String> {
    let n_insert = (rule.rate * tokens.len() as f64).ceil() as usize;
    let mut out = tokens.to_vec();
    for _ in 0..n_insert {
        let sources: Vec<&String> = out
            .iter()
            .filter(|t| !lex.is_protected(t))
            .filter(|t| {
                lex.synonyms
                    .get(t.as_str())
                    .is_some_and(|syns| syns.iter().any(|s| s != *t && !lex.is_protected(s)))
            })
            .collect();
        if sources.is_empty() {
            break;
        }
        let src = sources[rng.gen_range(0..sources.len())].clone();
        let cands: Vec<&String> = lex.synonyms[src.as_str()]
            .iter()
            .filter(|s| **s != src && !lex.is_protected(s))
            .collect();
        let word = cands[rng.gen_range(0..cands.len())].clone();
        let pos = rng.gen_range(0..=out.len());
        out.insert(pos, word);
    }
    out
}

/// Performs ⌈rate · len⌉ random transpositions; the token multiset is
/// unchanged.
fn random_swap<R: Rng>(tokens: &[String], rule: &AugRule, rng: &mut R) -> Vec<String> {
    let n_swap = (rule.rate * tokens.len() as f64).ceil() as usize;
    let mut out = tokens.to_vec();
    for _ in 0..n_swap {
        let a = rng.gen_range(0..out.len());
        let b = rng.gen_range(0..out.len());
        out.swap(a, b);
    }
    out
}

/// Drops each unprotected token independently with probability `rate`.
/// If nothing was dropped, one randomly chosen unprotected token is
/// removed so the edit is never a no-op by accident; at least one token
/// always survives.
fn random_deletion<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Vec<String> {
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !lex.is_protected(t))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() || eligible.len() == tokens.len() && tokens.len() == 1 {
        return tokens.to_vec();
    }
    let mut drop = vec![false; tokens.len()];
    let mut dropped = 0usize;
    for &i in &eligible {
        // Never delete the whole sentence.
        if dropped + 1 >= tokens.len() {
            break;
        }
        if rng.gen_bool(rule.rate) {
            drop[i] = true;
            dropped += 1;
        }
    }
    if dropped == 0 && tokens.len() > 1 {
        drop[eligible[rng.gen_range(0..eligible.len())]] = true;
    }
    tokens
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(t, _)| t.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Method;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn rule(rate: f64) -> AugRule {
        AugRule::new(Method::Easydata, rate, 0, 1.0).unwrap()
    }

    fn multiset(tokens: &[String]) -> HashMap<&str, usize> {
        let mut m = HashMap::new();
        for t in tokens {
            *m.entry(t.as_str()).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn three_tokens_is_too_short() {
        let lex = Lexicons::shipped();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = easydata(&toks(&["a", "b", "c"]), &rule(0.3), &lex, &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::TooShort { len: 3, min: 4 }));
        assert!(easydata(&toks(&["a", "b", "c", "d"]), &rule(0.3), &lex, &mut rng).is_ok());
    }

    #[test]
    fn deletion_keeps_protected_words_and_at_least_one_token() {
        let lex = Lexicons::shipped();
        let tokens = toks(&["this", "is", "not", "ok", "for", "women", "here"]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let out = random_deletion(&tokens, &rule(0.9), &lex, &mut rng);
            assert!(!out.is_empty());
            assert_eq!(out.iter().filter(|t| *t == "not").count(), 1);
            assert_eq!(out.iter().filter(|t| *t == "women").count(), 1);
            assert!(out.len() < tokens.len(), "deletion must remove something");
        }
    }

    #[test]
    fn swap_preserves_the_token_multiset() {
        let lex = Lexicons::shipped();
        let tokens = toks(&["one", "two", "three", "four", "five", "six"]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let out = random_swap(&tokens, &rule(0.5), &mut rng);
            assert_eq!(multiset(&tokens), multiset(&out));
        }
        let _ = lex; // shipped lexicon not needed for swaps
    }

    #[test]
    fn insertion_only_adds_unprotected_synonyms() {
        let mut lex = Lexicons::shipped();
        // Sabotage check: make a synonym of "people" protected and
        // verify it is never inserted.
        lex.sensitive.insert("folks".to_string());
        let tokens = toks(&["the", "people", "said", "hello", "today"]);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let out = random_insertion(&tokens, &rule(0.6), &lex, &mut rng);
            assert!(out.len() > tokens.len());
            let before = multiset(&tokens);
            for (tok, n) in multiset(&out) {
                let added = n - before.get(tok).copied().unwrap_or(0);
                if added > 0 {
                    assert!(!lex.is_protected(tok), "inserted protected word {tok}");
                }
            }
        }
    }

    #[test]
    fn all_operations_reachable_and_valid() {
        let lex = Lexicons::shipped();
        let tokens = toks(&["the", "people", "said", "hello", "not", "today"]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut lens = std::collections::HashSet::new();
        for _ in 0..200 {
            let out = easydata(&tokens, &rule(0.3), &lex, &mut rng).unwrap();
            assert!(!out.is_empty());
            assert_eq!(out.iter().filter(|t| *t == "not").count(), 1);
            lens.insert(out.len().cmp(&tokens.len()));
        }
        // Over 200 draws we expect shrinking (deletion), growth
        // (insertion), and same-length (swap/synonym) outcomes.
        assert_eq!(lens.len(), 3);
    }
}
