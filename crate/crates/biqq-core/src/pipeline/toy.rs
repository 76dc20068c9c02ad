//! Synthetic corpora with planted classification rules.
//!
//! The "hate" class here is purely structural: invented marker words,
//! never real slurs, so the corpora are safe to ship while still giving a
//! learnable separation. Marker words are chosen with low syllable counts
//! so readability-gated augmenters keep their outputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seeds::derive_seed;

/// Words planted only in positive (hate-labeled) examples.
pub const HATE_MARKERS: [&str; 5] = ["zorblax", "grimscut", "vexnar", "drubble", "skarn"];

/// Words planted only in negative (legitimate) examples.
pub const LEGIT_MARKERS: [&str; 5] = ["suntide", "plover", "brightwing", "gladefern", "mirelight"];

// Includes a few person names and place names from the shipped closed
// lists so rule-based surface perturbation has material to work with.
const FILLER: [&str; 16] = [
    "the", "a", "we", "they", "said", "today", "about", "with", "again", "people", "near",
    "often", "alex", "jordan", "rivertown", "lakeside",
];

fn one_text<R: Rng>(
    rng: &mut R,
    label: u8,
    extra: &[String],
) -> String {
    let markers: &[&str] = if label == 1 { &HATE_MARKERS } else { &LEGIT_MARKERS };
    let n_filler = rng.gen_range(5..=8);
    let n_markers = rng.gen_range(2..=3);
    let mut words: Vec<String> = Vec::new();
    for _ in 0..n_filler {
        words.push(FILLER[rng.gen_range(0..FILLER.len())].to_string());
    }
    for _ in 0..n_markers {
        words.push(markers[rng.gen_range(0..markers.len())].to_string());
    }
    words.extend_from_slice(extra);
    words.shuffle(rng);
    words.join(" ")
}

/// Balanced corpus where the label is decided by which marker vocabulary
/// a text draws from.
pub fn toy_corpus(n: usize, seed: u64) -> Vec<(u8, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "toy"));
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            (label, one_text(&mut rng, label, &[]))
        })
        .collect()
}

/// Like [`toy_corpus`], but every text also carries exactly one identity
/// term: hate texts carry `term_a` with probability `skew` (else
/// `term_b`), and legitimate texts the reverse. At high skew a model can
/// exploit the identity term as a shortcut, which is what the
/// counterfactual-gap machinery is meant to detect and suppress.
pub fn toy_corpus_with_identity(
    n: usize,
    seed: u64,
    term_a: &str,
    term_b: &str,
    skew: f64,
) -> Vec<(u8, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "toy-identity"));
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let biased = if label == 1 { term_a } else { term_b };
            let other = if label == 1 { term_b } else { term_a };
            let term = if rng.gen::<f64>() < skew { biased } else { other };
            (label, one_text(&mut rng, label, &[term.to_string()]))
        })
        .collect()
}

/// Like [`toy_corpus`], but sprinkles words from `extra_words` (e.g. a
/// sensitive-word lexicon) into texts of both classes, so augmenter
/// protection guards get exercised on realistic inputs.
pub fn toy_corpus_with_words(
    n: usize,
    seed: u64,
    extra_words: &[String],
    rate: f64,
) -> Vec<(u8, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "toy-words"));
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let mut extra = Vec::new();
            if !extra_words.is_empty() && rng.gen::<f64>() < rate {
                extra.push(extra_words[rng.gen_range(0..extra_words.len())].clone());
            }
            (label, one_text(&mut rng, label, &extra))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::dataset::build_examples;

    #[test]
    fn corpus_is_balanced_deterministic_and_long_enough() {
        let a = toy_corpus(50, 9);
        let b = toy_corpus(50, 9);
        assert_eq!(a, b);
        let pos = a.iter().filter(|(l, _)| *l == 1).count();
        assert_eq!(pos, 25);
        for ex in build_examples(&a) {
            assert!(ex.tokens.len() > 3, "too short: {:?}", ex.tokens);
        }
        assert_ne!(toy_corpus(50, 10), a);
    }

    #[test]
    fn markers_separate_the_classes() {
        for (label, text) in toy_corpus(40, 3) {
            let (own, other): (&[&str], &[&str]) = if label == 1 {
                (&HATE_MARKERS, &LEGIT_MARKERS)
            } else {
                (&LEGIT_MARKERS, &HATE_MARKERS)
            };
            let tokens: Vec<&str> = text.split(' ').collect();
            assert!(tokens.iter().any(|t| own.contains(t)));
            assert!(!tokens.iter().any(|t| other.contains(t)));
        }
    }

    #[test]
    fn identity_terms_appear_once_per_text_with_skew() {
        let corpus = toy_corpus_with_identity(200, 4, "norlander", "sudrian", 0.9);
        let mut biased = 0;
        for (label, text) in &corpus {
            let tokens: Vec<&str> = text.split(' ').collect();
            let count = tokens
                .iter()
                .filter(|t| **t == "norlander" || **t == "sudrian")
                .count();
            assert_eq!(count, 1, "expected exactly one identity term: {text}");
            let expect = if *label == 1 { "norlander" } else { "sudrian" };
            if tokens.contains(&expect) {
                biased += 1;
            }
        }
        assert!(biased > 160, "skew not expressed: {biased}/200");
    }

    #[test]
    fn extra_words_show_up_at_roughly_the_requested_rate() {
        let words = vec!["guarded".to_string()];
        let corpus = toy_corpus_with_words(300, 5, &words, 0.5);
        let with = corpus
            .iter()
            .filter(|(_, t)| t.split(' ').any(|w| w == "guarded"))
            .count();
        assert!((100..=200).contains(&with), "rate off: {with}/300");
    }
}
