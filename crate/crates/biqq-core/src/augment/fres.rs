//! Flesch reading-ease scoring with a fixed, auditable syllable
//! heuristic.
//!
//! Syllables per word = number of contiguous vowel runs (`aeiouy`,
//! case-insensitive, over the word's letters only), minus one when the
//! word ends in a lone `e` that forms its own run and the word has
//! another vowel run, floored at one. Sentences = segments produced by
//! splitting on `.!?` that contain at least one word; a text without
//! terminators is one sentence.
//!
//! Because every word counts at least one syllable and every sentence at
//! least one word, the true score never exceeds the one-word,
//! one-syllable, one-sentence case. The raw float expression for that
//! case lands a couple of ulps above the decimal literal `121.22`, so the
//! score is capped at [`FRES_MAX`] to keep the ceiling exact.

use crate::{CoreError, Result};

/// Highest reachable score: one one-syllable word in one sentence,
/// 206.835 − 1.015·1 − 84.6·1.
pub const FRES_MAX: f64 = 121.22;

/// Lower readability bound used by the augmentation quality gate.
pub const FRES_MIN: f64 = 30.0;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Counts syllables in one word via vowel runs.
pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .flat_map(|c| c.to_lowercase())
        .filter(|c| c.is_alphabetic())
        .collect();
    let mut runs = 0usize;
    let mut last_run_start = 0usize;
    let mut last_run_len = 0usize;
    let mut in_run = false;
    for (i, &c) in letters.iter().enumerate() {
        if is_vowel(c) {
            if !in_run {
                runs += 1;
                in_run = true;
                last_run_start = i;
                last_run_len = 0;
            }
            last_run_len += 1;
        } else {
            in_run = false;
        }
    }
    let silent_e = runs > 1
        && letters.last() == Some(&'e')
        && last_run_len == 1
        && last_run_start == letters.len() - 1;
    if silent_e {
        runs -= 1;
    }
    runs.max(1)
}

fn is_word(token: &str) -> bool {
    token.chars().any(|c| c.is_alphanumeric())
}

/// Flesch reading ease of a text. Errors with [`CoreError::EmptyText`]
/// when the text has no words.
pub fn fres(text: &str) -> Result<f64> {
    let mut sentences = 0usize;
    let mut words = 0usize;
    let mut syllable_total = 0usize;
    for segment in text.split(['.', '!', '?']) {
        let seg_words: Vec<&str> = segment.split_whitespace().filter(|t| is_word(t)).collect();
        if seg_words.is_empty() {
            continue;
        }
        sentences += 1;
        words += seg_words.len();
        syllable_total += seg_words.iter().map(|w| syllables(w)).sum::<usize>();
    }
    if words == 0 {
        return Err(CoreError::EmptyText);
    }
    let wps = words as f64 / sentences as f64;
    let spw = syllable_total as f64 / words as f64;
    let raw = 206.835 - 1.015 * wps - 84.6 * spw;
    Ok(raw.min(FRES_MAX))
}

/// Quality gate: readable enough, and no higher than the theoretical
/// ceiling.
pub fn fres_in_range(score: f64) -> bool {
    (FRES_MIN..=FRES_MAX).contains(&score)
}
