//! Character-level perturbations: adjacent swap, deletion, keyboard-
//! neighbor substitution, and insertion.
//!
//! Every edit is guaranteed to change its token, and positions are
//! interior (first and last characters keep their place except under an
//! index-1 swap), which keeps tokens recognizable.

use std::collections::HashMap;

use rand::Rng;

use super::{AugRule, Lexicons};
use crate::{CoreError, Result};

/// Keyboard adjacency used for substitutions and insertions.
#[derive(Debug, Clone, Default)]
pub struct Keyboard {
    neighbors: HashMap<char, Vec<char>>,
}

impl Keyboard {
    /// Parses `char SPACE neighbor-characters` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut neighbors = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key: Vec<char> = parts.next().unwrap().chars().collect();
            let rest: Vec<char> = parts.next().unwrap_or("").chars().collect();
            if key.len() != 1 || rest.is_empty() {
                return Err(CoreError::Parse {
                    path: "keyboard layout".into(),
                    details: format!("line {}: expected `char neighbors`", lineno + 1),
                });
            }
            neighbors.insert(key[0], rest);
        }
        Ok(Keyboard { neighbors })
    }

    /// The adjacency bundled with the crate (QWERTY letters).
    pub fn shipped() -> Self {
        Keyboard::parse(include_str!("../../data/qwerty.txt")).expect("shipped keyboard parses")
    }

    pub fn neighbors(&self, c: char) -> &[char] {
        self.neighbors
            .get(&c)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }
}

/// Swaps the characters at `p - 1` and `p`; index 1 therefore swaps the
/// first two characters ("hate" → "ahte").
pub fn swap_adjacent(word: &str, p: usize) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    assert!(p >= 1 && p < chars.len(), "swap index out of range");
    chars.swap(p - 1, p);
    chars.into_iter().collect()
}

/// One random guaranteed-change edit on a token of length ≥ 3.
pub fn perturb_token<R: Rng>(word: &str, kb: &Keyboard, rng: &mut R) -> String {
    let chars: Vec<char> = word.chars().collect();
    let len = chars.len();
    debug_assert!(len >= 3);
    match rng.gen_range(0..4u8) {
        0 => {
            // Adjacent swap at an index where the pair actually differs.
            let candidates: Vec<usize> =
                (1..len).filter(|&p| chars[p - 1] != chars[p]).collect();
            if let Some(&p) = pick(&candidates, rng) {
                return swap_adjacent(word, p);
            }
            insert_char(&chars, kb, rng)
        }
        1 => {
            // Interior deletion.
            let p = rng.gen_range(1..len - 1);
            let mut out = chars.clone();
            out.remove(p);
            out.into_iter().collect()
        }
        2 => {
            // Keyboard-neighbor substitution at an interior position.
            let candidates: Vec<usize> = (1..len - 1)
                .filter(|&p| !kb.neighbors(chars[p]).is_empty())
                .collect();
            if let Some(&p) = pick(&candidates, rng) {
                let ns = kb.neighbors(chars[p]);
                let mut out = chars.clone();
                out[p] = ns[rng.gen_range(0..ns.len())];
                return out.into_iter().collect();
            }
            insert_char(&chars, kb, rng)
        }
        _ => insert_char(&chars, kb, rng),
    }
}

fn pick<'a, T, R: Rng>(candidates: &'a [T], rng: &mut R) -> Option<&'a T> {
    if candidates.is_empty() {
        None
    } else {
        Some(&candidates[rng.gen_range(0..candidates.len())])
    }
}

/// Inserts a neighbor of the preceding character (or a copy of it) at an
/// interior position. Always lengthens the token, so it always changes
/// it — the fallback when other edits have no valid site.
fn insert_char<R: Rng>(chars: &[char], kb: &Keyboard, rng: &mut R) -> String {
    let p = rng.gen_range(1..chars.len());
    let prev = chars[p - 1];
    let ns = kb.neighbors(prev);
    let c = if ns.is_empty() {
        prev
    } else {
        ns[rng.gen_range(0..ns.len())]
    };
    let mut out = chars.to_vec();
    out.insert(p, c);
    out.into_iter().collect()
}

/// Perturbs ⌈rate · eligible⌉ tokens; eligible tokens have at least three
/// characters and are not protected.
pub fn charswap<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Vec<String> {
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.chars().count() >= 3 && !lex.is_protected(t))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return tokens.to_vec();
    }
    let k = (rule.rate * eligible.len() as f64).ceil() as usize;
    let chosen = choose_k(&eligible, k, rng);
    let mut out = tokens.to_vec();
    for i in chosen {
        out[i] = perturb_token(&out[i], &lex.keyboard, rng);
    }
    out
}

/// k distinct values, then sorted so edits apply in text order.
pub(super) fn choose_k<R: Rng>(pool: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut pool = pool.to_vec();
    pool.shuffle(rng);
    pool.truncate(k.min(pool.len()));
    pool.sort_unstable();
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Method;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn adjacent_swap_positions() {
        assert_eq!(swap_adjacent("hate", 1), "ahte");
        assert_eq!(swap_adjacent("hate", 2), "htae");
        assert_eq!(swap_adjacent("hate", 3), "haet");
    }

    #[test]
    fn every_edit_changes_the_token() {
        let kb = Keyboard::shipped();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for word in ["hate", "aaa", "the", "zorblax", "mmm", "banana", "x9z"] {
            for _ in 0..200 {
                let out = perturb_token(word, &kb, &mut rng);
                assert_ne!(out, word, "unchanged edit on {word}");
            }
        }
    }

    #[test]
    fn protected_tokens_are_untouched() {
        let lex = Lexicons::shipped();
        let rule = AugRule::new(Method::Charswap, 1.0, 0, 1.0).unwrap();
        let tokens = toks(&["refugee", "not", "URL", "walked", "home", "today"]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let out = charswap(&tokens, &rule, &lex, &mut rng);
            assert_eq!(out[0], "refugee");
            assert_eq!(out[1], "not");
            assert_eq!(out[2], "URL");
            assert_ne!(out[3], "walked");
        }
    }

    #[test]
    fn perturbs_exactly_ceil_rate_times_eligible() {
        let lex = Lexicons::shipped();
        // 10 eligible tokens at rate 0.25 -> ceil(2.5) = 3 edits.
        let tokens: Vec<String> = (0..10).map(|i| format!("token{i}")).collect();
        let rule = AugRule::new(Method::Charswap, 0.25, 7, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let out = charswap(&tokens, &rule, &lex, &mut rng);
            let changed = out.iter().zip(&tokens).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 3);
        }
    }

    #[test]
    fn short_tokens_are_ineligible() {
        let lex = Lexicons::shipped();
        let rule = AugRule::new(Method::Charswap, 1.0, 0, 1.0).unwrap();
        let tokens = toks(&["we", "a", "it"]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(charswap(&tokens, &rule, &lex, &mut rng), tokens);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let lex = Lexicons::shipped();
        let rule = AugRule::new(Method::Charswap, 0.5, 0, 1.0).unwrap();
        let tokens = toks(&["people", "walked", "around", "town", "today"]);
        let a = charswap(&tokens, &rule, &lex, &mut ChaCha8Rng::seed_from_u64(5));
        let b = charswap(&tokens, &rule, &lex, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn keyboard_parse_rejects_bad_lines() {
        assert!(Keyboard::parse("ab cd\n").is_err());
        assert!(Keyboard::parse("a\n").is_err());
        let kb = Keyboard::parse("a bc\n").unwrap();
        assert_eq!(kb.neighbors('a'), ['b', 'c']);
        assert!(kb.neighbors('z').is_empty());
    }
}
