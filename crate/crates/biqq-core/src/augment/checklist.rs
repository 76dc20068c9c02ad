//! Rule-based surface edits: contraction toggles ("don't" ↔ "do not")
//! and interchanges of person names and place names from shipped closed
//! lists.
//!
//! Contraction toggles re-surface negations rather than inserting or
//! deleting them, so the corpus-level negation guard accepts the output.
//! Name and place swaps follow a random pairing of the closed list drawn
//! per call; because a pairing maps both directions, applying the same
//! seed twice restores the original text.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;

use super::charswap::choose_k;
use super::{AugRule, Lexicons};
use crate::pipeline::preprocess::parse_contractions;
use crate::pipeline::vocab::{MENTION_TOKEN, URL_TOKEN};

const NAMES_FILE: &str = include_str!("../../data/names.txt");
const LOCATIONS_FILE: &str = include_str!("../../data/locations.txt");
const CONTRACTIONS_FILE: &str = include_str!("../../data/contractions.txt");

pub struct ChecklistResources {
    /// contraction → expansion words, e.g. "don't" → ["do", "not"].
    forward: HashMap<String, Vec<String>>,
    /// space-joined expansion → contraction. Where two contractions share
    /// an expansion ("ain't" and "isn't" both expand to "is not") the
    /// earlier table entry wins.
    reverse: HashMap<String, String>,
    /// Widest expansion, in words.
    max_width: usize,
    names: Vec<String>,
    locations: Vec<String>,
}

fn parse_list_ordered(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn resources() -> &'static ChecklistResources {
    static RES: OnceLock<ChecklistResources> = OnceLock::new();
    RES.get_or_init(|| {
        let forward = parse_contractions(CONTRACTIONS_FILE);
        let mut reverse = HashMap::new();
        for line in CONTRACTIONS_FILE.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, expansion)) = line.split_once('\t') {
                let joined = expansion.split_whitespace().collect::<Vec<_>>().join(" ");
                reverse
                    .entry(joined.to_lowercase())
                    .or_insert_with(|| key.trim().to_lowercase());
            }
        }
        let max_width = reverse
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(1);
        ChecklistResources {
            forward,
            reverse,
            max_width,
            names: parse_list_ordered(NAMES_FILE),
            locations: parse_list_ordered(LOCATIONS_FILE),
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum Toggle {
    /// Token at the index is a contraction; replace it with its expansion.
    Expand(usize),
    /// `width` tokens starting at the index join to a known expansion;
    /// replace them with the contraction.
    Contract(usize, usize),
}

/// Scans left to right, preferring the widest contractible window. A
/// toggle turns an expand site into a contract site and vice versa, so
/// re-scanning toggled output finds the same trigger count in the same
/// order — which is what makes rate selection reproducible across a
/// toggle round trip.
fn find_toggles<F: Fn(&str) -> bool>(
    tokens: &[String],
    res: &ChecklistResources,
    guarded: &F,
) -> Vec<Toggle> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !guarded(&tokens[i]) && res.forward.contains_key(tokens[i].as_str()) {
            out.push(Toggle::Expand(i));
            i += 1;
            continue;
        }
        let mut width = 0;
        for w in (1..=res.max_width).rev() {
            if i + w > tokens.len() {
                continue;
            }
            let window = &tokens[i..i + w];
            if res.reverse.contains_key(&window.join(" ")) && !window.iter().any(|t| guarded(t)) {
                width = w;
                break;
            }
        }
        if width > 0 {
            out.push(Toggle::Contract(i, width));
            i += width;
        } else {
            i += 1;
        }
    }
    out
}

/// Random disjoint pairing over a closed list; each member of a pair maps
/// to the other, a leftover member maps to nothing. Symmetric by
/// construction.
fn paired_map<'a, R: Rng>(list: &'a [String], rng: &mut R) -> HashMap<&'a str, &'a str> {
    let mut shuffled: Vec<&String> = list.iter().collect();
    shuffled.shuffle(rng);
    let mut map = HashMap::new();
    for pair in shuffled.chunks(2) {
        if let [a, b] = pair {
            map.insert(a.as_str(), b.as_str());
            map.insert(b.as_str(), a.as_str());
        }
    }
    map
}

/// Applies ⌈rate · triggers⌉ contraction toggles plus a full name and
/// place interchange under this call's random pairing. Sensitive words
/// and sentinels are left untouched; text without any trigger comes back
/// unchanged.
pub fn checklist_perturb<R: Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Vec<String> {
    let res = resources();
    let guarded =
        |t: &str| lex.sensitive.contains(t) || t == URL_TOKEN || t == MENTION_TOKEN;
    let toggles = find_toggles(tokens, res, &guarded);
    let k = (rule.rate * toggles.len() as f64).ceil() as usize;
    let ordinals: Vec<usize> = (0..toggles.len()).collect();
    let selected = choose_k(&ordinals, k, rng);

    let mut out = tokens.to_vec();
    // Apply right to left so earlier indices stay valid while the token
    // count changes.
    for &ord in selected.iter().rev() {
        match toggles[ord] {
            Toggle::Expand(i) => {
                let words = res.forward[out[i].as_str()].clone();
                out.splice(i..i + 1, words);
            }
            Toggle::Contract(i, w) => {
                let contraction = res.reverse[&out[i..i + w].join(" ")].clone();
                out.splice(i..i + w, std::iter::once(contraction));
            }
        }
    }

    let names = paired_map(&res.names, rng);
    let locations = paired_map(&res.locations, rng);
    for t in &mut out {
        if guarded(t) {
            continue;
        }
        if let Some(&swap) = names.get(t.as_str()).or_else(|| locations.get(t.as_str())) {
            *t = swap.to_string();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{negation_count, Method};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn rule(rate: f64) -> AugRule {
        AugRule::new(Method::Checklist, rate, 0, 1.0).unwrap()
    }

    #[test]
    fn resources_load_with_first_entry_winning_collisions() {
        let res = resources();
        assert_eq!(res.forward["don't"], toks(&["do", "not"]));
        // "ain't" precedes "isn't" in the table; both expand to "is not".
        assert_eq!(res.reverse["is not"], "ain't");
        assert_eq!(res.reverse["cannot"], "can't");
        assert_eq!(res.max_width, 2);
        assert_eq!(res.names.len() % 2, 0, "names must pair up completely");
        assert!(res.names.contains(&"alex".to_string()));
        assert!(res.locations.contains(&"rivertown".to_string()));
    }

    #[test]
    fn contraction_expands_and_contracts() {
        let lex = Lexicons::shipped();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = checklist_perturb(&toks(&["don't"]), &rule(1.0), &lex, &mut rng);
        assert_eq!(out, toks(&["do", "not"]));

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = checklist_perturb(&toks(&["we", "do", "not", "go"]), &rule(1.0), &lex, &mut rng);
        assert_eq!(out, toks(&["we", "don't", "go"]));
    }

    #[test]
    fn toggles_preserve_negation_content() {
        let lex = Lexicons::shipped();
        let before = toks(&["we", "do", "not", "go", "and", "they", "cannot", "stay"]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let after = checklist_perturb(&before, &rule(1.0), &lex, &mut rng);
        assert_eq!(after[1], "don't");
        assert_eq!(after[5], "can't");
        assert_eq!(negation_count(&before, &lex), negation_count(&after, &lex));
    }

    #[test]
    fn text_without_triggers_is_unchanged() {
        let lex = Lexicons::shipped();
        let tokens = toks(&["the", "weather", "seems", "fine"]);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(checklist_perturb(&tokens, &rule(1.0), &lex, &mut rng), tokens);
        }
    }

    #[test]
    fn name_and_place_swap_is_an_involution_under_one_seed() {
        let lex = Lexicons::shipped();
        let tokens = toks(&["alex", "met", "taylor", "near", "rivertown", "and", "lakeside"]);
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let once = checklist_perturb(&tokens, &rule(0.5), &lex, &mut rng);
            assert_ne!(once, tokens, "names must swap (seed {seed})");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let twice = checklist_perturb(&once, &rule(0.5), &lex, &mut rng);
            assert_eq!(twice, tokens, "seed {seed} pairing must undo itself");
        }
    }

    #[test]
    fn sensitive_words_are_never_swapped() {
        let mut lex = Lexicons::shipped();
        lex.sensitive.insert("alex".to_string());
        let tokens = toks(&["alex", "visited", "rivertown"]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = checklist_perturb(&tokens, &rule(1.0), &lex, &mut rng);
        assert_eq!(out[0], "alex");
        assert_ne!(out[2], "rivertown");
    }

    #[test]
    fn rate_limits_how_many_toggles_fire() {
        let lex = Lexicons::shipped();
        // Four independent toggle sites.
        let tokens = toks(&["do", "not", "x", "is", "not", "y", "can", "z", "don't", "won't"]);
        let res = resources();
        let guarded = |t: &str| lex.sensitive.contains(t);
        assert_eq!(find_toggles(&tokens, res, &guarded).len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = checklist_perturb(&tokens, &rule(0.25), &lex, &mut rng);
        // Exactly one site toggled: token count shifts by exactly one.
        let diff = (out.len() as i64 - tokens.len() as i64).abs();
        assert_eq!(diff, 1, "{out:?}");
    }
}
