//! Text normalization applied to every corpus before tokenization.
//!
//! Rules, in order per whitespace token: URLs collapse to the sentinel
//! `URL`, @-handles to `MENTION`; surrounding punctuation is trimmed;
//! contractions expand from the shipped table; the platform tags `rt` and
//! `fav` vanish as standalone tokens; remaining punctuation becomes a
//! token boundary (apostrophes are deleted instead); everything except
//! the two sentinels is lowercased. The whole map is idempotent.

use std::collections::HashMap;
use std::sync::OnceLock;

const CONTRACTIONS_FILE: &str = include_str!("../../data/contractions.txt");

/// `contraction<TAB>expansion words` per line; `#` comments.
pub fn parse_contractions(text: &str) -> HashMap<String, Vec<String>> {
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, expansion)) = line.split_once('\t') {
            let words: Vec<String> = expansion
                .split_whitespace()
                .map(str::to_string)
                .collect();
            if !words.is_empty() {
                map.insert(key.trim().to_lowercase(), words);
            }
        }
    }
    map
}

pub fn default_contractions() -> &'static HashMap<String, Vec<String>> {
    static TABLE: OnceLock<HashMap<String, Vec<String>>> = OnceLock::new();
    TABLE.get_or_init(|| parse_contractions(CONTRACTIONS_FILE))
}

fn is_url(token: &str) -> bool {
    let t = token.to_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

fn trim_outer_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric() && c != '@' && c != '\'')
}

pub fn preprocess(raw: &str) -> String {
    let table = default_contractions();
    let mut out: Vec<String> = Vec::new();
    for rough in raw.split_whitespace() {
        if rough == "URL" || rough == "MENTION" {
            out.push(rough.to_string());
            continue;
        }
        if is_url(rough) {
            out.push("URL".to_string());
            continue;
        }
        let normalized = rough.replace('\u{2019}', "'");
        let trimmed = trim_outer_punct(&normalized);
        if trimmed.starts_with('@') && trimmed.len() > 1 {
            out.push("MENTION".to_string());
            continue;
        }
        let lower = trimmed.to_lowercase();
        let pieces: Vec<String> = match table.get(&lower) {
            Some(words) => words.clone(),
            None => vec![lower],
        };
        for piece in pieces {
            // apostrophes vanish, any other punctuation splits
            let cleaned: String = piece
                .chars()
                .filter(|&c| c != '\'')
                .map(|c| if c.is_alphanumeric() { c } else { ' ' })
                .collect();
            for word in cleaned.split_whitespace() {
                if word == "rt" || word == "fav" {
                    continue;
                }
                out.push(word.to_string());
            }
        }
    }
    out.join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}
