//! Label-preserving text perturbation for training-set augmentation and
//! adversarial attack sets.
//!
//! Five methods share one contract: they take a preprocessed token list
//! and emit a perturbed token list that (a) never edits a sensitive-
//! dictionary token, (b) never inserts or deletes a negation token, and
//! (c) survives a readability gate. Corpus-level generation draws every
//! slot's randomness from a seed keyed on (global seed, method, slot), so
//! parallel and sequential runs emit byte-identical corpora.

pub mod charswap;
pub mod checklist;
pub mod easydata;
pub mod fres;
pub mod synonym;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;
use crate::pipeline::dataset::Example;
use crate::pipeline::vocab::{MENTION_TOKEN, URL_TOKEN};
use crate::seeds::derive_seed_indexed;
use crate::{CoreError, Result};

pub use charswap::Keyboard;
pub use fres::{fres, fres_in_range, FRES_MAX, FRES_MIN};

/// Perturbation attempts per source example before moving to the next
/// source.
const MAX_TRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Charswap,
    Wordnet,
    Embedding,
    Checklist,
    Easydata,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Charswap,
        Method::Wordnet,
        Method::Embedding,
        Method::Checklist,
        Method::Easydata,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Charswap => "charswap",
            Method::Wordnet => "wordnet",
            Method::Embedding => "embedding",
            Method::Checklist => "checklist",
            Method::Easydata => "easydata",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "charswap" => Ok(Method::Charswap),
            "wordnet" => Ok(Method::Wordnet),
            "embedding" => Ok(Method::Embedding),
            "checklist" => Ok(Method::Checklist),
            "easydata" => Ok(Method::Easydata),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown augmentation method `{other}` (expected charswap, wordnet, \
                 embedding, checklist or easydata)"
            ))),
        }
    }
}

/// One augmentation run: which method, how aggressively, under which
/// seed, and how much output relative to the source corpus.
#[derive(Debug, Clone)]
pub struct AugRule {
    pub method: Method,
    /// Fraction of eligible tokens (or characters) to perturb, in (0, 1].
    pub rate: f64,
    pub seed: u64,
    /// Output size as a multiple of the source corpus size.
    pub ratio: f64,
}

impl AugRule {
    pub fn new(method: Method, rate: f64, seed: u64, ratio: f64) -> Result<Self> {
        let rule = AugRule {
            method,
            rate,
            seed,
            ratio,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "augmentation rate {} must lie in (0, 1]",
                self.rate
            )));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(CoreError::InvalidConfig(format!(
                "augmentation ratio {} must be positive",
                self.ratio
            )));
        }
        Ok(())
    }
}

fn parse_word_lines(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn parse_synonyms(text: &str) -> HashMap<String, Vec<String>> {
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((word, rest)) = line.split_once('\t') {
            let syns: Vec<String> = rest
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if !syns.is_empty() {
                map.insert(word.trim().to_string(), syns);
            }
        }
    }
    map
}

fn parse_pos_tags(text: &str) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((word, tag)) = line.split_once('\t') {
            map.insert(word.trim().to_string(), tag.trim().to_string());
        }
    }
    map
}

fn parse_embeddings(text: &str, name: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap().to_string();
        let vec: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| CoreError::Parse {
                    path: name.to_string(),
                    details: format!("line {}: bad number `{p}`", lineno + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vec.is_empty() || vec.iter().all(|&x| x == 0.0) {
            return Err(CoreError::Parse {
                path: name.to_string(),
                details: format!("line {}: embedding for `{word}` is empty or zero", lineno + 1),
            });
        }
        rows.push((word, vec));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(rows)
}

/// Word lists and maps the augmenters consult.
#[derive(Debug, Clone)]
pub struct Lexicons {
    /// Words protected from every perturbation.
    pub sensitive: HashSet<String>,
    /// Words that must never be inserted or deleted.
    pub negations: HashSet<String>,
    /// Flat synonym dictionary: word → candidate replacements.
    pub synonyms: HashMap<String, Vec<String>>,
    /// Sorted (word, vector) rows; kept ordered so candidate scans are
    /// deterministic.
    embeddings: Vec<(String, Vec<f64>)>,
    embed_index: HashMap<String, usize>,
    /// Word → coarse part-of-speech tag.
    pub pos_tags: HashMap<String, String>,
    /// Keyboard adjacency for character substitutions.
    pub keyboard: Keyboard,
}

impl Lexicons {
    pub fn new(
        sensitive: HashSet<String>,
        negations: HashSet<String>,
        synonyms: HashMap<String, Vec<String>>,
        embeddings: Vec<(String, Vec<f64>)>,
        pos_tags: HashMap<String, String>,
        keyboard: Keyboard,
    ) -> Self {
        let mut embeddings = embeddings;
        embeddings.sort_by(|a, b| a.0.cmp(&b.0));
        let embed_index = embeddings
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        Lexicons {
            sensitive,
            negations,
            synonyms,
            embeddings,
            embed_index,
            pos_tags,
            keyboard,
        }
    }

    /// The word lists and maps bundled with the crate.
    pub fn shipped() -> Self {
        Lexicons::new(
            parse_word_lines(include_str!("../../data/sensitive_words.txt")),
            parse_word_lines(include_str!("../../data/negations.txt")),
            parse_synonyms(include_str!("../../data/synonyms.txt")),
            parse_embeddings(include_str!("../../data/embeddings.txt"), "embeddings.txt")
                .expect("shipped embeddings parse"),
            parse_pos_tags(include_str!("../../data/pos_tags.txt")),
            Keyboard::shipped(),
        )
    }

    /// Loads lexicons from a directory using the shipped file names
    /// (`sensitive_words.txt`, `negations.txt`, `synonyms.txt`,
    /// `embeddings.txt`, `pos_tags.txt`, `qwerty.txt`). Missing files fall
    /// back to the shipped data.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let shipped = Lexicons::shipped();
        let read = |file: &str| -> Result<Option<String>> {
            let path = dir.join(file);
            if path.exists() {
                std::fs::read_to_string(&path)
                    .map(Some)
                    .map_err(|e| CoreError::io(&path, e))
            } else {
                Ok(None)
            }
        };
        let sensitive = read("sensitive_words.txt")?
            .map(|t| parse_word_lines(&t))
            .unwrap_or(shipped.sensitive);
        let negations = read("negations.txt")?
            .map(|t| parse_word_lines(&t))
            .unwrap_or(shipped.negations);
        let synonyms = read("synonyms.txt")?
            .map(|t| parse_synonyms(&t))
            .unwrap_or(shipped.synonyms);
        let embeddings = match read("embeddings.txt")? {
            Some(t) => parse_embeddings(&t, &dir.join("embeddings.txt").display().to_string())?,
            None => shipped.embeddings,
        };
        let pos_tags = read("pos_tags.txt")?
            .map(|t| parse_pos_tags(&t))
            .unwrap_or(shipped.pos_tags);
        let keyboard = match read("qwerty.txt")? {
            Some(t) => Keyboard::parse(&t)?,
            None => shipped.keyboard,
        };
        Ok(Lexicons::new(
            sensitive, negations, synonyms, embeddings, pos_tags, keyboard,
        ))
    }

    /// Tokens no augmenter may modify: the sensitive dictionary, the
    /// negation list, and the preprocessing sentinels.
    pub fn is_protected(&self, token: &str) -> bool {
        self.sensitive.contains(token)
            || self.negations.contains(token)
            || token == URL_TOKEN
            || token == MENTION_TOKEN
    }

    pub fn embedding(&self, word: &str) -> Option<&[f64]> {
        self.embed_index
            .get(word)
            .map(|&i| self.embeddings[i].1.as_slice())
    }

    /// Embedding rows in sorted word order.
    pub fn embedding_rows(&self) -> &[(String, Vec<f64>)] {
        &self.embeddings
    }
}

/// Applies one method once. Token lists are preprocessed text; outputs
/// keep the same convention.
pub fn perturb<R: rand::Rng>(
    tokens: &[String],
    rule: &AugRule,
    lex: &Lexicons,
    rng: &mut R,
) -> Result<Vec<String>> {
    rule.validate()?;
    match rule.method {
        Method::Charswap => Ok(charswap::charswap(tokens, rule, lex, rng)),
        Method::Wordnet => {
            synonym::synonym_replace(tokens, rule, lex, synonym::SynonymMode::Wordnet, rng)
        }
        Method::Embedding => {
            synonym::synonym_replace(tokens, rule, lex, synonym::SynonymMode::Embedding, rng)
        }
        Method::Checklist => Ok(checklist::checklist_perturb(tokens, rule, lex, rng)),
        Method::Easydata => easydata::easydata(tokens, rule, lex, rng),
    }
}

fn multiset_of<'a>(tokens: &'a [String], set: &HashSet<String>) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        if set.contains(t.as_str()) {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// Counts tokens carrying negation content. A token counts when it is an
/// exact member of the negation list, or when an apostrophe-bearing
/// entry such as `n't` is its suffix — so the surface toggle
/// "do not" ↔ "don't" neither inserts nor deletes a negation.
pub fn negation_count(tokens: &[String], lex: &Lexicons) -> usize {
    tokens
        .iter()
        .filter(|t| {
            lex.negations.contains(t.as_str())
                || lex
                    .negations
                    .iter()
                    .any(|n| n.contains('\'') && t.len() > n.len() && t.ends_with(n.as_str()))
        })
        .count()
}

/// Quality gate for a generated example: it must differ from its source,
/// preserve the sensitive-word multiset and the negation count, and stay
/// inside the readability band.
pub fn passes_filters(src: &[String], out: &[String], lex: &Lexicons) -> bool {
    if out.is_empty() || out == src {
        return false;
    }
    if multiset_of(src, &lex.sensitive) != multiset_of(out, &lex.sensitive) {
        return false;
    }
    if negation_count(src, lex) != negation_count(out, lex) {
        return false;
    }
    match fres(&out.join(" ")) {
        Ok(score) => fres_in_range(score),
        Err(_) => false,
    }
}

/// Generates one passing perturbation of some source near `slot`,
/// deterministically. Walks sources starting at `slot % len`, trying each
/// several times before advancing.
fn generate_slot(
    corpus: &[&Example],
    rule: &AugRule,
    lex: &Lexicons,
    stream: &str,
    slot: usize,
) -> Result<(usize, u8, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_indexed(rule.seed, stream, slot as u64));
    for j in 0..corpus.len() {
        let src = corpus[(slot + j) % corpus.len()];
        for _ in 0..MAX_TRIES {
            match perturb(&src.tokens, rule, lex, &mut rng) {
                Ok(out) => {
                    if passes_filters(&src.tokens, &out, lex) {
                        return Ok((src.id, src.label, out));
                    }
                }
                // This source is unusable for the method; move on.
                Err(CoreError::TooShort { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Err(CoreError::EmptySource(format!(
        "no source example produced a valid {} perturbation",
        rule.method
    )))
}

fn finish_examples(
    slots: Vec<(usize, u8, Vec<String>)>,
    method: Method,
    next_id: usize,
) -> Vec<Example> {
    slots
        .into_iter()
        .enumerate()
        .map(|(k, (origin_id, label, tokens))| Example {
            id: next_id + k,
            label,
            raw: tokens.join(" "),
            tokens,
            ids: Vec::new(),
            clp_ids: None,
            source: Some(method.name().to_string()),
            origin_id,
        })
        .collect()
}

/// Generates `round(ratio · |corpus|)` new examples per rule, each
/// label-preserved and filter-passing, with ids starting at `next_id`.
pub fn augment_corpus(
    corpus: &[Example],
    rules: &[AugRule],
    lex: &Lexicons,
    next_id: usize,
) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    if corpus.is_empty() {
        return Ok(out);
    }
    let sources: Vec<&Example> = corpus.iter().collect();
    let mut id = next_id;
    for rule in rules {
        rule.validate()?;
        let n_new = (rule.ratio * corpus.len() as f64).round() as usize;
        let slots: Vec<usize> = (0..n_new).collect();
        let stream = format!("augment:{}", rule.method);
        let produced = par::try_map_indexed(&slots, |_, &slot| {
            generate_slot(&sources, rule, lex, &stream, slot)
        })?;
        let examples = finish_examples(produced, rule.method, id);
        id += examples.len();
        out.extend(examples);
    }
    Ok(out)
}

/// Builds `n` manipulated hate-labeled texts from the hate examples of a
/// held-out split, cycling through sources with replacement.
pub fn make_attack_set(
    source_split: &[Example],
    rule: &AugRule,
    n: usize,
    lex: &Lexicons,
    next_id: usize,
) -> Result<Vec<Example>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    rule.validate()?;
    let hate: Vec<&Example> = source_split.iter().filter(|e| e.label == 1).collect();
    if hate.is_empty() {
        return Err(CoreError::EmptySource(format!(
            "attack generation for {} found no hate-labeled examples in the source split",
            rule.method
        )));
    }
    let slots: Vec<usize> = (0..n).collect();
    let stream = format!("attack:{}", rule.method);
    let produced = par::try_map_indexed(&slots, |_, &slot| {
        generate_slot(&hate, rule, lex, &stream, slot)
    })?;
    Ok(finish_examples(produced, rule.method, next_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::dataset::build_examples;
    use crate::pipeline::toy;

    fn rule(method: Method) -> AugRule {
        AugRule::new(method, 0.3, 42, 1.0).unwrap()
    }

    fn toy_examples(n: usize, seed: u64) -> Vec<Example> {
        build_examples(&toy::toy_corpus(n, seed))
    }

    #[test]
    fn rule_validation() {
        assert!(AugRule::new(Method::Charswap, 0.0, 0, 1.0).is_err());
        assert!(AugRule::new(Method::Charswap, 1.1, 0, 1.0).is_err());
        assert!(AugRule::new(Method::Charswap, 0.5, 0, 0.0).is_err());
        assert!(AugRule::new(Method::Charswap, 1.0, 0, 0.1).is_ok());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("gpt".parse::<Method>().is_err());
    }

    #[test]
    fn shipped_lexicons_are_complete() {
        let lex = Lexicons::shipped();
        assert!(lex.negations.contains("not"));
        assert!(lex.negations.contains("cannot"));
        assert!(lex.sensitive.contains("refugee"));
        assert!(lex.is_protected("URL"));
        assert!(lex.is_protected("never"));
        assert!(!lex.is_protected("lake"));
        assert!(!lex.synonyms.is_empty());
        assert!(lex.embedding("happy").is_some());
        assert_eq!(lex.pos_tags.get("quickly").map(String::as_str), Some("adv"));
        // Embedding rows stay sorted for deterministic scans.
        let words: Vec<&str> = lex.embedding_rows().iter().map(|(w, _)| w.as_str()).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
    }

    #[test]
    fn zero_embedding_vectors_are_rejected() {
        let err = parse_embeddings("word 0 0 0\n", "e.txt").unwrap_err();
        assert!(err.to_string().contains("zero"), "{err}");
    }

    #[test]
    fn filters_enforce_the_contract() {
        let lex = Lexicons::shipped();
        let src: Vec<String> = ["the", "refugee", "is", "not", "here", "today"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        // Identity fails.
        assert!(!passes_filters(&src, &src, &lex));
        // Dropping a negation fails.
        let mut dropped = src.clone();
        dropped.remove(3);
        assert!(!passes_filters(&src, &dropped, &lex));
        // Changing a sensitive word fails.
        let mut swapped = src.clone();
        swapped[1] = "refugees".into();
        assert!(!passes_filters(&src, &swapped, &lex));
        // An innocuous edit passes.
        let mut ok = src.clone();
        ok[5] = "now".into();
        assert!(passes_filters(&src, &ok, &lex));
        // Unreadable output fails.
        let unreadable: Vec<String> = std::iter::repeat("unbelievableness".to_string())
            .take(6)
            .collect();
        assert!(!passes_filters(&src, &unreadable, &lex));
    }

    #[test]
    fn ratio_controls_output_count() {
        let lex = Lexicons::shipped();
        let corpus = toy_examples(40, 7);
        for (ratio, expect) in [(0.1, 4usize), (0.5, 20), (1.0, 40)] {
            let rules = [AugRule::new(Method::Charswap, 0.3, 9, ratio).unwrap()];
            let out = augment_corpus(&corpus, &rules, &lex, 1000).unwrap();
            assert_eq!(out.len(), expect);
        }
    }

    #[test]
    fn outputs_are_labeled_tagged_and_distinct_from_sources() {
        let lex = Lexicons::shipped();
        let corpus = toy_examples(30, 3);
        let rules = [rule(Method::Charswap), rule(Method::Easydata)];
        let out = augment_corpus(&corpus, &rules, &lex, 100).unwrap();
        assert_eq!(out.len(), 60);
        for (k, ex) in out.iter().enumerate() {
            assert_eq!(ex.id, 100 + k);
            let src = corpus.iter().find(|s| s.id == ex.origin_id).unwrap();
            assert_eq!(ex.label, src.label);
            assert_ne!(ex.tokens, src.tokens);
            assert!(ex.source.is_some());
        }
        let tags: HashSet<&str> = out.iter().map(|e| e.source.as_deref().unwrap()).collect();
        assert_eq!(tags, HashSet::from(["charswap", "easydata"]));
    }

    #[test]
    fn augmentation_is_deterministic() {
        let lex = Lexicons::shipped();
        let corpus = toy_examples(25, 5);
        let rules = [rule(Method::Checklist), rule(Method::Wordnet)];
        let a = augment_corpus(&corpus, &rules, &lex, 0).unwrap();
        let b = augment_corpus(&corpus, &rules, &lex, 0).unwrap();
        assert_eq!(a, b);
        let mut other_seed = rules.clone();
        other_seed[1].seed += 1;
        let c = augment_corpus(&corpus, &other_seed, &lex, 0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_corpus_yields_empty_augmentation() {
        let lex = Lexicons::shipped();
        let out = augment_corpus(&[], &[rule(Method::Charswap)], &lex, 0).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn attack_set_basics() {
        let lex = Lexicons::shipped();
        let corpus = toy_examples(20, 11);
        let r = rule(Method::Charswap);

        assert!(make_attack_set(&corpus, &r, 0, &lex, 0).unwrap().is_empty());

        let legit_only: Vec<Example> =
            corpus.iter().filter(|e| e.label == 0).cloned().collect();
        assert!(matches!(
            make_attack_set(&legit_only, &r, 5, &lex, 0),
            Err(CoreError::EmptySource(_))
        ));

        let attacks = make_attack_set(&corpus, &r, 25, &lex, 500).unwrap();
        assert_eq!(attacks.len(), 25);
        let hate_ids: HashSet<usize> = corpus
            .iter()
            .filter(|e| e.label == 1)
            .map(|e| e.id)
            .collect();
        for a in &attacks {
            assert_eq!(a.label, 1);
            assert!(hate_ids.contains(&a.origin_id));
        }
        // Cycling with replacement: more attacks than sources.
        assert!(attacks.len() > hate_ids.len());
    }

    #[test]
    fn attack_sources_stay_inside_the_given_split() {
        let lex = Lexicons::shipped();
        let all = toy_examples(30, 13);
        let (train, test) = all.split_at(20);
        let r = rule(Method::Easydata);
        let attacks = make_attack_set(test, &r, 15, &lex, 900).unwrap();
        let train_ids: HashSet<usize> = train.iter().map(|e| e.id).collect();
        for a in &attacks {
            assert!(!train_ids.contains(&a.origin_id));
        }
    }
}
