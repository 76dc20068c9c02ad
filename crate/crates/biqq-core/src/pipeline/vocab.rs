//! Whitespace-token vocabulary with four reserved ids.
//!
//! Ids 0..=3 are fixed: padding, unknown, and the two preprocessing
//! sentinels `URL` / `MENTION`. Corpus tokens that clear the frequency
//! floor get ids from 4 upward in (frequency descending, then
//! lexicographic) order, so the same corpus always yields the same id
//! assignment regardless of hash-map iteration order.

use std::collections::HashMap;

use crate::{MENTION_ID, UNK_ID, URL_ID};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const URL_TOKEN: &str = "URL";
pub const MENTION_TOKEN: &str = "MENTION";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    /// Token string at each id; indices 0..4 hold the reserved tokens.
    words: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    fn with_specials() -> Self {
        let words = vec![
            PAD_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
            URL_TOKEN.to_string(),
            MENTION_TOKEN.to_string(),
        ];
        let mut ids = HashMap::new();
        ids.insert(URL_TOKEN.to_string(), URL_ID);
        ids.insert(MENTION_TOKEN.to_string(), MENTION_ID);
        Vocab { words, ids }
    }

    fn push_word(&mut self, word: String) {
        let id = self.words.len();
        self.ids.insert(word.clone(), id);
        self.words.push(word);
    }

    /// Builds a vocabulary from token lists, keeping tokens whose total
    /// frequency is at least `min_freq`. The sentinel tokens are always
    /// present and never counted toward the frequency pool.
    pub fn from_corpus<'a, I>(token_lists: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for tokens in token_lists {
            for tok in tokens {
                if tok == URL_TOKEN || tok == MENTION_TOKEN {
                    continue;
                }
                *freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = freq
            .into_iter()
            .filter(|&(_, n)| n >= min_freq.max(1))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut vocab = Vocab::with_specials();
        for (word, _) in kept {
            vocab.push_word(word.to_string());
        }
        vocab
    }

    /// Number of ids, reserved ones included; equals the embedding row
    /// count the model needs.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_of(&self, word: &str) -> Option<usize> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    /// Maps tokens to ids, sending out-of-vocabulary tokens to the
    /// unknown id.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.ids.get(t.as_str()).copied().unwrap_or(UNK_ID))
            .collect()
    }

    /// Space-joined non-reserved words in id order, for embedding in a
    /// checkpoint manifest. Tokens never contain whitespace after
    /// preprocessing, so the encoding is unambiguous.
    pub fn manifest_words(&self) -> String {
        self.words[4..].join(" ")
    }

    /// Inverse of [`Vocab::manifest_words`].
    pub fn from_manifest_words(s: &str) -> Self {
        let mut vocab = Vocab::with_specials();
        for word in s.split_whitespace() {
            vocab.push_word(word.to_string());
        }
        vocab
    }
}
