//! Counterfactual pair generation: swap identity terms for interchangeable
//! counterparts so the objective's gap term can penalize prediction
//! differences between the original text and its counterfactual twin.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{CoreError, Result};

/// Groups of interchangeable lowercase identity terms. Multiword terms are
/// stored underscore-joined and matched as token n-grams.
#[derive(Clone, Debug, Default)]
pub struct IdentityLexicon {
    groups: Vec<Vec<String>>,
    /// term -> group index
    index: HashMap<String, usize>,
    /// longest n-gram length across all terms
    max_ngram: usize,
}

impl IdentityLexicon {
    pub fn from_groups(groups: Vec<Vec<String>>) -> Result<Self> {
        let mut index = HashMap::new();
        let mut max_ngram = 1;
        for (gi, group) in groups.iter().enumerate() {
            if group.len() < 2 {
                return Err(CoreError::Parse {
                    path: "identity lexicon".into(),
                    details: format!("group {} has fewer than 2 members", gi + 1),
                });
            }
            for term in group {
                if term.is_empty() || term.chars().any(char::is_whitespace) {
                    return Err(CoreError::Parse {
                        path: "identity lexicon".into(),
                        details: format!("bad term {term:?} in group {}", gi + 1),
                    });
                }
                if term.to_lowercase() != *term {
                    return Err(CoreError::Parse {
                        path: "identity lexicon".into(),
                        details: format!("term {term:?} must be lowercase"),
                    });
                }
                if index.insert(term.clone(), gi).is_some() {
                    return Err(CoreError::Parse {
                        path: "identity lexicon".into(),
                        details: format!("term {term:?} appears in more than one group"),
                    });
                }
                max_ngram = max_ngram.max(term.split('_').count());
            }
        }
        Ok(IdentityLexicon {
            groups,
            index,
            max_ngram,
        })
    }

    /// One group per line, members comma-separated; `#` starts a comment.
    /// The identity-group table bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse(
            include_str!("../data/identity_groups.txt"),
            "identity_groups.txt",
        )
        .expect("shipped identity groups parse")
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let members: Vec<String> = line
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect();
            if !members.is_empty() {
                groups.push(members);
            }
        }
        Self::from_groups(groups).map_err(|e| match e {
            CoreError::Parse { details, .. } => CoreError::Parse {
                path: path.to_string(),
                details,
            },
            other => other,
        })
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// All individual words that occur inside any term (n-grams split).
    pub fn member_words(&self) -> impl Iterator<Item = &str> {
        self.groups
            .iter()
            .flatten()
            .flat_map(|t| t.split('_'))
    }
}

/// Replaces every token (or underscore-joined n-gram) found in the lexicon
/// with a uniformly sampled different member of its group. Tokens outside
/// the lexicon pass through untouched; a text without matches comes back
/// unchanged, making its pair trivially gap-free.
///
/// Longer n-grams win over shorter matches starting at the same position.
pub fn make_clp<R: Rng>(tokens: &[String], lex: &IdentityLexicon, rng: &mut R) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut matched = None;
        let longest = lex.max_ngram.min(tokens.len() - i);
        for len in (1..=longest).rev() {
            let candidate = tokens[i..i + len].join("_");
            if let Some(&gi) = lex.index.get(&candidate) {
                matched = Some((len, gi, candidate));
                break;
            }
        }
        match matched {
            Some((len, gi, term)) => {
                let group = &lex.groups[gi];
                let others: Vec<&String> = group.iter().filter(|t| **t != term).collect();
                let pick = others[rng.gen_range(0..others.len())];
                out.extend(pick.split('_').map(str::to_string));
                i += len;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn lex(defs: &[&[&str]]) -> IdentityLexicon {
        IdentityLexicon::from_groups(
            defs.iter()
                .map(|g| g.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn swaps_the_identity_term() {
        let lex = lex(&[&["lesbian", "homosexual"]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = make_clp(&toks("the lesbian student will probably find"), &lex, &mut rng);
        assert_eq!(out, toks("the homosexual student will probably find"));
    }

    #[test]
    fn untouched_without_matches() {
        let lex = lex(&[&["lesbian", "homosexual"]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = toks("nothing sensitive here at all");
        assert_eq!(make_clp(&input, &lex, &mut rng), input);
    }

    #[test]
    fn replacement_is_seeded_and_never_the_original() {
        let lex = lex(&[&["alpha", "beta", "gamma"]]);
        let input = toks("we saw alpha yesterday");
        let first = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            make_clp(&input, &lex, &mut rng)
        };
        let second = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            make_clp(&input, &lex, &mut rng)
        };
        assert_eq!(first, second, "same seed, same draw");
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = make_clp(&input, &lex, &mut rng);
            assert_ne!(out[2], "alpha", "must pick a different member");
            assert!(lex.contains(&out[2]), "replacement stays in the group");
        }
    }

    #[test]
    fn positions_outside_lexicon_are_exactly_preserved() {
        let lex = lex(&[&["jew", "christian", "muslim"]]);
        let input = toks("a jew walked by a jew again");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = make_clp(&input, &lex, &mut rng);
        assert_eq!(out.len(), input.len());
        for (i, (a, b)) in input.iter().zip(&out).enumerate() {
            if i == 1 || i == 5 {
                assert_ne!(a, b);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn ngram_terms_match_across_token_boundaries() {
        let lex = lex(&[&["old_people", "young_people"]]);
        let input = toks("those old people left early");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = make_clp(&input, &lex, &mut rng);
        assert_eq!(out, toks("those young people left early"));
    }

    #[test]
    fn lexicon_validation() {
        assert!(IdentityLexicon::from_groups(vec![vec!["solo".into()]]).is_err());
        assert!(IdentityLexicon::from_groups(vec![
            vec!["a".into(), "b".into()],
            vec!["b".into(), "c".into()],
        ])
        .is_err());
        assert!(IdentityLexicon::from_groups(vec![vec!["x y".into(), "z".into()]]).is_err());
        assert!(IdentityLexicon::from_groups(vec![vec!["Upper".into(), "z".into()]]).is_err());
    }

    #[test]
    fn parse_file_format() {
        let text = "# comment\nlesbian, homosexual\n\njew,christian , muslim\n";
        let lex = IdentityLexicon::parse(text, "groups.txt").unwrap();
        assert_eq!(lex.groups().len(), 2);
        assert!(lex.contains("muslim"));
        let bad = IdentityLexicon::parse("solo\n", "groups.txt");
        assert!(matches!(bad, Err(CoreError::Parse { ref path, .. }) if path == "groups.txt"));
    }
}
