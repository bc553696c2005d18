use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub const UNK: &str = "<unk>";
pub const ROOT: &str = "<root>";

/// Token inventory with training frequencies. Index 0 is the unknown
/// token and index 1 the virtual root when built with [`Vocab::with_specials`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_parts(tokens: Vec<String>, freqs: Vec<u64>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab {
            tokens,
            freqs,
            index,
        }
    }

    /// `<unk>`, `<root>`, then tokens seen at least `min_freq` times in
    /// descending frequency (ties by token order).
    pub fn with_specials<I, S>(items: I, min_freq: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for t in items {
            *counts.entry(t.as_ref().to_string()).or_default() += 1;
        }
        let mut sorted: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_freq.max(1) && t != UNK && t != ROOT)
            .collect();
        sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens = vec![UNK.to_string(), ROOT.to_string()];
        let mut freqs = vec![0, 0];
        for (t, c) in sorted {
            tokens.push(t);
            freqs.push(c);
        }
        Self::from_parts(tokens, freqs)
    }

    /// Fixed inventory without specials, e.g. dependency labels.
    pub fn fixed<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let freqs = vec![0; tokens.len()];
        Self::from_parts(tokens, freqs)
    }

    /// Adds tokens that are not present yet, with frequency 0.
    pub fn extend<I, S>(&mut self, tokens: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for t in tokens {
            let t = t.as_ref();
            if !self.index.contains_key(t) {
                self.index.insert(t.to_string(), self.tokens.len());
                self.tokens.push(t.to_string());
                self.freqs.push(0);
            }
        }
    }

    /// Rebuilds the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or of `<unk>`.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(0)
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn freq(&self, i: usize) -> u64 {
        self.freqs[i]
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    /// Training frequency of a token, 0 when unseen.
    pub fn count(&self, token: &str) -> u64 {
        self.get(token).map_or(0, |i| self.freqs[i])
    }
}
