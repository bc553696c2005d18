use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::parser::ParserModel;
use crate::scalar::Scalar;
use crate::treebank::{DepTree, Label, Treebank, WordEntry, WordTreebank};

/// Where a lexicon structure came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconSource {
    Gold,
    Parsed,
    Trivial,
}

/// One internal structure per surface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, (DepTree, LexiconSource)>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Gold structures; for surfaces with several senses the lowest sense id
    /// wins.
    pub fn from_gold(gold: &WordTreebank) -> Self {
        let mut best: BTreeMap<&str, &WordEntry> = BTreeMap::new();
        for e in gold {
            best.entry(e.surface.as_str())
                .and_modify(|cur| {
                    if e.sense_id < cur.sense_id {
                        *cur = e;
                    }
                })
                .or_insert(e);
        }
        Lexicon {
            entries: best
                .into_iter()
                .map(|(s, e)| (s.to_string(), (e.tree.clone(), LexiconSource::Gold)))
                .collect(),
        }
    }

    /// Gold structure when annotated, otherwise the parser's prediction;
    /// single characters get the one-node tree. Without a parser, unannotated
    /// multi-character surfaces are left out and resolved by
    /// [`Lexicon::structure`].
    pub fn build<'a, T: Scalar>(
        surfaces: impl IntoIterator<Item = &'a str>,
        gold: &WordTreebank,
        parser: Option<&ParserModel<T>>,
    ) -> Result<Self> {
        let mut lex = Self::from_gold(gold);
        for s in surfaces {
            if lex.entries.contains_key(s) || s.is_empty() {
                continue;
            }
            if s.chars().count() == 1 {
                lex.entries.insert(s.to_string(), (DepTree::trivial(), LexiconSource::Trivial));
            } else if let Some(p) = parser {
                let parsed = p.parse_word(s)?;
                lex.entries.insert(s.to_string(), (parsed.tree, LexiconSource::Parsed));
            }
        }
        Ok(lex)
    }

    pub fn insert(&mut self, surface: impl Into<String>, tree: DepTree, source: LexiconSource) {
        self.entries.insert(surface.into(), (tree, source));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&DepTree> {
        self.entries.get(surface).map(|(t, _)| t)
    }

    pub fn source(&self, surface: &str) -> Option<LexiconSource> {
        self.entries.get(surface).map(|(_, s)| *s)
    }

    /// Structure for any surface: the stored one, else [`fallback_tree`].
    pub fn structure(&self, surface: &str) -> DepTree {
        self.get(surface)
            .cloned()
            .unwrap_or_else(|| fallback_tree(surface.chars().count()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DepTree, LexiconSource)> {
        self.entries.iter().map(|(s, (t, src))| (s.as_str(), t, *src))
    }

    /// Multi-character entries as a treebank, in surface order.
    pub fn to_treebank(&self) -> Result<WordTreebank> {
        Treebank::from_entries(
            self.entries
                .iter()
                .filter(|(s, _)| s.chars().count() >= 2)
                .map(|(s, (t, _))| WordEntry::new(s.clone(), t.clone()))
                .collect(),
        )
    }

    /// `.wist` text of [`Lexicon::to_treebank`].
    pub fn to_wist(&self) -> Result<String> {
        Ok(self.to_treebank()?.to_text())
    }

    /// Reads a lexicon back from `.wist` text; every entry counts as gold.
    pub fn from_wist(text: &str) -> Result<Self> {
        Ok(Self::from_gold(&WordTreebank::parse(text)?))
    }
}

/// Right-headed default: every character attaches to the last one with
/// `att`; a single character is the one-node tree.
pub fn fallback_tree(n: usize) -> DepTree {
    if n <= 1 {
        return DepTree::trivial();
    }
    let mut heads = vec![n; n];
    let mut labels = vec![Label::Att; n];
    heads[n - 1] = 0;
    labels[n - 1] = Label::Root;
    DepTree::new(heads, labels)
}
