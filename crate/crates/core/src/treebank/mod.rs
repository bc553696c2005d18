//! Word-internal and sentence-level dependency treebanks.

mod format;
mod label;
mod split;
mod tree;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use format::{parse_any, AnyTreebank, ParseOptions};
pub use label::Label;
pub use split::{split_dataset, Split};
pub use tree::{
    is_projective, nonprojective_arcs, validate_heads, DepTree, ValidationReport, Violation,
};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreebankKind {
    WordInternal,
    Sentence,
}

impl TreebankKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TreebankKind::WordInternal => "word-internal",
            TreebankKind::Sentence => "sentence",
        }
    }
}

impl fmt::Display for TreebankKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreebankKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-internal" | "wist" => Ok(TreebankKind::WordInternal),
            "sentence" | "dep" => Ok(TreebankKind::Sentence),
            _ => Err(Error::InvalidArgument(format!("unknown treebank kind `{s}`"))),
        }
    }
}

/// A multi-character word with its internal structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEntry {
    pub surface: String,
    pub tree: DepTree,
    /// Coarse POS tags of the whole word, in file order.
    pub pos_tags: Vec<String>,
    /// Distinguishes multiple structures of one surface; starts at 1.
    pub sense_id: u32,
}

impl WordEntry {
    pub const DEFAULT_SENSE: u32 = 1;

    pub fn new(surface: impl Into<String>, tree: DepTree) -> Self {
        WordEntry {
            surface: surface.into(),
            tree,
            pos_tags: Vec::new(),
            sense_id: Self::DEFAULT_SENSE,
        }
    }

    pub fn with_pos<S: Into<String>>(mut self, tags: impl IntoIterator<Item = S>) -> Self {
        self.pos_tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_sense(mut self, sense_id: u32) -> Self {
        self.sense_id = sense_id;
        self
    }

    pub fn chars(&self) -> Vec<char> {
        self.surface.chars().collect()
    }

    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }

    /// Identifier used in diagnostics: `surface#sense`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.surface, self.sense_id)
    }
}

/// A dependency-annotated sentence; labels form an open set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceEntry {
    pub words: Vec<String>,
    pub heads: Vec<usize>,
    pub labels: Vec<String>,
    pub pos_tags: Option<Vec<String>>,
    pub is_punct: Vec<bool>,
}

impl SentenceEntry {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_heads(&self.heads)
    }
}

/// Rule deciding which sentence tokens count as punctuation.
///
/// A token is punctuation when its POS tag is one of `pos_tags`, or, when no
/// POS column is present, when every character is in `chars` or is ASCII
/// punctuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PunctRule {
    pub pos_tags: Vec<String>,
    pub chars: String,
}

impl Default for PunctRule {
    fn default() -> Self {
        PunctRule {
            pos_tags: vec!["PU".into(), "PUNCT".into()],
            chars: "，。、；：？！“”‘’《》〈〉（）【】「」『』—…·～".into(),
        }
    }
}

impl PunctRule {
    pub fn is_punct(&self, word: &str, pos: Option<&str>) -> bool {
        match pos {
            Some(p) => self.pos_tags.iter().any(|t| t == p),
            None => {
                !word.is_empty()
                    && word
                        .chars()
                        .all(|c| c.is_ascii_punctuation() || self.chars.contains(c))
            }
        }
    }
}

/// Entry types a treebank can hold.
pub trait Entry: Clone + fmt::Debug {
    const KIND: TreebankKind;

    /// Uniqueness key within a treebank, if the kind has one.
    fn key(&self) -> Option<(String, u32)> {
        None
    }

    fn heads(&self) -> &[usize];

    fn len(&self) -> usize {
        self.heads().len()
    }

    fn is_empty(&self) -> bool {
        self.heads().is_empty()
    }

    fn validate(&self) -> ValidationReport;

    /// Appends the entry's block (lines terminated by `\n`) to `out`.
    fn write_block(&self, out: &mut String);

    fn describe(&self) -> String;
}

impl Entry for WordEntry {
    const KIND: TreebankKind = TreebankKind::WordInternal;

    fn key(&self) -> Option<(String, u32)> {
        Some((self.surface.clone(), self.sense_id))
    }

    fn heads(&self) -> &[usize] {
        &self.tree.heads
    }

    fn validate(&self) -> ValidationReport {
        self.tree.validate()
    }

    fn write_block(&self, out: &mut String) {
        format::write_word_block(self, out)
    }

    fn describe(&self) -> String {
        self.id()
    }
}

impl Entry for SentenceEntry {
    const KIND: TreebankKind = TreebankKind::Sentence;

    fn heads(&self) -> &[usize] {
        &self.heads
    }

    fn validate(&self) -> ValidationReport {
        SentenceEntry::validate(self)
    }

    fn write_block(&self, out: &mut String) {
        format::write_sentence_block(self, out)
    }

    fn describe(&self) -> String {
        self.words.concat()
    }
}

/// Homogeneous sequence of entries in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Treebank<E> {
    pub entries: Vec<E>,
    /// Indices of entries that are legal but non-projective.
    pub nonprojective: Vec<usize>,
}

pub type WordTreebank = Treebank<WordEntry>;
pub type SentenceTreebank = Treebank<SentenceEntry>;

impl<E> Default for Treebank<E> {
    fn default() -> Self {
        Treebank {
            entries: Vec::new(),
            nonprojective: Vec::new(),
        }
    }
}

impl<E> Treebank<E> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, E> {
        self.entries.iter()
    }
}

impl<E: Entry> Treebank<E> {
    /// Builds a treebank from entries, enforcing legality and key uniqueness.
    pub fn from_entries(entries: Vec<E>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut nonprojective = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            let report = e.validate();
            if !report.is_legal() {
                return Err(Error::IllegalTree {
                    entry: e.describe(),
                    violations: report.violations,
                });
            }
            if !report.is_projective() {
                nonprojective.push(i);
            }
            if let Some(key) = e.key() {
                if !seen.insert(key.clone()) {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate entry {}#{}",
                        key.0, key.1
                    )));
                }
            }
        }
        Ok(Treebank {
            entries,
            nonprojective,
        })
    }

    pub fn kind(&self) -> TreebankKind {
        E::KIND
    }

    /// Number of scored positions (characters or words).
    pub fn token_count(&self) -> usize {
        self.entries.iter().map(Entry::len).sum()
    }

    /// Serializes all entries: blocks separated by one blank line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            e.write_block(&mut out);
        }
        out
    }

    /// Fails on the first non-projective entry, naming it.
    pub fn require_projective(&self) -> Result<()> {
        match self.nonprojective.first() {
            Some(&i) => Err(Error::NonProjective(self.entries[i].describe())),
            None => Ok(()),
        }
    }
}

impl WordTreebank {
    pub fn parse(text: &str) -> Result<Self> {
        format::parse_words(text)
    }
}

impl SentenceTreebank {
    pub fn parse(text: &str, opts: &ParseOptions) -> Result<Self> {
        format::parse_sentences(text, opts)
    }
}

/// Serializes one entry as a standalone block.
pub fn serialize_entry<E: Entry>(entry: &E) -> String {
    let mut out = String::new();
    entry.write_block(&mut out);
    out
}

impl<'a, E> IntoIterator for &'a Treebank<E> {
    type Item = &'a E;
    type IntoIter = std::slice::Iter<'a, E>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}
