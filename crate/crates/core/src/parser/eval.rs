use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ParserModel;
use super::vocab::Vocab;
use crate::analysis::percent;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::treebank::{DepTree, SentenceTreebank, WordTreebank};

/// Counts behind one accuracy row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub total: u64,
    pub head: u64,
    pub labeled: u64,
}

impl Tally {
    pub fn uas(&self) -> f64 {
        percent(self.head, self.total)
    }

    pub fn las(&self) -> f64 {
        percent(self.labeled, self.total)
    }

    fn add(&mut self, head_ok: bool, label_ok: bool) {
        self.total += 1;
        self.head += head_ok as u64;
        self.labeled += (head_ok && label_ok) as u64;
    }
}

/// Attachment scores in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub uas: f64,
    pub las: f64,
    pub cm: f64,
    /// Scored entries (surfaces in word-internal mode).
    pub n_entries: u64,
    /// Scored positions.
    pub n_tokens: u64,
    pub tokens: Tally,
    pub complete: u64,
    /// Keyed by gold label.
    pub per_label: BTreeMap<String, Tally>,
    /// Sentence mode only: keyed by training frequency of the word,
    /// `unknown`, `<=2` or `>2`.
    pub buckets: BTreeMap<String, Tally>,
}

#[derive(Default)]
struct Acc {
    tokens: Tally,
    entries: u64,
    complete: u64,
    per_label: BTreeMap<String, Tally>,
    buckets: BTreeMap<String, Tally>,
}

impl Acc {
    fn finish(self) -> Result<EvalReport> {
        if self.entries == 0 {
            return Err(Error::Empty("nothing to evaluate".into()));
        }
        Ok(EvalReport {
            uas: self.tokens.uas(),
            las: self.tokens.las(),
            cm: percent(self.complete, self.entries),
            n_entries: self.entries,
            n_tokens: self.tokens.total,
            tokens: self.tokens,
            complete: self.complete,
            per_label: self.per_label,
            buckets: self.buckets,
        })
    }
}

/// Scores one predicted tree per surface against a word treebank.
///
/// Surfaces with several gold senses are scored once: per-arc counts use
/// the sense with most labeled (then unlabeled) matches, lowest sense id on
/// ties, and a complete match against any sense counts.
pub fn score_words(gold: &WordTreebank, predicted: &BTreeMap<String, DepTree>) -> Result<EvalReport> {
    let mut acc = Acc::default();
    for (surface, senses) in group_senses(gold) {
        let pred = predicted
            .get(surface)
            .ok_or_else(|| Error::Mismatch(format!("no prediction for {surface}")))?;
        let mut best: Option<(usize, usize, &DepTree)> = None;
        let mut complete = false;
        for tree in senses {
            if tree.len() != pred.len() {
                return Err(Error::Mismatch(format!(
                    "prediction for {surface} has {} nodes, gold has {}",
                    pred.len(),
                    tree.len()
                )));
            }
            let (head, labeled) = matches(&tree.heads, &pred.heads, |i| tree.labels[i] == pred.labels[i]);
            complete |= labeled == tree.len();
            if best.is_none_or(|(bl, bh, _)| (labeled, head) > (bl, bh)) {
                best = Some((labeled, head, tree));
            }
        }
        let (_, _, tree) = best.expect("every surface has a sense");
        for i in 0..tree.len() {
            let head_ok = tree.heads[i] == pred.heads[i];
            let label_ok = tree.labels[i] == pred.labels[i];
            acc.tokens.add(head_ok, label_ok);
            acc.per_label
                .entry(tree.labels[i].to_string())
                .or_default()
                .add(head_ok, label_ok);
        }
        acc.entries += 1;
        acc.complete += complete as u64;
    }
    acc.finish()
}

/// Gold senses per surface, in surface order, senses by id.
fn group_senses(gold: &WordTreebank) -> BTreeMap<&str, Vec<&DepTree>> {
    let mut by_surface: BTreeMap<&str, Vec<(u32, &DepTree)>> = BTreeMap::new();
    for e in gold {
        by_surface.entry(&e.surface).or_default().push((e.sense_id, &e.tree));
    }
    by_surface
        .into_iter()
        .map(|(s, mut v)| {
            v.sort_by_key(|(id, _)| *id);
            (s, v.into_iter().map(|(_, t)| t).collect())
        })
        .collect()
}

fn matches(gold: &[usize], pred: &[usize], label_eq: impl Fn(usize) -> bool) -> (usize, usize) {
    let mut head = 0;
    let mut labeled = 0;
    for i in 0..gold.len() {
        if gold[i] == pred[i] {
            head += 1;
            labeled += label_eq(i) as usize;
        }
    }
    (head, labeled)
}

/// Frequency bucket of a word with `count` training occurrences.
pub fn frequency_bucket(count: u64) -> &'static str {
    match count {
        0 => "unknown",
        1..=2 => "<=2",
        _ => ">2",
    }
}

/// Scores predicted `(heads, labels)` per sentence, excluding punctuation
/// everywhere. With `train_counts`, LAS is also bucketed by word frequency.
pub fn score_sentences(
    gold: &SentenceTreebank,
    predicted: &[(Vec<usize>, Vec<String>)],
    train_counts: Option<&Vocab>,
) -> Result<EvalReport> {
    if predicted.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} sentences",
            predicted.len(),
            gold.len()
        )));
    }
    let mut acc = Acc::default();
    for (e, (heads, labels)) in gold.iter().zip(predicted) {
        if heads.len() != e.len() || labels.len() != e.len() {
            return Err(Error::Mismatch("prediction length differs from sentence".into()));
        }
        let mut all_ok = true;
        for i in 0..e.len() {
            if e.is_punct[i] {
                continue;
            }
            let head_ok = heads[i] == e.heads[i];
            let label_ok = labels[i] == e.labels[i];
            all_ok &= head_ok && label_ok;
            acc.tokens.add(head_ok, label_ok);
            acc.per_label
                .entry(e.labels[i].clone())
                .or_default()
                .add(head_ok, label_ok);
            if let Some(v) = train_counts {
                acc.buckets
                    .entry(frequency_bucket(v.count(&e.words[i])).to_string())
                    .or_default()
                    .add(head_ok, label_ok);
            }
        }
        acc.entries += 1;
        acc.complete += all_ok as u64;
    }
    acc.finish()
}

impl<T: Scalar> ParserModel<T> {
    /// One prediction per distinct surface; single characters get the
    /// one-node tree.
    pub fn predict_words(&self, tb: &WordTreebank) -> Result<BTreeMap<String, DepTree>> {
        let surfaces: Vec<&str> = group_senses(tb).into_keys().collect();
        surfaces
            .par_iter()
            .map(|&s| {
                let tree = if s.chars().count() < 2 {
                    DepTree::trivial()
                } else {
                    self.parse_word(s)?.tree
                };
                Ok((s.to_string(), tree))
            })
            .collect()
    }

    pub fn predict_sentences(&self, tb: &SentenceTreebank) -> Result<Vec<(Vec<usize>, Vec<String>)>> {
        tb.entries
            .par_iter()
            .map(|e| self.parse_sentence(&e.words, e.pos_tags.as_deref()))
            .collect()
    }

    pub fn evaluate_words(&self, tb: &WordTreebank) -> Result<EvalReport> {
        score_words(tb, &self.predict_words(tb)?)
    }

    pub fn evaluate_sentences(&self, tb: &SentenceTreebank) -> Result<EvalReport> {
        let pred = self.predict_sentences(tb)?;
        score_sentences(tb, &pred, self.vocabs.word_counts.as_ref())
    }
}
