use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::percent;
use crate::error::{Error, Result};
use crate::treebank::{Label, WordEntry, WordTreebank};

/// One annotator's (or one submission slot's) trees.
#[derive(Clone, Debug)]
pub struct AnnotationSet {
    pub annotator: String,
    pub treebank: WordTreebank,
}

impl AnnotationSet {
    pub fn new(annotator: impl Into<String>, treebank: WordTreebank) -> Self {
        AnnotationSet {
            annotator: annotator.into(),
            treebank,
        }
    }

    fn by_key(&self) -> HashMap<(&str, u32), &WordEntry> {
        self.treebank
            .iter()
            .map(|e| ((e.surface.as_str(), e.sense_id), e))
            .collect()
    }
}

/// Inter-annotator consistency over a shared word list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub dep_labeled: f64,
    pub dep_unlabeled: f64,
    pub word_labeled: f64,
    pub word_unlabeled: f64,
    pub n_chars: u64,
    pub n_words: u64,
    pub chars_labeled: u64,
    pub chars_unlabeled: u64,
    pub words_labeled: u64,
    pub words_unlabeled: u64,
}

/// Share of characters (and whole words) given the same head, and the same
/// head and label, by two annotation sets over identical word lists.
pub fn pairwise_consistency(a: &AnnotationSet, b: &AnnotationSet) -> Result<AgreementReport> {
    let b_map = b.by_key();
    if a.treebank.len() != b_map.len() || b.treebank.len() != b_map.len() {
        return Err(Error::Mismatch(format!(
            "{} annotates {} words, {} annotates {}",
            a.annotator,
            a.treebank.len(),
            b.annotator,
            b.treebank.len()
        )));
    }
    let mut r = AgreementReport {
        dep_labeled: 0.0,
        dep_unlabeled: 0.0,
        word_labeled: 0.0,
        word_unlabeled: 0.0,
        n_chars: 0,
        n_words: 0,
        chars_labeled: 0,
        chars_unlabeled: 0,
        words_labeled: 0,
        words_unlabeled: 0,
    };
    for ea in &a.treebank {
        let eb = b_map
            .get(&(ea.surface.as_str(), ea.sense_id))
            .ok_or_else(|| {
                Error::Mismatch(format!("{} missing from {}", ea.id(), b.annotator))
            })?;
        let (ta, tb) = (&ea.tree, &eb.tree);
        let mut all_heads = true;
        let mut all_labeled = true;
        for i in 0..ta.len() {
            let head_ok = ta.heads[i] == tb.heads[i];
            let label_ok = head_ok && ta.labels[i] == tb.labels[i];
            r.chars_unlabeled += head_ok as u64;
            r.chars_labeled += label_ok as u64;
            all_heads &= head_ok;
            all_labeled &= label_ok;
        }
        r.n_chars += ta.len() as u64;
        r.n_words += 1;
        r.words_unlabeled += all_heads as u64;
        r.words_labeled += all_labeled as u64;
    }
    r.dep_labeled = percent(r.chars_labeled, r.n_chars);
    r.dep_unlabeled = percent(r.chars_unlabeled, r.n_chars);
    r.word_labeled = percent(r.words_labeled, r.n_words);
    r.word_unlabeled = percent(r.words_unlabeled, r.n_words);
    Ok(r)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LabelAccuracy {
    pub labeled: f64,
    pub unlabeled: f64,
    pub total: u64,
    pub correct_labeled: u64,
    pub correct_unlabeled: u64,
}

/// Accuracy of submissions against final answers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub overall_labeled: f64,
    pub overall_unlabeled: f64,
    pub word_labeled: f64,
    pub word_unlabeled: f64,
    /// Grouped by the final-answer label of each character.
    pub per_label: BTreeMap<Label, LabelAccuracy>,
    pub n_chars: u64,
    pub n_words: u64,
}

/// Compares every submitted tree with the gold tree of the same word; all
/// submissions together form the denominator.
pub fn annotation_accuracy(
    submissions: &[AnnotationSet],
    gold: &WordTreebank,
) -> Result<AccuracyReport> {
    let gold_map: HashMap<(&str, u32), &WordEntry> = gold
        .iter()
        .map(|e| ((e.surface.as_str(), e.sense_id), e))
        .collect();
    let mut per: BTreeMap<Label, LabelAccuracy> = BTreeMap::new();
    let (mut chars, mut chars_l, mut chars_u) = (0u64, 0u64, 0u64);
    let (mut words, mut words_l, mut words_u) = (0u64, 0u64, 0u64);
    for set in submissions {
        for e in &set.treebank {
            let g = gold_map
                .get(&(e.surface.as_str(), e.sense_id))
                .ok_or_else(|| {
                    Error::Mismatch(format!("{} submitted unknown word {}", set.annotator, e.id()))
                })?;
            if g.tree.len() != e.tree.len() {
                return Err(Error::Mismatch(format!("length mismatch for {}", e.id())));
            }
            let mut all_u = true;
            let mut all_l = true;
            for i in 0..e.tree.len() {
                let u = e.tree.heads[i] == g.tree.heads[i];
                let l = u && e.tree.labels[i] == g.tree.labels[i];
                let slot = per.entry(g.tree.labels[i]).or_default();
                slot.total += 1;
                slot.correct_unlabeled += u as u64;
                slot.correct_labeled += l as u64;
                chars += 1;
                chars_u += u as u64;
                chars_l += l as u64;
                all_u &= u;
                all_l &= l;
            }
            words += 1;
            words_u += all_u as u64;
            words_l += all_l as u64;
        }
    }
    if words == 0 {
        return Err(Error::Empty("submissions".into()));
    }
    for slot in per.values_mut() {
        slot.labeled = percent(slot.correct_labeled, slot.total);
        slot.unlabeled = percent(slot.correct_unlabeled, slot.total);
    }
    Ok(AccuracyReport {
        overall_labeled: percent(chars_l, chars),
        overall_unlabeled: percent(chars_u, chars),
        word_labeled: percent(words_l, words),
        word_unlabeled: percent(words_u, words),
        per_label: per,
        n_chars: chars,
        n_words: words,
    })
}

/// Label confusions among characters given the same head but different
/// labels, as unordered pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConfusionReport {
    pub total: u64,
    /// `"a,b"` with `a` ordered before `b` -> (count, percent of total)
    pub pairs: BTreeMap<String, (u64, f64)>,
}

pub fn label_confusions(a: &AnnotationSet, b: &AnnotationSet) -> Result<ConfusionReport> {
    let b_map = b.by_key();
    let mut counts: BTreeMap<(Label, Label), u64> = BTreeMap::new();
    let mut total = 0;
    for ea in &a.treebank {
        let eb = b_map
            .get(&(ea.surface.as_str(), ea.sense_id))
            .ok_or_else(|| Error::Mismatch(format!("{} missing from {}", ea.id(), b.annotator)))?;
        for i in 0..ea.tree.len() {
            let (la, lb) = (ea.tree.labels[i], eb.tree.labels[i]);
            if ea.tree.heads[i] == eb.tree.heads[i] && la != lb {
                *counts.entry((la.min(lb), la.max(lb))).or_default() += 1;
                total += 1;
            }
        }
    }
    Ok(ConfusionReport {
        total,
        pairs: counts
            .into_iter()
            .map(|((x, y), c)| (format!("{x},{y}"), (c, percent(c, total))))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{DepTree, Treebank};
    use Label::*;

    fn set(name: &str, entries: Vec<WordEntry>) -> AnnotationSet {
        AnnotationSet::new(name, Treebank::from_entries(entries).unwrap())
    }

    fn w(s: &str, heads: Vec<usize>, labels: Vec<Label>) -> WordEntry {
        WordEntry::new(s, DepTree::new(heads, labels))
    }

    #[test]
    fn self_agreement_is_total() {
        let a = set("a", vec![w("常常", vec![0, 1], vec![Root, Repet])]);
        let r = pairwise_consistency(&a, &a).unwrap();
        assert_eq!(
            (r.dep_labeled, r.dep_unlabeled, r.word_labeled, r.word_unlabeled),
            (100.0, 100.0, 100.0, 100.0)
        );
    }

    #[test]
    fn one_label_disagreement() {
        let a = set(
            "a",
            vec![w("常常", vec![0, 1], vec![Root, Repet]), w("大衣", vec![2, 0], vec![Att, Root])],
        );
        let b = set(
            "b",
            vec![w("常常", vec![0, 1], vec![Root, Repet]), w("大衣", vec![2, 0], vec![Adv, Root])],
        );
        let r = pairwise_consistency(&a, &b).unwrap();
        assert_eq!(r.dep_labeled, 75.0);
        assert_eq!(r.dep_unlabeled, 100.0);
        assert_eq!(r.word_labeled, 50.0);
        assert_eq!(r.word_unlabeled, 100.0);
        assert_eq!(pairwise_consistency(&b, &a).unwrap(), r);

        let c = label_confusions(&a, &b).unwrap();
        assert_eq!(c.total, 1);
        assert_eq!(c.pairs["att,adv"], (1, 100.0));
    }

    #[test]
    fn mismatched_word_lists_fail() {
        let a = set("a", vec![w("常常", vec![0, 1], vec![Root, Repet])]);
        let b = set("b", vec![w("大衣", vec![2, 0], vec![Att, Root])]);
        assert!(pairwise_consistency(&a, &b).is_err());
    }

    #[test]
    fn accuracy_against_gold() {
        let gold = Treebank::from_entries(vec![
            w("常常", vec![0, 1], vec![Root, Repet]),
            w("大衣", vec![2, 0], vec![Att, Root]),
        ])
        .unwrap();
        let perfect = AnnotationSet::new("a", gold.clone());
        let r = annotation_accuracy(std::slice::from_ref(&perfect), &gold).unwrap();
        assert_eq!((r.overall_labeled, r.word_labeled), (100.0, 100.0));

        let sloppy = set(
            "b",
            vec![w("常常", vec![2, 0], vec![Repet, Root]), w("大衣", vec![2, 0], vec![Adv, Root])],
        );
        let r = annotation_accuracy(&[perfect, sloppy], &gold).unwrap();
        assert_eq!(r.n_chars, 8);
        assert_eq!(r.overall_labeled, 62.5);
        assert_eq!(r.overall_unlabeled, 75.0);
        assert_eq!(r.word_labeled, 50.0);
        assert_eq!(r.word_unlabeled, 75.0);
        assert_eq!(r.per_label[&Att].labeled, 50.0);
        assert_eq!(r.per_label[&Att].unlabeled, 100.0);
        assert_eq!(r.per_label[&Repet].unlabeled, 50.0);
        assert_eq!(r.per_label.values().map(|s| s.total).sum::<u64>(), 8);

        let stranger = set("c", vec![w("下雨", vec![0, 1], vec![Root, Obj])]);
        assert!(annotation_accuracy(&[stranger], &gold).is_err());
    }
}
