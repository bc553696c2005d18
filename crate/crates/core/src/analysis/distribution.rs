use std::collections::BTreeMap;

use serde::Serialize;

use super::{percent, percent_1dp};
use crate::error::{Error, Result};
use crate::treebank::{Label, WordTreebank};

pub const OVERALL: &str = "overall";

/// Coarse POS groups in table order, after the overall row.
pub const GROUP_ORDER: [&str; 8] = [
    OVERALL,
    "Noun",
    "Verb",
    "Proper Noun",
    "Adjective",
    "Adverb",
    "Numeral",
    "Others",
];

/// Folds a POS tag into one of the coarse groups. Accepts the coarse names
/// themselves and UD tags; anything else is `Others`.
pub fn coarse_pos(tag: &str) -> &'static str {
    match tag.trim().to_ascii_lowercase().as_str() {
        "noun" | "n" => "Noun",
        "verb" | "v" => "Verb",
        "proper noun" | "propn" => "Proper Noun",
        "adjective" | "adj" => "Adjective",
        "adverb" | "adv" => "Adverb",
        "numeral" | "num" => "Numeral",
        _ => "Others",
    }
}

/// Label counts per group; percentages are derived on demand.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DistributionTable {
    /// group -> label -> arc count
    pub counts: BTreeMap<String, BTreeMap<Label, u64>>,
    /// group -> total arcs
    pub totals: BTreeMap<String, u64>,
    /// group -> number of words contributing
    pub words: BTreeMap<String, u64>,
}

impl DistributionTable {
    /// Unrounded percentage of `label` within `group`.
    pub fn percentage(&self, group: &str, label: Label) -> Option<f64> {
        let total = *self.totals.get(group)?;
        let count = self.counts.get(group)?.get(&label).copied().unwrap_or(0);
        Some(percent(count, total))
    }

    /// Percentage rounded half-up to one decimal.
    pub fn rounded(&self, group: &str, label: Label) -> Option<f64> {
        let total = *self.totals.get(group)?;
        let count = self.counts.get(group)?.get(&label).copied().unwrap_or(0);
        Some(percent_1dp(count, total))
    }

    /// Rounded percentages for one row, every label present.
    pub fn row(&self, group: &str) -> Option<BTreeMap<Label, f64>> {
        self.totals.get(group)?;
        Some(
            Label::ALL
                .iter()
                .map(|&l| (l, self.rounded(group, l).unwrap_or(0.0)))
                .collect(),
        )
    }

    /// Groups present, in table order.
    pub fn groups(&self) -> Vec<&str> {
        GROUP_ORDER
            .iter()
            .copied()
            .filter(|g| self.totals.contains_key(*g))
            .collect()
    }

    /// Share of words (in percent of all words) that fall in `group`.
    pub fn word_share(&self, group: &str) -> Option<f64> {
        let all: u64 = self
            .words
            .iter()
            .filter(|(g, _)| g.as_str() != OVERALL)
            .map(|(_, &c)| c)
            .sum();
        Some(percent(*self.words.get(group)?, all))
    }

    fn add(&mut self, group: &str, labels: &[Label]) {
        let row = self.counts.entry(group.to_string()).or_default();
        for &l in labels {
            *row.entry(l).or_default() += 1;
        }
        *self.totals.entry(group.to_string()).or_default() += labels.len() as u64;
        *self.words.entry(group.to_string()).or_default() += 1;
    }
}

/// Label distribution overall and, optionally, per coarse POS group.
///
/// Every arc of a word counts, so repeated labels count repeatedly. A word
/// with several tags contributes its labels once to each distinct group;
/// words without tags go to `Others`.
pub fn label_distribution(tb: &WordTreebank, group_by_pos: bool) -> Result<DistributionTable> {
    if tb.is_empty() {
        return Err(Error::Empty("treebank".into()));
    }
    let mut table = DistributionTable::default();
    for e in tb {
        table.add(OVERALL, &e.tree.labels);
        if group_by_pos {
            let mut groups: Vec<&str> = e.pos_tags.iter().map(|t| coarse_pos(t)).collect();
            if groups.is_empty() {
                groups.push("Others");
            }
            groups.sort_unstable();
            groups.dedup();
            for g in groups {
                table.add(g, &e.tree.labels);
            }
        }
    }
    Ok(table)
}

/// Mean characters per word implied by the overall `root` share: each word
/// has exactly one root arc.
pub fn avg_word_length_from_root(dist: &DistributionTable) -> Result<f64> {
    let root = dist
        .percentage(OVERALL, Label::Root)
        .ok_or_else(|| Error::InvalidArgument("distribution lacks an overall row".into()))?;
    if root <= 0.0 {
        return Err(Error::InvalidArgument("root percentage is zero".into()));
    }
    Ok(100.0 / root)
}
