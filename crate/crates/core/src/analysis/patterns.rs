use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::percent;
use crate::error::{Error, Result};
use crate::treebank::WordTreebank;

/// Unlabeled shapes of three-character words. Arrows point from head to
/// dependent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ThreeCharPattern {
    /// `1 ← 2 ← 3`: heads `[2, 3, 0]`.
    LeftChain,
    /// `(1 → 2) ← 3`: heads `[3, 1, 0]`.
    HeadedPairUnderThird,
    /// `1 ← 2 → 3`: heads `[2, 0, 2]`.
    MiddleHead,
    /// `1 → 2 → 3`: heads `[0, 1, 2]`.
    RightChain,
    Other,
}

impl ThreeCharPattern {
    pub const ALL: [ThreeCharPattern; 5] = [
        ThreeCharPattern::LeftChain,
        ThreeCharPattern::HeadedPairUnderThird,
        ThreeCharPattern::MiddleHead,
        ThreeCharPattern::RightChain,
        ThreeCharPattern::Other,
    ];

    pub fn classify(heads: &[usize]) -> Self {
        match heads {
            [2, 3, 0] => ThreeCharPattern::LeftChain,
            [3, 1, 0] => ThreeCharPattern::HeadedPairUnderThird,
            [2, 0, 2] => ThreeCharPattern::MiddleHead,
            [0, 1, 2] => ThreeCharPattern::RightChain,
            _ => ThreeCharPattern::Other,
        }
    }

    pub fn notation(self) -> &'static str {
        match self {
            ThreeCharPattern::LeftChain => "1←2←3",
            ThreeCharPattern::HeadedPairUnderThird => "(1→2)←3",
            ThreeCharPattern::MiddleHead => "1←2→3",
            ThreeCharPattern::RightChain => "1→2→3",
            ThreeCharPattern::Other => "other",
        }
    }
}

impl fmt::Display for ThreeCharPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.notation())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternReport {
    pub n_words: u64,
    /// Percent of three-character words whose root is at position 1, 2, 3.
    pub root_position: [f64; 3],
    /// Percent per pattern in [`ThreeCharPattern::ALL`] order.
    pub patterns: Vec<(ThreeCharPattern, f64)>,
    pub pattern_counts: Vec<(ThreeCharPattern, u64)>,
}

/// Root positions and head patterns over all three-character words.
pub fn three_char_stats(tb: &WordTreebank) -> Result<PatternReport> {
    let mut root_counts = [0u64; 3];
    let mut counts: HashMap<ThreeCharPattern, u64> = HashMap::new();
    let mut n = 0u64;
    for e in tb.iter().filter(|e| e.tree.len() == 3) {
        n += 1;
        if let Some(r) = e.tree.root() {
            root_counts[r - 1] += 1;
        }
        *counts
            .entry(ThreeCharPattern::classify(&e.tree.heads))
            .or_default() += 1;
    }
    if n == 0 {
        return Err(Error::Empty("no three-character words".into()));
    }
    let pattern_counts: Vec<_> = ThreeCharPattern::ALL
        .iter()
        .map(|&p| (p, counts.get(&p).copied().unwrap_or(0)))
        .collect();
    Ok(PatternReport {
        n_words: n,
        root_position: root_counts.map(|c| percent(c, n)),
        patterns: pattern_counts
            .iter()
            .map(|&(p, c)| (p, percent(c, n)))
            .collect(),
        pattern_counts,
    })
}

/// Surfaces with at least two entries whose trees differ, in order of first
/// appearance.
pub fn multi_structure_words(tb: &WordTreebank) -> Vec<String> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in tb.iter().enumerate() {
        let g = groups.entry(e.surface.as_str()).or_default();
        if g.is_empty() {
            order.push(e.surface.as_str());
        }
        g.push(i);
    }
    order
        .into_iter()
        .filter(|s| {
            let idx = &groups[s];
            let first = &tb.entries[idx[0]].tree;
            idx[1..].iter().any(|&i| tb.entries[i].tree != *first)
        })
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{DepTree, Label, Treebank, WordEntry};
    use Label::*;

    #[test]
    fn shangxiawen_is_headed_pair_under_third() {
        let tb = Treebank::from_entries(vec![WordEntry::new(
            "上下文",
            DepTree::new(vec![3, 1, 0], vec![Coo, Coo, Root]),
        )])
        .unwrap();
        let r = three_char_stats(&tb).unwrap();
        assert_eq!(r.root_position, [0.0, 0.0, 100.0]);
        assert_eq!(r.patterns[1], (ThreeCharPattern::HeadedPairUnderThird, 100.0));
        let sum: f64 = r.patterns.iter().map(|p| p.1).sum();
        assert_eq!(sum, 100.0);
    }

    #[test]
    fn no_three_char_words_is_an_error() {
        let tb = Treebank::from_entries(vec![WordEntry::new(
            "常常",
            DepTree::new(vec![0, 1], vec![Root, Repet]),
        )])
        .unwrap();
        assert!(three_char_stats(&tb).is_err());
    }

    #[test]
    fn zhifu_has_two_structures() {
        let tb = Treebank::from_entries(vec![
            WordEntry::new("制服", DepTree::new(vec![0, 1], vec![Root, Cmp])).with_pos(["Verb"]),
            WordEntry::new("常常", DepTree::new(vec![0, 1], vec![Root, Repet])),
            WordEntry::new("制服", DepTree::new(vec![2, 0], vec![Att, Root]))
                .with_pos(["Noun"])
                .with_sense(2),
            WordEntry::new("常常", DepTree::new(vec![0, 1], vec![Root, Repet])).with_sense(2),
        ])
        .unwrap();
        assert_eq!(multi_structure_words(&tb), vec!["制服".to_string()]);
    }
}
