use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Relation between a character and its head inside a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Attached to the virtual root; the semantic core of the word.
    Root,
    /// Subject-predicate.
    Subj,
    /// Verb-object.
    Obj,
    /// Attribute modifying a nominal head.
    Att,
    /// Adverbial modifying a predicate.
    Adv,
    /// Complement following a predicate.
    Cmp,
    /// Coordination.
    Coo,
    /// Object of a preposition.
    Pobj,
    /// Adjunct: auxiliary or affix-like character.
    Adjct,
    /// No semantic composition (transliterations, proper nouns, ...).
    Frag,
    /// Reduplication.
    Repet,
}

impl Label {
    pub const ALL: [Label; 11] = [
        Label::Root,
        Label::Subj,
        Label::Obj,
        Label::Att,
        Label::Adv,
        Label::Cmp,
        Label::Coo,
        Label::Pobj,
        Label::Adjct,
        Label::Frag,
        Label::Repet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Root => "root",
            Label::Subj => "subj",
            Label::Obj => "obj",
            Label::Att => "att",
            Label::Adv => "adv",
            Label::Cmp => "cmp",
            Label::Coo => "coo",
            Label::Pobj => "pobj",
            Label::Adjct => "adjct",
            Label::Frag => "frag",
            Label::Repet => "repet",
        }
    }

    /// Position in [`Label::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Label> {
        Label::ALL.get(idx).copied()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eleven_labels_round_trip_through_strings() {
        assert_eq!(Label::ALL.len(), 11);
        for (i, l) in Label::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(l.as_str().parse::<Label>().unwrap(), *l);
        }
    }

    #[test]
    fn unknown_label_is_an_error() {
        assert!("nsubj".parse::<Label>().is_err());
        assert!("Root".parse::<Label>().is_err());
        assert!("".parse::<Label>().is_err());
    }
}
