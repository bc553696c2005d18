//! Treebank analytics: label distributions, agreement and accuracy ratios,
//! and structural pattern statistics.
//!
//! All ratios are percentages. Reports keep the underlying counts so that
//! callers can recompute exact values; rounding to one decimal (half-up)
//! happens only when rendering.

mod agreement;
mod distribution;
mod patterns;
mod render;

pub use agreement::{
    annotation_accuracy, label_confusions, pairwise_consistency, AccuracyReport, AgreementReport,
    AnnotationSet, ConfusionReport, LabelAccuracy,
};
pub use distribution::{
    avg_word_length_from_root, coarse_pos, label_distribution, DistributionTable, GROUP_ORDER,
    OVERALL,
};
pub use patterns::{multi_structure_words, three_char_stats, PatternReport, ThreeCharPattern};
pub use render::{render_accuracy, render_agreement, render_distribution, render_patterns};

use crate::treebank::Label;

/// Column order used by the label tables.
pub const LABEL_DISPLAY_ORDER: [Label; 11] = [
    Label::Root,
    Label::Att,
    Label::Coo,
    Label::Frag,
    Label::Obj,
    Label::Adv,
    Label::Cmp,
    Label::Adjct,
    Label::Subj,
    Label::Repet,
    Label::Pobj,
];

/// `100 * num / den`, or 0 for an empty denominator.
pub fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// `100 * num / den` rounded half-up to one decimal, computed in integers.
pub fn percent_1dp(num: u64, den: u64) -> f64 {
    if den == 0 {
        return 0.0;
    }
    let num = num as u128;
    let den = den as u128;
    let tenths = (2000 * num + den) / (2 * den);
    tenths as f64 / 10.0
}

/// Half-up rounding of an arbitrary percentage to one decimal.
pub fn round_1dp(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding_is_exact() {
        // 1/8 = 12.5% -> 12.5; 1/16 = 6.25% -> 6.3; 1/3 -> 33.3; 2/3 -> 66.7
        assert_eq!(percent_1dp(1, 8), 12.5);
        assert_eq!(percent_1dp(1, 16), 6.3);
        assert_eq!(percent_1dp(1, 3), 33.3);
        assert_eq!(percent_1dp(2, 3), 66.7);
        assert_eq!(percent_1dp(0, 0), 0.0);
        assert_eq!(percent(3, 4), 75.0);
    }
}
