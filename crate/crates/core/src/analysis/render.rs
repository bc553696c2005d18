use std::fmt::Write as _;

use super::{
    round_1dp, AccuracyReport, AgreementReport, DistributionTable, PatternReport,
    LABEL_DISPLAY_ORDER, OVERALL,
};

fn label_header(out: &mut String, first: &str, width: usize) {
    let _ = write!(out, "{first:<width$}");
    for l in LABEL_DISPLAY_ORDER {
        let _ = write!(out, "{:>7}", l.as_str());
    }
    out.push('\n');
}

pub fn render_distribution(dist: &DistributionTable) -> String {
    let mut out = String::new();
    let width = 22;
    label_header(&mut out, "group", width);
    for g in dist.groups() {
        let name = if g == OVERALL {
            "Overall".to_string()
        } else {
            format!("  {g} ({:.1}%)", round_1dp(dist.word_share(g).unwrap_or(0.0)))
        };
        let _ = write!(out, "{name:<width$}");
        for l in LABEL_DISPLAY_ORDER {
            let _ = write!(out, "{:>7.1}", dist.rounded(g, l).unwrap_or(0.0));
        }
        out.push('\n');
    }
    out
}

pub fn render_agreement(r: &AgreementReport) -> String {
    format!(
        "{:<12}{:>10}{:>12}\n{:<12}{:>10.1}{:>12.1}\n{:<12}{:>10.1}{:>12.1}\n({} words, {} characters)\n",
        "",
        "labeled",
        "unlabeled",
        "dep-wise",
        round_1dp(r.dep_labeled),
        round_1dp(r.dep_unlabeled),
        "word-wise",
        round_1dp(r.word_labeled),
        round_1dp(r.word_unlabeled),
        r.n_words,
        r.n_chars,
    )
}

pub fn render_accuracy(r: &AccuracyReport) -> String {
    let mut out = format!(
        "overall dep-wise {:.1} / {:.1} unlabeled, word-wise {:.1} / {:.1} unlabeled\n",
        round_1dp(r.overall_labeled),
        round_1dp(r.overall_unlabeled),
        round_1dp(r.word_labeled),
        round_1dp(r.word_unlabeled),
    );
    let width = 12;
    label_header(&mut out, "", width);
    for (name, pick) in [("labeled", true), ("unlabeled", false)] {
        let _ = write!(out, "{name:<width$}");
        for l in LABEL_DISPLAY_ORDER {
            match r.per_label.get(&l) {
                Some(s) => {
                    let v = if pick { s.labeled } else { s.unlabeled };
                    let _ = write!(out, "{:>7.1}", round_1dp(v));
                }
                None => {
                    let _ = write!(out, "{:>7}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_patterns(r: &PatternReport) -> String {
    let mut out = format!(
        "three-char words: {}\nroot position  1st {:.1}  2nd {:.1}  3rd {:.1}\n",
        r.n_words,
        round_1dp(r.root_position[0]),
        round_1dp(r.root_position[1]),
        round_1dp(r.root_position[2]),
    );
    for (p, pct) in &r.patterns {
        let _ = writeln!(out, "{:<10}{:>7.1}%", p.notation(), round_1dp(*pct));
    }
    out
}
