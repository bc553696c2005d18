//! Block format shared by `.wist` and `.dep` files.
//!
//! ```text
//! # pos = NOUN
//! 1	婚	3	att
//! 2	姻	1	coo
//! 3	法	0	root
//! ```
//!
//! One tab-separated row per node (`index char head label`, 1-based, head 0
//! is the virtual root), `#` metadata lines, a blank line between entries.
//! Sentence rows carry a word instead of a character and may add a fifth
//! POS column. An optional first line `# kind = word-internal|sentence`
//! declares the file kind.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{
    validate_heads, DepTree, Label, PunctRule, SentenceEntry, SentenceTreebank, Treebank,
    TreebankKind, WordEntry, WordTreebank,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub punct: PunctRule,
}

/// Treebank of either kind, as found in a file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTreebank {
    Words(WordTreebank),
    Sentences(SentenceTreebank),
}

impl AnyTreebank {
    pub fn kind(&self) -> TreebankKind {
        match self {
            AnyTreebank::Words(_) => TreebankKind::WordInternal,
            AnyTreebank::Sentences(_) => TreebankKind::Sentence,
        }
    }
}

struct Row<'a> {
    line: usize,
    text: &'a str,
    fields: Vec<&'a str>,
}

impl Row<'_> {
    /// 1-based character column where field `idx` starts.
    fn column(&self, idx: usize) -> usize {
        let mut col = 1;
        for f in self.fields.iter().take(idx) {
            col += f.chars().count() + 1;
        }
        col
    }

    fn err(&self, idx: usize, message: impl Into<String>) -> Error {
        Error::format(self.line, self.column(idx), message)
    }
}

struct Block<'a> {
    start: usize,
    meta: Vec<(usize, &'a str, &'a str)>,
    rows: Vec<Row<'a>>,
}

/// Splits text into blocks. Returns the declared kind, if any.
fn blocks(text: &str) -> Result<(Option<TreebankKind>, Vec<Block<'_>>)> {
    let mut kind = None;
    let mut out = Vec::new();
    let mut cur: Option<Block> = None;
    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            if let Some(b) = cur.take() {
                out.push(b);
            }
            continue;
        }
        if let Some(rest) = raw.strip_prefix('#') {
            let (key, value) = match rest.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (rest.trim(), ""),
            };
            if key == "kind" {
                if line != 1 {
                    return Err(Error::format(line, 1, "`kind` header must be the first line"));
                }
                kind = Some(value.parse().map_err(|_| {
                    Error::format(line, 1, format!("unknown treebank kind `{value}`"))
                })?);
                continue;
            }
            cur.get_or_insert_with(|| Block {
                start: line,
                meta: Vec::new(),
                rows: Vec::new(),
            })
            .meta
            .push((line, key, value));
            continue;
        }
        cur.get_or_insert_with(|| Block {
            start: line,
            meta: Vec::new(),
            rows: Vec::new(),
        })
        .rows
        .push(Row {
            line,
            text: raw,
            fields: raw.split('\t').collect(),
        });
    }
    if let Some(b) = cur.take() {
        out.push(b);
    }
    Ok((kind, out))
}

fn check_kind(declared: Option<TreebankKind>, wanted: TreebankKind) -> Result<()> {
    match declared {
        Some(k) if k != wanted => Err(Error::format(
            1,
            1,
            format!("file declares kind {k}, expected {wanted}"),
        )),
        _ => Ok(()),
    }
}

/// Parses index and head columns shared by both row layouts.
fn parse_index_head(row: &Row, expected: usize) -> Result<usize> {
    let idx: usize = row.fields[0]
        .trim()
        .parse()
        .map_err(|_| row.err(0, format!("bad index `{}`", row.fields[0])))?;
    if idx != expected {
        return Err(row.err(0, format!("expected index {expected}, found {idx}")));
    }
    row.fields[2]
        .trim()
        .parse()
        .map_err(|_| row.err(2, format!("bad head `{}`", row.fields[2])))
}

fn check_heads(rows: &[Row], heads: &[usize]) -> Result<()> {
    let n = heads.len();
    for (row, &h) in rows.iter().zip(heads) {
        if h > n {
            return Err(row.err(2, format!("head {h} out of range 0..={n}")));
        }
    }
    Ok(())
}

fn block_error(block: &Block, message: impl Into<String>) -> Error {
    Error::format(block.start, 1, message)
}

fn violations_message(report: &super::ValidationReport) -> String {
    let listed: Vec<String> = report
        .violations
        .iter()
        .filter(|v| !v.is_non_projective())
        .map(|v| v.to_string())
        .collect();
    format!("illegal tree: {}", listed.join(", "))
}

pub(super) fn parse_words(text: &str) -> Result<WordTreebank> {
    let (declared, blocks) = blocks(text)?;
    check_kind(declared, TreebankKind::WordInternal)?;
    let mut entries = Vec::with_capacity(blocks.len());
    let mut nonprojective = Vec::new();
    let mut seen = HashSet::new();
    for block in &blocks {
        let mut pos_tags = Vec::new();
        let mut sense_id = WordEntry::DEFAULT_SENSE;
        for &(line, key, value) in &block.meta {
            match key {
                "pos" => {
                    pos_tags = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                }
                "sense" => {
                    sense_id = value
                        .parse()
                        .ok()
                        .filter(|&s| s >= 1)
                        .ok_or_else(|| Error::format(line, 1, format!("bad sense `{value}`")))?;
                }
                _ => {}
            }
        }
        if block.rows.is_empty() {
            return Err(block_error(block, "metadata without rows"));
        }
        let mut surface = String::new();
        let mut heads = Vec::with_capacity(block.rows.len());
        let mut labels = Vec::with_capacity(block.rows.len());
        for (i, row) in block.rows.iter().enumerate() {
            if row.fields.len() != 4 {
                return Err(Error::format(
                    row.line,
                    1,
                    format!("expected 4 tab-separated columns, found {}: `{}`", row.fields.len(), row.text),
                ));
            }
            let head = parse_index_head(row, i + 1)?;
            let mut chars = row.fields[1].chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => surface.push(c),
                _ => return Err(row.err(1, format!("expected one character, found `{}`", row.fields[1]))),
            }
            let label: Label = row.fields[3]
                .trim()
                .parse()
                .map_err(|_| row.err(3, format!("unknown label `{}`", row.fields[3])))?;
            heads.push(head);
            labels.push(label);
        }
        check_heads(&block.rows, &heads)?;
        if heads.len() < 2 {
            return Err(block_error(block, "word-internal entries need at least two characters"));
        }
        let tree = DepTree::new(heads, labels);
        let report = tree.validate();
        if !report.is_legal() {
            return Err(block_error(block, violations_message(&report)));
        }
        if !seen.insert((surface.clone(), sense_id)) {
            return Err(block_error(
                block,
                format!("duplicate entry {surface} with sense {sense_id}"),
            ));
        }
        if !report.is_projective() {
            nonprojective.push(entries.len());
        }
        entries.push(WordEntry {
            surface,
            tree,
            pos_tags,
            sense_id,
        });
    }
    Ok(Treebank {
        entries,
        nonprojective,
    })
}

pub(super) fn parse_sentences(text: &str, opts: &ParseOptions) -> Result<SentenceTreebank> {
    let (declared, blocks) = blocks(text)?;
    check_kind(declared, TreebankKind::Sentence)?;
    let mut entries = Vec::with_capacity(blocks.len());
    let mut nonprojective = Vec::new();
    for block in &blocks {
        if block.rows.is_empty() {
            return Err(block_error(block, "metadata without rows"));
        }
        let with_pos = block.rows[0].fields.len() == 5;
        let width = if with_pos { 5 } else { 4 };
        let mut words = Vec::new();
        let mut heads = Vec::new();
        let mut labels = Vec::new();
        let mut pos = Vec::new();
        for (i, row) in block.rows.iter().enumerate() {
            if row.fields.len() != width {
                return Err(Error::format(
                    row.line,
                    1,
                    format!("expected {width} tab-separated columns, found {}", row.fields.len()),
                ));
            }
            let head = parse_index_head(row, i + 1)?;
            if row.fields[1].is_empty() {
                return Err(row.err(1, "empty word"));
            }
            if row.fields[3].is_empty() {
                return Err(row.err(3, "empty label"));
            }
            words.push(row.fields[1].to_string());
            heads.push(head);
            labels.push(row.fields[3].to_string());
            if with_pos {
                pos.push(row.fields[4].to_string());
            }
        }
        check_heads(&block.rows, &heads)?;
        let report = validate_heads(&heads);
        if !report.is_legal() {
            return Err(block_error(block, violations_message(&report)));
        }
        if !report.is_projective() {
            nonprojective.push(entries.len());
        }
        let pos_tags = with_pos.then_some(pos);
        let is_punct = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                opts.punct
                    .is_punct(w, pos_tags.as_ref().map(|p| p[i].as_str()))
            })
            .collect();
        entries.push(SentenceEntry {
            words,
            heads,
            labels,
            pos_tags,
            is_punct,
        });
    }
    Ok(Treebank {
        entries,
        nonprojective,
    })
}

/// Parses a file whose kind is declared by the caller, by its header line,
/// or both (which must then agree).
pub fn parse_any(
    text: &str,
    declared: Option<TreebankKind>,
    opts: &ParseOptions,
) -> Result<AnyTreebank> {
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|l| l.split_once('='))
        .filter(|(k, _)| k.trim() == "kind")
        .map(|(_, v)| v.trim().parse::<TreebankKind>())
        .transpose()?;
    let kind = match (declared, header) {
        (Some(d), Some(h)) if d != h => {
            return Err(Error::format(1, 1, format!("file declares kind {h}, expected {d}")))
        }
        (Some(d), _) => d,
        (None, Some(h)) => h,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "treebank kind neither declared nor given by a header line".into(),
            ))
        }
    };
    Ok(match kind {
        TreebankKind::WordInternal => AnyTreebank::Words(parse_words(text)?),
        TreebankKind::Sentence => AnyTreebank::Sentences(parse_sentences(text, opts)?),
    })
}

pub(super) fn write_word_block(e: &WordEntry, out: &mut String) {
    if !e.pos_tags.is_empty() {
        let _ = writeln!(out, "# pos = {}", e.pos_tags.join(","));
    }
    if e.sense_id != WordEntry::DEFAULT_SENSE {
        let _ = writeln!(out, "# sense = {}", e.sense_id);
    }
    for (i, (c, (h, l))) in e
        .surface
        .chars()
        .zip(e.tree.heads.iter().zip(&e.tree.labels))
        .enumerate()
    {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", i + 1, c, h, l);
    }
}

pub(super) fn write_sentence_block(e: &SentenceEntry, out: &mut String) {
    for i in 0..e.words.len() {
        let _ = write!(out, "{}\t{}\t{}\t{}", i + 1, e.words[i], e.heads[i], e.labels[i]);
        if let Some(pos) = &e.pos_tags {
            let _ = write!(out, "\t{}", pos[i]);
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::serialize_entry;
    use Label::*;

    #[test]
    fn parses_hunyinfa_block() {
        let tb = WordTreebank::parse("1\t婚\t3\tatt\n2\t姻\t1\tcoo\n3\t法\t0\troot\n").unwrap();
        assert_eq!(tb.len(), 1);
        let e = &tb.entries[0];
        assert_eq!(e.surface, "婚姻法");
        assert_eq!(e.tree.heads, vec![3, 1, 0]);
        assert_eq!(e.tree.labels, vec![Att, Coo, Root]);
        assert_eq!(e.sense_id, 1);
    }

    #[test]
    fn parses_changchang_block() {
        let tb = WordTreebank::parse("1\t常\t0\troot\n2\t常\t1\trepet\n").unwrap();
        assert_eq!(tb.entries[0].tree.heads, vec![0, 1]);
        assert_eq!(tb.entries[0].tree.labels, vec![Root, Repet]);
    }

    #[test]
    fn double_root_label_is_rejected() {
        let err = WordTreebank::parse("1\t常\t2\troot\n2\t常\t1\troot\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("no root") || msg.contains("root"), "{msg}");
    }

    #[test]
    fn reports_line_and_column() {
        let text = "1\t常\t0\troot\n2\t常\t1\trepet\n\n1\t大\t2\tatt\n2\t衣\t0\tnsubj\n";
        match WordTreebank::parse(text).unwrap_err() {
            Error::Format { line, column, message } => {
                assert_eq!(line, 5);
                assert_eq!(column, 7);
                assert!(message.contains("nsubj"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_bad_columns_and_ranges() {
        assert!(WordTreebank::parse("1\t常\t0\n2\t常\t1\trepet\n").is_err());
        let err = WordTreebank::parse("1\t常\t0\troot\n2\t常\t3\trepet\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, column: 5, .. }), "{err}");
        assert!(WordTreebank::parse("1\t常\t0\troot\n").is_err());
        assert!(WordTreebank::parse("1\t常常\t0\troot\n2\t常\t1\trepet\n").is_err());
        assert!(WordTreebank::parse("2\t常\t0\troot\n1\t常\t1\trepet\n").is_err());
    }

    #[test]
    fn rejects_duplicate_surface_and_sense() {
        let block = "1\t常\t0\troot\n2\t常\t1\trepet\n";
        assert!(WordTreebank::parse(&format!("{block}\n{block}")).is_err());
        let ok = format!("{block}\n# sense = 2\n{block}");
        assert_eq!(WordTreebank::parse(&ok).unwrap().len(), 2);
    }

    #[test]
    fn non_projective_entries_are_flagged_not_rejected() {
        let text = "1\t一\t0\troot\n2\t二\t3\tatt\n3\t三\t1\tobj\n4\t四\t2\tatt\n";
        let tb = WordTreebank::parse(text).unwrap();
        assert_eq!(tb.nonprojective, vec![0]);
        assert!(tb.require_projective().is_err());
    }

    #[test]
    fn serializes_metadata_and_separators() {
        let e = WordEntry::new("常常", DepTree::new(vec![0, 1], vec![Root, Repet]));
        assert_eq!(serialize_entry(&e), "1\t常\t0\troot\n2\t常\t1\trepet\n");
        let e2 = e.clone().with_sense(2).with_pos(["Adverb"]);
        assert_eq!(
            serialize_entry(&e2),
            "# pos = Adverb\n# sense = 2\n1\t常\t0\troot\n2\t常\t1\trepet\n"
        );
        let e3 = WordEntry::new("大衣", DepTree::new(vec![2, 0], vec![Att, Root]));
        let e4 = WordEntry::new("下雨", DepTree::new(vec![0, 1], vec![Root, Obj]));
        let tb = Treebank::from_entries(vec![e, e3, e4]).unwrap();
        let text = tb.to_text();
        assert_eq!(text.matches("\n\n").count(), 2);
        assert!(!text.ends_with("\n\n"));
        assert_eq!(WordTreebank::parse(&text).unwrap(), tb);
    }

    #[test]
    fn kind_header_is_checked() {
        let text = "# kind = sentence\n1\t我\t2\tnsubj\n2\t来\t0\troot\n";
        assert!(WordTreebank::parse(text).is_err());
        match parse_any(text, None, &ParseOptions::default()).unwrap() {
            AnyTreebank::Sentences(tb) => assert_eq!(tb.len(), 1),
            _ => panic!("expected sentences"),
        }
        assert!(parse_any(text, Some(TreebankKind::WordInternal), &ParseOptions::default()).is_err());
        assert!(parse_any("1\t我\t0\troot\n", None, &ParseOptions::default()).is_err());
    }

    #[test]
    fn sentence_punctuation_from_pos_or_chars() {
        let opts = ParseOptions::default();
        let with_pos = "1\t我\t2\tnsubj\tPN\n2\t来\t0\troot\tVV\n3\t。\t2\tpunct\tPU\n";
        let tb = SentenceTreebank::parse(with_pos, &opts).unwrap();
        assert_eq!(tb.entries[0].is_punct, vec![false, false, true]);
        assert_eq!(tb.to_text(), with_pos);

        let no_pos = "1\t我\t2\tnsubj\n2\t来\t0\troot\n3\t。\t2\tpunct\n4\t!\t2\tpunct\n";
        let tb = SentenceTreebank::parse(no_pos, &opts).unwrap();
        assert_eq!(tb.entries[0].is_punct, vec![false, false, true, true]);
        assert_eq!(tb.entries[0].pos_tags, None);
    }
}
