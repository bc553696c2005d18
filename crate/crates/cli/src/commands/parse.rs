use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use wordtree_core::parser::Mode;
use wordtree_core::treebank::{serialize_entry, PunctRule, SentenceEntry};
use wordtree_core::Error;

use crate::exit::usage;
use crate::io;

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Input file: one word per line, or one whitespace-tokenized sentence
    /// per line for sentence models (`word/TAG` when the model uses POS).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Word-internal: position-specific character vectors used in training.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Words (or quoted sentences) to parse, before those from `--file`.
    pub inputs: Vec<String>,
}

fn sentence_entry(line: &str, with_pos: bool) -> Result<(Vec<String>, Option<Vec<String>>)> {
    let mut words = Vec::new();
    let mut tags = Vec::new();
    for tok in line.split_whitespace() {
        if with_pos {
            let (w, t) = tok
                .rsplit_once('/')
                .filter(|(w, t)| !w.is_empty() && !t.is_empty())
                .ok_or_else(|| Error::InvalidArgument(format!("`{tok}`: expected word/TAG")))?;
            words.push(w.to_string());
            tags.push(t.to_string());
        } else {
            words.push(tok.to_string());
        }
    }
    Ok((words, with_pos.then_some(tags)))
}

pub fn run(args: ParseArgs) -> Result<()> {
    let mut inputs: Vec<String> = args.inputs.iter().map(|s| s.trim().to_string()).collect();
    if let Some(f) = &args.file {
        inputs.extend(io::read_text(f)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    inputs.retain(|s| !s.is_empty());
    if inputs.is_empty() {
        return Err(Error::Empty("no words to parse".into()).into());
    }
    let mut model = io::load_model(&args.model)?;
    let blocks: Vec<String> = match model.config.mode {
        Mode::WordInternal => {
            if let Some(p) = &args.external {
                model.attach_external(io::read_external(p)?)?;
            }
            if let Some(w) = inputs.iter().find(|w| w.chars().count() < 2) {
                return Err(Error::InvalidArgument(format!(
                    "`{w}`: word-internal parsing needs at least two characters"
                ))
                .into());
            }
            inputs
                .par_iter()
                .map(|w| Ok(serialize_entry(&model.parse_word(w)?)))
                .collect::<Result<_>>()?
        }
        Mode::Sentence => {
            if args.external.is_some() {
                return Err(usage("--external applies to word-internal models"));
            }
            let with_pos = model.config.use_gold_pos;
            let punct = PunctRule::default();
            inputs
                .par_iter()
                .map(|line| {
                    let (words, pos) = sentence_entry(line, with_pos)?;
                    let (heads, labels) = model.parse_sentence(&words, pos.as_deref())?;
                    let is_punct = words
                        .iter()
                        .enumerate()
                        .map(|(i, w)| punct.is_punct(w, pos.as_ref().map(|p| p[i].as_str())))
                        .collect();
                    Ok(serialize_entry(&SentenceEntry {
                        words,
                        heads,
                        labels,
                        pos_tags: pos,
                        is_punct,
                    }))
                })
                .collect::<Result<_>>()?
        }
    };
    print!("{}", blocks.join("\n"));
    Ok(())
}
