//! File helpers shared by commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;
use wordtree_core::embeddings::{EmbeddingTable, ExternalVectors};
use wordtree_core::treebank::{parse_any, AnyTreebank, ParseOptions, SentenceTreebank, WordTreebank};
use wordtree_core::{ParserModel32, TreebankKind};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Kind implied by a file extension.
pub fn kind_of(path: &Path) -> Option<TreebankKind> {
    match path.extension()?.to_str()? {
        "wist" => Some(TreebankKind::WordInternal),
        "dep" | "conll" | "conllx" => Some(TreebankKind::Sentence),
        _ => None,
    }
}

pub fn read_any(path: &Path, kind: Option<TreebankKind>) -> Result<AnyTreebank> {
    let text = read_text(path)?;
    let kind = kind.or_else(|| kind_of(path));
    parse_any(&text, kind, &ParseOptions::default()).with_context(|| format!("in {}", path.display()))
}

pub fn read_words(path: &Path) -> Result<WordTreebank> {
    match read_any(path, Some(TreebankKind::WordInternal))? {
        AnyTreebank::Words(tb) => Ok(tb),
        AnyTreebank::Sentences(_) => unreachable!("kind was fixed"),
    }
}

pub fn read_sentences(path: &Path) -> Result<SentenceTreebank> {
    match read_any(path, Some(TreebankKind::Sentence))? {
        AnyTreebank::Sentences(tb) => Ok(tb),
        AnyTreebank::Words(_) => unreachable!("kind was fixed"),
    }
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path).with_context(|| format!("reading embeddings {}", path.display()))
}

pub fn read_external(path: &Path) -> Result<Arc<ExternalVectors>> {
    Ok(Arc::new(ExternalVectors::from_table(&read_embeddings(path)?)?))
}

pub fn load_model(path: &Path) -> Result<ParserModel32> {
    ParserModel32::load(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `path` with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Machine-readable report: the command, its resolved inputs and results.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub config: C,
    pub report: R,
}

pub fn write_report<C: Serialize, R: Serialize>(path: Option<&Path>, command: &str, config: C, report: R) -> Result<()> {
    if let Some(path) = path {
        let body = serde_json::to_string_pretty(&Report { command, config, report })?;
        write(path, body + "\n")?;
    }
    Ok(())
}
