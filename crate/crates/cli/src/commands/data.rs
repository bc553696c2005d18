use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use wordtree_annotate::service::{Service, DEFAULT_SNAPSHOT_EVERY};
use wordtree_core::treebank::{split_dataset, AnyTreebank, Entry, Treebank};
use wordtree_core::wordrep::{Lexicon, LexiconSource};
use wordtree_core::TreebankKind;

use crate::config;
use crate::exit::usage;
use crate::io;

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// TOML file with a `[serve]` table; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the event log and snapshots.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Listen address [default: 127.0.0.1:8080].
    #[arg(long)]
    pub addr: Option<SocketAddr>,
    /// Events between snapshots [default: 256].
    #[arg(long)]
    pub snapshot_every: Option<u64>,
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let file = config::load(args.config.as_deref())?;
    let sec = config::section(&file, "serve")?;
    if let Some(t) = sec {
        if let Some(k) = t.keys().find(|k| !["data", "addr", "snapshot_every"].contains(&k.as_str())) {
            return Err(usage(format!("unknown setting `serve.{k}`")));
        }
    }
    let data = args
        .data
        .or(config::value(sec, "data")?)
        .ok_or_else(|| usage("--data is required"))?;
    let addr = match args.addr {
        Some(a) => a,
        None => match config::value::<String>(sec, "addr")? {
            Some(s) => s.parse().map_err(|e| usage(format!("serve.addr: {e}")))?,
            None => SocketAddr::from(([127, 0, 0, 1], 8080)),
        },
    };
    let every = args
        .snapshot_every
        .or(config::value(sec, "snapshot_every")?)
        .unwrap_or(DEFAULT_SNAPSHOT_EVERY);
    let service = Arc::new(Service::open(&data, every).with_context(|| format!("opening {}", data.display()))?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting the runtime")?;
    rt.block_on(wordtree_annotate::api::serve(service, addr))
        .with_context(|| format!("serving on {addr}"))
}

#[derive(Args, Debug)]
pub struct LexiconArgs {
    /// Gold word structures (.wist).
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Sentence treebank whose words are covered.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    /// Plain word list, one per line.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Word-internal model for words without a gold structure.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output .wist; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn lexicon(args: LexiconArgs) -> Result<()> {
    let gold = args.gold.as_deref().map(io::read_words).transpose()?.unwrap_or_default();
    let mut surfaces: Vec<String> = Vec::new();
    if let Some(p) = &args.sentences {
        surfaces.extend(io::read_sentences(p)?.entries.into_iter().flat_map(|e| e.words));
    }
    if let Some(p) = &args.words {
        surfaces.extend(io::read_text(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if gold.is_empty() && surfaces.is_empty() {
        return Err(usage("give --gold, --sentences or --words"));
    }
    let model = args.model.as_deref().map(io::load_model).transpose()?;
    let lex = Lexicon::build(surfaces.iter().map(String::as_str), &gold, model.as_ref())?;
    let count = |src| lex.iter().filter(|(s, _, x)| *x == src && s.chars().count() > 1).count();
    tracing::info!(
        gold = count(LexiconSource::Gold),
        parsed = count(LexiconSource::Parsed),
        "lexicon built"
    );
    let text = lex.to_wist()?;
    match &args.out {
        Some(p) => io::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Treebank to split; the kind comes from the extension or header.
    #[arg(long)]
    pub tb: PathBuf,
    /// Entries held out for development.
    #[arg(long)]
    pub dev: usize,
    /// Entries held out for testing.
    #[arg(long)]
    pub test: usize,
    /// Shuffle seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Receives train, dev and test files with the input's extension.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn write_split<E: Entry + Clone>(tb: &Treebank<E>, args: &SplitArgs, ext: &str) -> Result<()> {
    let s = split_dataset(tb, args.seed, args.dev, args.test)?;
    for (name, part) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
        let path = args.out_dir.join(format!("{name}.{ext}"));
        io::write(&path, part.to_text())?;
        println!("{}\t{} entries", path.display(), part.len());
    }
    Ok(())
}

pub fn split(args: SplitArgs) -> Result<()> {
    let tb = io::read_any(&args.tb, None)?;
    let ext = args
        .tb
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or(match tb.kind() {
            TreebankKind::WordInternal => "wist",
            TreebankKind::Sentence => "dep",
        })
        .to_string();
    match &tb {
        AnyTreebank::Words(t) => write_split(t, &args, &ext),
        AnyTreebank::Sentences(t) => write_split(t, &args, &ext),
    }
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Treebank files (.wist, .dep).
    pub files: Vec<PathBuf>,
    /// Kind when neither extension nor header tells it.
    #[arg(long)]
    pub kind: Option<TreebankKind>,
    /// Treat non-projective entries as errors.
    #[arg(long)]
    pub projective: bool,
}

fn report_one<E: Entry>(path: &Path, tb: &Treebank<E>, projective: bool) -> Result<()> {
    println!(
        "{}: {} {} entries, {} tokens, {} non-projective",
        path.display(),
        tb.len(),
        tb.kind(),
        tb.token_count(),
        tb.nonprojective.len()
    );
    for &i in &tb.nonprojective {
        println!("  non-projective: {}", tb.entries[i].describe());
    }
    if projective {
        tb.require_projective().with_context(|| format!("in {}", path.display()))?;
    }
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    if args.files.is_empty() {
        return Err(usage("no files given"));
    }
    for f in &args.files {
        match io::read_any(f, args.kind)? {
            AnyTreebank::Words(t) => report_one(f, &t, args.projective)?,
            AnyTreebank::Sentences(t) => report_one(f, &t, args.projective)?,
        }
    }
    Ok(())
}
