use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tracing::info;
use wordtree_core::parser::{train_sentences, train_words, EvalReport, Mode, ParserConfig, TrainConfig, WordRepMode};
use wordtree_core::treebank::{SentenceTreebank, WordTreebank};
use wordtree_core::wordrep::Lexicon;
use wordtree_core::ParserModel32;

use crate::config::{self, Table};
use crate::exit::usage;
use crate::io;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// TOML file with a `[train]` table; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// `word-internal` (.wist input) or `sentence` (.dep input).
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Training treebank.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Model selection set; the training set is used when absent.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Evaluated once with the selected model.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Pretrained embeddings (word2vec text) for characters or words.
    #[arg(long)]
    pub emb: Option<PathBuf>,
    /// Word-internal: position-specific character vectors keyed `word␟pos`.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Sentence mode: gold word structures (.wist) for the structure-aware
    /// word representations.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Sentence mode: word-internal model that parses words missing from
    /// the lexicon.
    #[arg(long)]
    pub word_parser: Option<PathBuf>,
    /// Checkpoint to write; `<out>.json`, `<out>.run.toml` and
    /// `<out>.log.jsonl` are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for initialization, shuffling and dropout [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum epochs [default: 1000].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without dev LAS improvement before stopping [default: 100].
    #[arg(long)]
    pub patience: Option<usize>,
    /// Tokens per mini-batch [default: 5000].
    #[arg(long)]
    pub batch_tokens: Option<usize>,
    /// Adam learning rate [default: 0.002].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Sentence mode: none, charlstm, labelcharlstm or labelgcn.
    #[arg(long)]
    pub wordrep: Option<WordRepMode>,
    /// Zero the label channel of the structure-aware representations.
    #[arg(long)]
    pub no_labels: bool,
    /// Sentence mode: embed gold POS tags from the fifth column.
    #[arg(long)]
    pub gold_pos: bool,
    /// Character embedding size [default: 100, sentence mode 50].
    #[arg(long)]
    pub char_dim: Option<usize>,
    /// Sentence mode: word embedding size [default: 100].
    #[arg(long)]
    pub word_dim: Option<usize>,
    /// BiLSTM hidden size per direction [default: 400].
    #[arg(long)]
    pub hidden: Option<usize>,
    /// BiLSTM layers [default: 3].
    #[arg(long)]
    pub layers: Option<usize>,
    /// Arc MLP size [default: 500].
    #[arg(long)]
    pub arc_mlp: Option<usize>,
    /// Label MLP size [default: 100].
    #[arg(long)]
    pub label_mlp: Option<usize>,
    /// Dropout for embeddings, LSTM outputs and MLPs.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Training tokens rarer than this become unknown [default: 2].
    #[arg(long)]
    pub min_freq: Option<u64>,
}

/// Fully resolved training run; dumped next to the checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainRun {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub emb: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub word_parser: Option<PathBuf>,
    pub out: PathBuf,
    pub parser: ParserConfig,
    pub optim: TrainConfig,
}

const PATH_KEYS: [&str; 8] = ["train", "dev", "test", "emb", "external", "lexicon", "word_parser", "out"];

fn resolve(args: &TrainArgs) -> Result<TrainRun> {
    let file = config::load(args.config.as_deref())?;
    let sec = config::section(&file, "train")?;
    if let Some(t) = sec {
        for k in t.keys() {
            if !PATH_KEYS.contains(&k.as_str()) && !["mode", "parser", "optim"].contains(&k.as_str()) {
                return Err(usage(format!("unknown setting `train.{k}`")));
            }
        }
    }
    let parser_sec = sec.map(|t| config::section(t, "parser")).transpose()?.flatten();
    let optim_sec = sec.map(|t| config::section(t, "optim")).transpose()?.flatten();
    let file_mode = match config::value::<String>(sec, "mode")? {
        Some(m) => Some(m.parse::<Mode>().map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    let mode = args.mode.or(file_mode).unwrap_or(Mode::WordInternal);
    let base = match mode {
        Mode::WordInternal => ParserConfig::default(),
        Mode::Sentence => ParserConfig::sentence(),
    };
    let mut parser: ParserConfig = config::overlay(&base, parser_sec, "train.parser")?;
    parser.mode = mode;
    let mut optim: TrainConfig = config::overlay(&TrainConfig::default(), optim_sec, "train.optim")?;

    let path = |flag: &Option<PathBuf>, key: &str| -> Result<Option<PathBuf>> {
        Ok(flag.clone().or(config::value::<PathBuf>(sec, key)?))
    };
    let train = path(&args.train, "train")?.ok_or_else(|| usage("--train is required"))?;
    let out = path(&args.out, "out")?.ok_or_else(|| usage("--out is required"))?;

    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    set!(args.seed, optim.seed);
    set!(args.epochs, optim.max_epochs);
    set!(args.patience, optim.patience);
    set!(args.batch_tokens, optim.batch_tokens);
    set!(args.lr, optim.adam.lr);
    set!(args.wordrep, parser.wordrep);
    set!(args.char_dim, parser.char_emb_dim);
    set!(args.word_dim, parser.word_emb_dim);
    set!(args.hidden, parser.lstm_hidden);
    set!(args.layers, parser.lstm_layers);
    set!(args.arc_mlp, parser.arc_mlp_dim);
    set!(args.label_mlp, parser.label_mlp_dim);
    set!(args.min_freq, parser.min_freq);
    if let Some(p) = args.dropout {
        parser.embed_dropout = p;
        parser.lstm_dropout = p;
        parser.mlp_dropout = p;
    }
    if args.no_labels {
        parser.use_labels = false;
    }
    if args.gold_pos {
        parser.use_gold_pos = true;
    }
    parser.validate().map_err(|e| usage(e.to_string()))?;

    let run = TrainRun {
        train,
        dev: path(&args.dev, "dev")?,
        test: path(&args.test, "test")?,
        emb: path(&args.emb, "emb")?,
        external: path(&args.external, "external")?,
        lexicon: path(&args.lexicon, "lexicon")?,
        word_parser: path(&args.word_parser, "word_parser")?,
        out,
        parser,
        optim,
    };
    match run.parser.mode {
        Mode::WordInternal if run.lexicon.is_some() || run.word_parser.is_some() => {
            Err(usage("--lexicon and --word-parser apply to sentence mode"))
        }
        Mode::Sentence if run.external.is_some() => Err(usage("--external applies to word-internal mode")),
        _ => Ok(run),
    }
}

/// The run as a `[train]` table, loadable with `--config`.
pub fn dump(run: &TrainRun) -> Result<String> {
    let mut t = Table::new();
    t.insert("train".into(), toml::Value::try_from(run)?);
    let mode = run.parser.mode.to_string();
    if let Some(toml::Value::Table(train)) = t.get_mut("train") {
        train.insert("mode".into(), toml::Value::String(mode));
    }
    Ok(toml::to_string(&t)?)
}

/// Per-epoch JSON lines; the file is opened at the first epoch so runs that
/// fail while loading leave nothing behind.
struct EpochWriter {
    path: PathBuf,
    file: Option<std::io::BufWriter<std::fs::File>>,
    error: Option<anyhow::Error>,
}

impl EpochWriter {
    fn new(path: PathBuf) -> Self {
        EpochWriter {
            path,
            file: None,
            error: None,
        }
    }

    fn open(&mut self) -> Result<&mut std::io::BufWriter<std::fs::File>> {
        if self.file.is_none() {
            if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let file = std::fs::File::create(&self.path).with_context(|| format!("creating {}", self.path.display()))?;
            self.file = Some(std::io::BufWriter::new(file));
        }
        Ok(self.file.as_mut().expect("just opened"))
    }

    fn line(&mut self, e: &wordtree_core::parser::EpochLog) {
        info!(
            epoch = e.epoch,
            arc_loss = format!("{:.4}", e.arc_loss),
            label_loss = format!("{:.4}", e.label_loss),
            dev_uas = format!("{:.2}", e.dev_uas),
            dev_las = format!("{:.2}", e.dev_las),
        );
        if self.error.is_some() {
            return;
        }
        let line = serde_json::to_string(e).expect("epoch log serializes");
        let written = self
            .open()
            .and_then(|f| writeln!(f, "{line}").and_then(|_| f.flush()).map_err(Into::into));
        if let Err(err) = written {
            self.error = Some(err);
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(e) = self.error {
            return Err(e.context("writing the training log"));
        }
        self.open()?.flush()?;
        Ok(())
    }
}

/// Lexicon over every surface of the given treebanks.
fn sentence_lexicon(run: &TrainRun, banks: &[&SentenceTreebank]) -> Result<Option<Lexicon>> {
    if !run.parser.wordrep.needs_structure() {
        return Ok(None);
    }
    let gold = match &run.lexicon {
        Some(p) => io::read_words(p)?,
        None => WordTreebank::default(),
    };
    let word_parser = run.word_parser.as_deref().map(io::load_model).transpose()?;
    if run.lexicon.is_none() && word_parser.is_none() {
        tracing::warn!("no --lexicon or --word-parser: unknown words get the right-headed default structure");
    }
    let surfaces = banks.iter().flat_map(|tb| tb.iter().flat_map(|e| e.words.iter().map(String::as_str)));
    Ok(Some(Lexicon::build(surfaces, &gold, word_parser.as_ref())?))
}

pub fn print_eval(name: &str, r: &EvalReport) {
    println!("{name}: UAS {:.2}  LAS {:.2}  CM {:.2}  ({} entries, {} tokens)", r.uas, r.las, r.cm, r.n_entries, r.n_tokens);
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    best_epoch: usize,
    epochs: usize,
    dev: &'a EvalReport,
    test: Option<EvalReport>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let run = resolve(&args)?;
    if args.print_config {
        print!("{}", dump(&run)?);
        return Ok(());
    }
    let log_path = io::with_suffix(&run.out, ".log.jsonl");
    let emb = run.emb.as_deref().map(io::read_embeddings).transpose()?;
    let mut log = EpochWriter::new(log_path);
    let seed = run.optim.seed;
    let (model, outcome_best, best_epoch, epochs, test) = match run.parser.mode {
        Mode::WordInternal => {
            let train = io::read_words(&run.train)?;
            let dev = run.dev.as_deref().map(io::read_words).transpose()?;
            let test = run.test.as_deref().map(io::read_words).transpose()?;
            let mut model = ParserModel32::for_words(run.parser.clone(), &train, emb.as_ref(), seed)?;
            if let Some(p) = &run.external {
                model.attach_external(io::read_external(p)?)?;
            }
            info!(entries = train.len(), params = model.store.size(), "training word-internal parser");
            let out = train_words(model, &train, dev.as_ref(), &run.optim, |e| log.line(e))?;
            let test = test.map(|t| out.model.evaluate_words(&t)).transpose()?;
            (out.model, out.best, out.best_epoch, out.log.len(), test)
        }
        Mode::Sentence => {
            let train = io::read_sentences(&run.train)?;
            let dev = run.dev.as_deref().map(io::read_sentences).transpose()?;
            let test = run.test.as_deref().map(io::read_sentences).transpose()?;
            let banks: Vec<&SentenceTreebank> = [Some(&train), dev.as_ref(), test.as_ref()].into_iter().flatten().collect();
            let lexicon = sentence_lexicon(&run, &banks)?;
            let model = ParserModel32::for_sentences(run.parser.clone(), &train, emb.as_ref(), lexicon, seed)?;
            info!(entries = train.len(), params = model.store.size(), "training sentence parser");
            let out = train_sentences(model, &train, dev.as_ref(), &run.optim, |e| log.line(e))?;
            let test = test.map(|t| out.model.evaluate_sentences(&t)).transpose()?;
            (out.model, out.best, out.best_epoch, out.log.len(), test)
        }
    };
    log.finish()?;
    if let Some(dir) = run.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    model.save(&run.out).with_context(|| format!("writing {}", run.out.display()))?;
    io::write(&io::with_suffix(&run.out, ".run.toml"), dump(&run)?)?;
    println!("best epoch {best_epoch} of {epochs}");
    print_eval("dev", &outcome_best);
    if let Some(t) = &test {
        print_eval("test", t);
    }
    io::write_report(
        Some(&io::with_suffix(&run.out, ".report.json")),
        "train",
        &run,
        TrainSummary {
            best_epoch,
            epochs,
            dev: &outcome_best,
            test,
        },
    )
}
