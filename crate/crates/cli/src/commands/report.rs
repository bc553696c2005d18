use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use wordtree_core::analysis::{
    annotation_accuracy, label_confusions, label_distribution, multi_structure_words, pairwise_consistency,
    render_accuracy, render_agreement, render_distribution, render_patterns, three_char_stats, AnnotationSet,
};
use wordtree_core::parser::{EvalReport, Mode};
use wordtree_core::wordrep::Lexicon;

use super::train::print_eval;
use crate::exit::usage;
use crate::io;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Gold treebank of the model's kind.
    #[arg(long)]
    pub test: PathBuf,
    /// Word-internal: position-specific character vectors used in training.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Sentence mode: gold structures for test words the model has not seen.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Sentence mode: word-internal model for test words without a
    /// structure.
    #[arg(long)]
    pub word_parser: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    model: &'a Path,
    test: &'a Path,
    external: Option<&'a Path>,
    lexicon: Option<&'a Path>,
    word_parser: Option<&'a Path>,
}

fn print_tallies(title: &str, rows: &std::collections::BTreeMap<String, wordtree_core::parser::Tally>) {
    if rows.is_empty() {
        return;
    }
    println!("{title:<12}{:>8}{:>8}{:>8}", "count", "UAS", "LAS");
    for (k, t) in rows {
        println!("{k:<12}{:>8}{:>8.2}{:>8.2}", t.total, t.uas(), t.las());
    }
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let mut model = io::load_model(&args.model)?;
    let report: EvalReport = match model.config.mode {
        Mode::WordInternal => {
            if args.lexicon.is_some() || args.word_parser.is_some() {
                return Err(usage("--lexicon and --word-parser apply to sentence models"));
            }
            if let Some(p) = &args.external {
                model.attach_external(io::read_external(p)?)?;
            }
            model.evaluate_words(&io::read_words(&args.test)?)?
        }
        Mode::Sentence => {
            if args.external.is_some() {
                return Err(usage("--external applies to word-internal models"));
            }
            let test = io::read_sentences(&args.test)?;
            if model.config.wordrep.needs_structure() && (args.lexicon.is_some() || args.word_parser.is_some()) {
                let mut gold = match model.lexicon() {
                    Some(l) => l.to_treebank()?,
                    None => Default::default(),
                };
                if let Some(p) = &args.lexicon {
                    // Structures given here win over those stored in the model.
                    let extra = io::read_words(p)?;
                    let known: std::collections::HashSet<String> = extra.iter().map(|e| e.surface.clone()).collect();
                    let mut entries: Vec<_> = gold.entries.into_iter().filter(|e| !known.contains(&e.surface)).collect();
                    entries.extend(extra.entries);
                    gold = wordtree_core::Treebank::from_entries(entries)?;
                }
                let wp = args.word_parser.as_deref().map(io::load_model).transpose()?;
                let surfaces = test.iter().flat_map(|e| e.words.iter().map(String::as_str));
                model.set_lexicon(Some(Lexicon::build(surfaces, &gold, wp.as_ref())?));
            }
            model.evaluate_sentences(&test)?
        }
    };
    print_eval("test", &report);
    print_tallies("label", &report.per_label);
    print_tallies("frequency", &report.buckets);
    let cfg = EvalConfig {
        model: &args.model,
        test: &args.test,
        external: args.external.as_deref(),
        lexicon: args.lexicon.as_deref(),
        word_parser: args.word_parser.as_deref(),
    };
    io::write_report(args.out.as_deref(), "eval", cfg, &report)
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Word-internal treebank (.wist).
    #[arg(long)]
    pub tb: PathBuf,
    /// Break the label distribution down by coarse POS of the word.
    #[arg(long)]
    pub by_pos: bool,
    /// Root positions and head patterns of three-character words.
    #[arg(long)]
    pub patterns: bool,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StatsReport {
    entries: usize,
    characters: usize,
    distribution: wordtree_core::analysis::DistributionTable,
    patterns: Option<wordtree_core::analysis::PatternReport>,
    multi_structure: Vec<String>,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let tb = io::read_words(&args.tb)?;
    let distribution = label_distribution(&tb, args.by_pos)?;
    print!("{}", render_distribution(&distribution));
    let patterns = if args.patterns {
        let p = three_char_stats(&tb)?;
        println!();
        print!("{}", render_patterns(&p));
        Some(p)
    } else {
        None
    };
    let multi_structure = multi_structure_words(&tb);
    println!("{} entries, {} characters, {} words with several structures", tb.len(), tb.token_count(), multi_structure.len());
    #[derive(Serialize)]
    struct Cfg<'a> {
        tb: &'a Path,
        by_pos: bool,
        patterns: bool,
    }
    io::write_report(
        args.out.as_deref(),
        "stats",
        Cfg {
            tb: &args.tb,
            by_pos: args.by_pos,
            patterns: args.patterns,
        },
        StatsReport {
            entries: tb.len(),
            characters: tb.token_count(),
            distribution,
            patterns,
            multi_structure,
        },
    )
}

#[derive(Args, Debug)]
pub struct AgreeArgs {
    /// First annotator's treebank.
    #[arg(long)]
    pub a: PathBuf,
    /// Second annotator's treebank, over the same words.
    #[arg(long)]
    pub b: PathBuf,
    /// Final answers; adds the accuracy of both annotators against them.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct AgreeReport {
    consistency: wordtree_core::analysis::AgreementReport,
    confusions: wordtree_core::analysis::ConfusionReport,
    accuracy: Option<wordtree_core::analysis::AccuracyReport>,
}

fn annotator_name(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

pub fn agree(args: AgreeArgs) -> Result<()> {
    let a = AnnotationSet::new(annotator_name(&args.a), io::read_words(&args.a)?);
    let b = AnnotationSet::new(annotator_name(&args.b), io::read_words(&args.b)?);
    let consistency = pairwise_consistency(&a, &b)?;
    print!("{}", render_agreement(&consistency));
    let confusions = label_confusions(&a, &b)?;
    if confusions.total > 0 {
        println!("label confusions ({} characters):", confusions.total);
        let mut pairs: Vec<_> = confusions.pairs.iter().collect();
        pairs.sort_by(|x, y| y.1 .0.cmp(&x.1 .0).then_with(|| x.0.cmp(y.0)));
        for (pair, (n, pct)) in pairs {
            println!("  {pair:<12}{n:>6}{pct:>8.1}%");
        }
    }
    let accuracy = match &args.gold {
        Some(g) => {
            let gold = io::read_words(g)?;
            let r = annotation_accuracy(&[a, b], &gold)?;
            print!("{}", render_accuracy(&r));
            Some(r)
        }
        None => None,
    };
    #[derive(Serialize)]
    struct Cfg<'a> {
        a: &'a Path,
        b: &'a Path,
        gold: Option<&'a Path>,
    }
    io::write_report(
        args.out.as_deref(),
        "agree",
        Cfg {
            a: &args.a,
            b: &args.b,
            gold: args.gold.as_deref(),
        },
        AgreeReport {
            consistency,
            confusions,
            accuracy,
        },
    )
}
