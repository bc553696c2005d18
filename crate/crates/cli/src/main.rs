//! `wordtree`: train and run word-internal and sentence parsers, analyze
//! treebanks and serve the annotation workflow.

mod commands;
mod config;
mod exit;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{data, parse, report, train};

#[derive(Parser, Debug)]
#[command(name = "wordtree", version, about = "Word-internal dependency structure toolkit")]
struct Cli {
    /// More diagnostics on standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
// Parsed once at startup; the size gap between variants does not matter.
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Train a parser and write the checkpoint with the best dev LAS.
    Train(train::TrainArgs),
    /// Parse words (or sentences) with a checkpoint; blocks go to stdout.
    Parse(parse::ParseArgs),
    /// Attachment scores of a checkpoint on a gold treebank.
    Eval(report::EvalArgs),
    /// Label distribution and structural patterns of a treebank.
    Stats(report::StatsArgs),
    /// Agreement between two annotators, and accuracy against final answers.
    Agree(report::AgreeArgs),
    /// Run the annotation service over HTTP.
    Serve(data::ServeArgs),
    /// Build a word-structure lexicon for sentence parsing.
    Lexicon(data::LexiconArgs),
    /// Seeded train/dev/test split of a treebank.
    Split(data::SplitArgs),
    /// Check treebank files and list non-projective entries.
    Validate(data::ValidateArgs),
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => tracing::Level::ERROR,
        (false, 0) => tracing::Level::INFO,
        (false, 1) => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_target(false)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { 0 });
        }
    };
    init_logging(cli.verbose, cli.quiet);
    let result = match cli.command {
        Command::Train(a) => train::run(a),
        Command::Parse(a) => parse::run(a),
        Command::Eval(a) => report::eval(a),
        Command::Stats(a) => report::stats(a),
        Command::Agree(a) => report::agree(a),
        Command::Serve(a) => data::serve(a),
        Command::Lexicon(a) => data::lexicon(a),
        Command::Split(a) => data::split(a),
        Command::Validate(a) => data::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
