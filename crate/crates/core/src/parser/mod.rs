//! Biaffine graph-based dependency parser.
//!
//! Items (characters of a word, or words of a sentence) are embedded,
//! encoded by a stacked BiLSTM and scored by biaffine arc and label
//! classifiers over MLP projections. Trees are decoded with the Eisner
//! algorithm under a single-root constraint; labels are chosen per arc.

mod checkpoint;
mod config;
mod decode;
mod eval;
mod model;
mod train;
mod vocab;

pub use checkpoint::{sidecar_path, MAGIC, VERSION};
pub use config::{Mode, ParserConfig, TrainConfig, WordRepMode};
pub use decode::{assign_labels, eisner, tree_score, ArcScores};
pub use eval::{frequency_bucket, score_sentences, score_words, EvalReport, Tally};
pub use model::{decode_chart, ParserModel, Prediction, Sample, ScoredChart, ScorerReps, Vocabs, ROOT_INDEX};
pub use train::{make_batches, train_loop, train_sentences, train_words, EpochLog, TrainOutcome};
pub use vocab::{Vocab, ROOT, UNK};
