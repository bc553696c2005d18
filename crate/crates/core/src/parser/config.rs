use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::AdamConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    WordInternal,
    Sentence,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-internal" | "word" => Ok(Mode::WordInternal),
            "sentence" => Ok(Mode::Sentence),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::WordInternal => "word-internal",
            Mode::Sentence => "sentence",
        })
    }
}

/// Word representation added to word embeddings in sentence mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordRepMode {
    None,
    CharLstm,
    LabelCharLstm,
    LabelGcn,
}

impl WordRepMode {
    pub fn needs_structure(self) -> bool {
        matches!(self, WordRepMode::LabelCharLstm | WordRepMode::LabelGcn)
    }
}

impl FromStr for WordRepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(WordRepMode::None),
            "charlstm" => Ok(WordRepMode::CharLstm),
            "labelcharlstm" => Ok(WordRepMode::LabelCharLstm),
            "labelgcn" => Ok(WordRepMode::LabelGcn),
            _ => Err(Error::InvalidArgument(format!("unknown word representation `{s}`"))),
        }
    }
}

impl fmt::Display for WordRepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordRepMode::None => "none",
            WordRepMode::CharLstm => "charlstm",
            WordRepMode::LabelCharLstm => "labelcharlstm",
            WordRepMode::LabelGcn => "labelgcn",
        })
    }
}

/// Architecture of a parser. Defaults follow the word-internal setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParserConfig {
    pub mode: Mode,
    pub char_emb_dim: usize,
    pub word_emb_dim: usize,
    pub label_emb_dim: usize,
    pub pos_emb_dim: usize,
    pub use_gold_pos: bool,
    pub wordrep: WordRepMode,
    /// Per-direction hidden size of the CharLSTM variants, and GCN width.
    pub wordrep_hidden: usize,
    /// `false` zeroes the label channel of the structure-aware variants.
    pub use_labels: bool,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub arc_mlp_dim: usize,
    pub label_mlp_dim: usize,
    pub embed_dropout: f64,
    pub lstm_dropout: f64,
    pub mlp_dropout: f64,
    /// Training tokens rarer than this map to `<unk>`.
    pub min_freq: u64,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            mode: Mode::WordInternal,
            char_emb_dim: 100,
            word_emb_dim: 100,
            label_emb_dim: 50,
            pos_emb_dim: 50,
            use_gold_pos: false,
            wordrep: WordRepMode::None,
            wordrep_hidden: 50,
            use_labels: true,
            lstm_layers: 3,
            lstm_hidden: 400,
            arc_mlp_dim: 500,
            label_mlp_dim: 100,
            embed_dropout: 0.33,
            lstm_dropout: 0.33,
            mlp_dropout: 0.33,
            min_freq: 2,
        }
    }
}

impl ParserConfig {
    /// Sentence-level defaults: 50-dimensional char and label embeddings and a
    /// CharLSTM word representation.
    pub fn sentence() -> Self {
        ParserConfig {
            mode: Mode::Sentence,
            char_emb_dim: 50,
            label_emb_dim: 50,
            wordrep: WordRepMode::CharLstm,
            ..ParserConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("char_emb_dim", self.char_emb_dim),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("arc_mlp_dim", self.arc_mlp_dim),
            ("label_mlp_dim", self.label_mlp_dim),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, p) in [
            ("embed_dropout", self.embed_dropout),
            ("lstm_dropout", self.lstm_dropout),
            ("mlp_dropout", self.mlp_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1)")));
            }
        }
        if self.mode == Mode::Sentence {
            if self.word_emb_dim == 0 {
                return Err(Error::InvalidArgument("word_emb_dim must be positive".into()));
            }
            if self.wordrep != WordRepMode::None && self.wordrep_hidden == 0 {
                return Err(Error::InvalidArgument("wordrep_hidden must be positive".into()));
            }
            if self.wordrep.needs_structure() && self.label_emb_dim == 0 {
                return Err(Error::InvalidArgument("label_emb_dim must be positive".into()));
            }
            if self.use_gold_pos && self.pos_emb_dim == 0 {
                return Err(Error::InvalidArgument("pos_emb_dim must be positive".into()));
            }
        } else if self.wordrep != WordRepMode::None {
            return Err(Error::InvalidArgument(
                "a word representation only applies in sentence mode".into(),
            ));
        }
        Ok(())
    }
}

/// Optimisation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Mini-batch size in tokens; batches are filled greedily in shuffled
    /// order.
    pub batch_tokens: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without a dev LAS improvement.
    pub patience: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Stop as soon as dev LAS reaches 100.
    pub stop_at_perfect: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_tokens: 5000,
            max_epochs: 1000,
            patience: 100,
            seed: 1,
            adam: AdamConfig::default(),
            stop_at_perfect: false,
        }
    }
}
