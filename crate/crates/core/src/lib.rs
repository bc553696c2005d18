//! Character-level word-internal dependency structure.
//!
//! The crate is organised bottom-up:
//!
//! * [`treebank`] holds the label scheme, tree types, the block file format
//!   and structural validation.
//! * [`analysis`] computes label distributions, agreement and accuracy
//!   ratios and structural pattern statistics over treebanks.
//! * [`autodiff`] is a small reverse-mode differentiation engine over dense
//!   matrices, generic over the scalar type.
//! * [`parser`] is the biaffine graph-based parser with Eisner decoding.
//! * [`wordrep`] derives structure-aware word vectors (CharLSTM,
//!   LabelCharLSTM, LabelGCN) used by sentence-level parsing.
//!
//! Numeric code is generic over [`Scalar`] (`f32` and `f64`); the aliases
//! below fix the precision used by the command-line tools (`f32`) and by
//! gradient checks (`f64`).

pub mod analysis;
pub mod autodiff;
pub mod embeddings;
pub mod error;
pub mod parser;
pub mod scalar;
pub mod treebank;
pub mod wordrep;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use error::{Error, Result};
pub use scalar::{Precision, Scalar};
pub use treebank::{DepTree, Label, SentenceEntry, Treebank, TreebankKind, WordEntry};

/// Single-precision tensor.
pub type Tensor32 = autodiff::Tensor<f32>;
/// Double-precision tensor.
pub type Tensor64 = autodiff::Tensor<f64>;
/// Parser model in the precision used for training and inference.
pub type ParserModel32 = parser::ParserModel<f32>;
/// Parser model in the precision used for gradient checks.
pub type ParserModel64 = parser::ParserModel<f64>;
/// Parameter store used for training and inference.
pub type ParamStore32 = autodiff::ParamStore<f32>;
/// Parameter store used for gradient checks.
pub type ParamStore64 = autodiff::ParamStore<f64>;
