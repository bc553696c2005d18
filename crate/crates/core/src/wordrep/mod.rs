//! Word vectors built from a word's characters and, optionally, its
//! internal dependency structure.
//!
//! * CharLSTM: final forward and backward states of a one-layer BiLSTM over
//!   character embeddings.
//! * LabelCharLSTM: the same BiLSTM over `emb(c_k) ⊕ emb(l_k)`, where `l_k`
//!   labels the arc from character `k` to its head.
//! * LabelGCN: a two-layer gated GCN over the word-internal tree with the
//!   LabelCharLSTM inputs, mean-pooled.

mod gcn;
mod lexicon;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

pub use gcn::{adjacency, GcnLayer, LabelGcn, GCN_LAYERS};
pub use lexicon::{fallback_tree, Lexicon, LexiconSource};

use crate::autodiff::nn::{lookup, BiLstm};
use crate::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::parser::WordRepMode;
use crate::scalar::Scalar;
use crate::treebank::{DepTree, Label};

/// Number of word-internal labels, the size of the label embedding table.
pub const N_LABELS: usize = Label::ALL.len();

/// Random normal table, the initialisation of embedding lookups.
pub fn normal_table<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor<T> {
    let data = (0..rows * cols)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            T::lit(v)
        })
        .collect();
    Tensor::matrix(rows, cols, data).expect("sized")
}

/// Shape of a [`WordRep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordRepDims {
    pub n_chars: usize,
    pub char_dim: usize,
    pub label_dim: usize,
    /// Per-direction LSTM size; the GCN width is twice this so all variants
    /// share one output size.
    pub hidden: usize,
}

/// A word representation module with its own character (and label)
/// embeddings.
#[derive(Clone, Debug)]
pub struct WordRep {
    pub mode: WordRepMode,
    pub use_labels: bool,
    pub char_embed: ParamId,
    pub label_embed: Option<ParamId>,
    pub lstm: Option<BiLstm>,
    pub gcn: Option<LabelGcn>,
    pub label_dim: usize,
}

impl WordRep {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        mode: WordRepMode,
        dims: WordRepDims,
        use_labels: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if mode == WordRepMode::None {
            return Err(Error::InvalidArgument("no word representation requested".into()));
        }
        let char_embed = store.add(
            format!("{name}.char_embed"),
            normal_table(dims.n_chars, dims.char_dim, rng),
            true,
        );
        let label_embed = mode.needs_structure().then(|| {
            store.add(
                format!("{name}.label_embed"),
                normal_table(N_LABELS, dims.label_dim, rng),
                true,
            )
        });
        let in_dim = dims.char_dim + if mode.needs_structure() { dims.label_dim } else { 0 };
        let (lstm, gcn) = match mode {
            WordRepMode::LabelGcn => (
                None,
                Some(LabelGcn::new(store, &format!("{name}.gcn"), in_dim, 2 * dims.hidden, rng)),
            ),
            _ => (
                Some(BiLstm::new(store, &format!("{name}.lstm"), in_dim, dims.hidden, 1, 0.0, rng)),
                None,
            ),
        };
        Ok(WordRep {
            mode,
            use_labels,
            char_embed,
            label_embed,
            lstm,
            gcn,
            label_dim: if mode.needs_structure() { dims.label_dim } else { 0 },
        })
    }

    pub fn from_store<T: Scalar>(
        store: &ParamStore<T>,
        name: &str,
        mode: WordRepMode,
        use_labels: bool,
    ) -> Result<Self> {
        let char_embed = lookup(store, &format!("{name}.char_embed"))?;
        let label_embed = if mode.needs_structure() {
            Some(lookup(store, &format!("{name}.label_embed"))?)
        } else {
            None
        };
        let label_dim = label_embed.map_or(0, |id| store.get(id).dims()[1]);
        let (lstm, gcn) = match mode {
            WordRepMode::None => {
                return Err(Error::InvalidArgument("no word representation requested".into()))
            }
            WordRepMode::LabelGcn => (None, Some(LabelGcn::from_store(store, &format!("{name}.gcn"))?)),
            _ => (Some(BiLstm::from_store(store, &format!("{name}.lstm"), 0.0)?), None),
        };
        Ok(WordRep {
            mode,
            use_labels,
            char_embed,
            label_embed,
            lstm,
            gcn,
            label_dim,
        })
    }

    pub fn output_dim<T: Scalar>(&self, store: &ParamStore<T>) -> usize {
        match (&self.lstm, &self.gcn) {
            (Some(l), _) => l.output_dim(),
            (_, Some(g)) => store.get(g.layers[GCN_LAYERS - 1].bias).dims()[1],
            _ => unreachable!("constructed with one encoder"),
        }
    }

    /// Node inputs `z_k`: character embeddings, with label embeddings
    /// appended for the structure-aware variants (zeros when labels are
    /// switched off).
    pub fn inputs<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        chars: &[usize],
        labels: Option<&[usize]>,
    ) -> Result<Var> {
        if chars.is_empty() {
            return Err(Error::Empty("word without characters".into()));
        }
        let table = g.param(self.char_embed);
        let c = g.select_rows(table, chars)?;
        let Some(label_table) = self.label_embed else {
            return Ok(c);
        };
        let labels = labels.ok_or_else(|| {
            Error::InvalidArgument(format!("{} needs a word-internal structure", self.mode))
        })?;
        if labels.len() != chars.len() {
            return Err(Error::Mismatch(format!(
                "{} labels for {} characters",
                labels.len(),
                chars.len()
            )));
        }
        let l = if self.use_labels {
            let t = g.param(label_table);
            g.select_rows(t, labels)?
        } else {
            g.constant(Tensor::zeros(vec![chars.len(), self.label_dim]))
        };
        g.concat_cols(&[c, l])
    }

    /// `[1, out]` representation of one word. `structure` is required for the
    /// structure-aware variants and must cover every character.
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        chars: &[usize],
        structure: Option<&DepTree>,
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        if let Some(t) = structure {
            if t.len() != chars.len() {
                return Err(Error::Mismatch(format!(
                    "tree of {} nodes for a {}-character word",
                    t.len(),
                    chars.len()
                )));
            }
        }
        let label_ids: Option<Vec<usize>> =
            structure.map(|t| t.labels.iter().map(|l| l.index()).collect());
        match self.mode {
            WordRepMode::CharLstm => {
                let z = self.inputs(g, chars, None)?;
                last_states(self.lstm.as_ref().expect("lstm"), g, z, rng)
            }
            WordRepMode::LabelCharLstm => {
                let z = self.inputs(g, chars, label_ids.as_deref())?;
                last_states(self.lstm.as_ref().expect("lstm"), g, z, rng)
            }
            WordRepMode::LabelGcn => {
                let tree = structure.ok_or_else(|| {
                    Error::InvalidArgument("labelgcn needs a word-internal structure".into())
                })?;
                let z = self.inputs(g, chars, label_ids.as_deref())?;
                self.gcn.as_ref().expect("gcn").forward(g, z, &tree.heads)
            }
            WordRepMode::None => unreachable!("rejected at construction"),
        }
    }

    /// LabelCharLSTM over an explicit per-character label sequence.
    pub fn label_char_lstm<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        chars: &[usize],
        labels: &[usize],
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        let lstm = self
            .lstm
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no char lstm", self.mode)))?;
        let z = self.inputs(g, chars, Some(labels))?;
        last_states(lstm, g, z, rng)
    }
}

/// `last forward ⊕ last backward` of a BiLSTM run over `z`.
pub fn last_states<T: Scalar>(
    lstm: &BiLstm,
    g: &mut Graph<'_, T>,
    z: Var,
    rng: &mut dyn RngCore,
) -> Result<Var> {
    let out = lstm.forward(g, z, rng)?;
    g.concat_cols(&[out.last_forward, out.last_backward])
}
