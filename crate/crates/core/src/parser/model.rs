use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decode::{assign_labels, eisner, ArcScores};
use super::vocab::Vocab;
use super::{Mode, ParserConfig};
use crate::autodiff::nn::{lookup, BiLstm, Mlp};
use crate::autodiff::{Graph, ParamId, ParamStore, Reduction, Tensor, Var};
use crate::embeddings::{EmbeddingTable, ExternalVectors};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::treebank::{DepTree, Label, SentenceTreebank, WordEntry, WordTreebank};
use crate::wordrep::{fallback_tree, normal_table, Lexicon, WordRep, WordRepDims};

/// Index of the virtual-root token in vocabularies built with specials.
pub const ROOT_INDEX: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabs {
    /// Characters: parser items in word-internal mode, word-representation
    /// input in sentence mode.
    pub chars: Vocab,
    pub words: Option<Vocab>,
    /// Every training word with its frequency, for frequency-bucketed
    /// evaluation.
    pub word_counts: Option<Vocab>,
    pub pos: Option<Vocab>,
    pub labels: Vocab,
}

impl Vocabs {
    /// Word-internal vocabularies; characters found only in `pretrained` are
    /// appended so they keep their vectors.
    pub fn for_words(tb: &WordTreebank, min_freq: u64, pretrained: Option<&EmbeddingTable>) -> Self {
        let mut chars = Vocab::with_specials(
            tb.iter().flat_map(|e| e.surface.chars().map(String::from)),
            min_freq,
        );
        if let Some(p) = pretrained {
            chars.extend(&p.tokens);
        }
        Vocabs {
            chars,
            words: None,
            word_counts: None,
            pos: None,
            labels: Vocab::fixed(Label::ALL.iter().map(|l| l.as_str())),
        }
    }

    /// Sentence vocabularies. Labels are the sorted set of training labels.
    pub fn for_sentences(
        tb: &SentenceTreebank,
        min_freq: u64,
        pretrained: Option<&EmbeddingTable>,
    ) -> Self {
        let all_words = || tb.iter().flat_map(|e| e.words.iter());
        let mut words = Vocab::with_specials(all_words(), min_freq);
        if let Some(p) = pretrained {
            words.extend(&p.tokens);
        }
        let chars = Vocab::with_specials(
            all_words().flat_map(|w| w.chars().map(String::from)),
            min_freq,
        );
        let has_pos = tb.iter().any(|e| e.pos_tags.is_some());
        let pos = has_pos.then(|| {
            Vocab::with_specials(tb.iter().flat_map(|e| e.pos_tags.iter().flatten()), 1)
        });
        let labels: BTreeSet<&str> = tb
            .iter()
            .flat_map(|e| e.labels.iter().map(String::as_str))
            .collect();
        Vocabs {
            chars,
            words: Some(words),
            word_counts: Some(Vocab::with_specials(all_words(), 1)),
            pos,
            labels: Vocab::fixed(labels),
        }
    }

    pub fn reindex(&mut self) {
        self.chars.reindex();
        self.labels.reindex();
        for v in [&mut self.words, &mut self.word_counts, &mut self.pos]
            .into_iter()
            .flatten()
        {
            v.reindex();
        }
    }
}

/// One parser input: position 0 is the virtual root.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Item ids (characters or words), length `n + 1`.
    pub tokens: Vec<usize>,
    /// POS ids, length `n + 1`, or empty.
    pub pos: Vec<usize>,
    /// Character ids per word for the word representation, or empty.
    pub chars: Vec<Vec<usize>>,
    /// Word-internal structure per word for structure-aware
    /// representations, or empty.
    pub structures: Vec<DepTree>,
    /// Externally supplied vectors per position, or empty.
    pub external: Vec<Option<Vec<f64>>>,
    /// Gold heads of positions `1..=n`, or empty.
    pub heads: Vec<usize>,
    /// Gold label ids; `None` for labels outside the vocabulary.
    pub labels: Vec<Option<usize>>,
}

impl Sample {
    /// Number of real positions.
    pub fn len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_gold(&self) -> bool {
        !self.heads.is_empty()
    }
}

/// All arc and label scores of one input.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredChart {
    pub n: usize,
    pub n_labels: usize,
    /// `(n+1) x (n+1)`, entry `[h * (n+1) + d]`.
    pub arcs: Vec<f64>,
    /// `(n+1) x (n+1) x L`, entry `[(h * (n+1) + d) * L + l]`.
    pub labels: Vec<f64>,
}

impl ScoredChart {
    pub fn arc(&self, h: usize, d: usize) -> f64 {
        self.arcs[h * (self.n + 1) + d]
    }

    pub fn label(&self, h: usize, d: usize, l: usize) -> f64 {
        self.labels[(h * (self.n + 1) + d) * self.n_labels + l]
    }

    pub fn arc_scores(&self) -> ArcScores<f64> {
        ArcScores::new(self.n, self.arcs.clone()).expect("chart is square")
    }
}

/// Head and label predictions for positions `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub heads: Vec<usize>,
    pub labels: Vec<usize>,
}

/// Intermediate MLP outputs of the scorer.
pub struct ScorerReps {
    /// `[n+1, arc+1]` head-side arc representations with a ones column.
    pub arc_head: Var,
    /// `[n+1, arc]` dependent-side arc representations.
    pub arc_dep: Var,
    /// `[n+1, label+1]`, ones column appended.
    pub label_head: Var,
    /// `[n+1, label+1]`, ones column appended.
    pub label_dep: Var,
}

#[derive(Clone, Debug)]
struct Layers {
    embed: ParamId,
    pretrained: Option<ParamId>,
    pos_embed: Option<ParamId>,
    wordrep: Option<WordRep>,
    encoder: BiLstm,
    arc_head: Mlp,
    arc_dep: Mlp,
    label_head: Mlp,
    label_dep: Mlp,
    w_arc: ParamId,
    w_label: ParamId,
}

/// Biaffine dependency parser.
///
/// The label biaffine stack is stored as one `[d+1, L*(d+1)]` matrix whose
/// column block `l` is the `(d+1) x (d+1)` operator of label `l`.
#[derive(Clone, Debug)]
pub struct ParserModel<T: Scalar> {
    pub config: ParserConfig,
    pub vocabs: Vocabs,
    pub store: ParamStore<T>,
    layers: Layers,
    lexicon: Option<Arc<Lexicon>>,
    external: Option<Arc<ExternalVectors>>,
}

impl<T: Scalar> ParserModel<T> {
    /// Fresh model with parameters drawn from `seed`. When `pretrained` is
    /// given, item embeddings are a frozen copy of it plus a trainable delta
    /// starting at zero.
    pub fn new(
        config: ParserConfig,
        vocabs: Vocabs,
        pretrained: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let (items, item_dim) = match config.mode {
            Mode::WordInternal => (&vocabs.chars, config.char_emb_dim),
            Mode::Sentence => (
                vocabs
                    .words
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("sentence mode needs a word vocabulary".into()))?,
                config.word_emb_dim,
            ),
        };
        let (embed, pretrained_id) = match pretrained {
            Some(table) => {
                if table.dim != item_dim {
                    return Err(Error::InvalidArgument(format!(
                        "pretrained vectors have dimension {}, expected {item_dim}",
                        table.dim
                    )));
                }
                let index = table.index();
                let mut values = vec![T::zero(); items.len() * item_dim];
                for (i, tok) in items.tokens().iter().enumerate() {
                    if let Some(&r) = index.get(tok.as_str()) {
                        for (dst, &v) in values[i * item_dim..(i + 1) * item_dim]
                            .iter_mut()
                            .zip(table.row(r))
                        {
                            *dst = T::lit(v);
                        }
                    }
                }
                let frozen = store.add("pretrained", Tensor::matrix(items.len(), item_dim, values)?, false);
                let delta = store.add("embed", Tensor::zeros(vec![items.len(), item_dim]), true);
                (delta, Some(frozen))
            }
            None => (
                store.add("embed", normal_table(items.len(), item_dim, &mut rng), true),
                None,
            ),
        };
        let mut input_dim = item_dim;
        let mut pos_embed = None;
        let mut wordrep = None;
        if config.mode == Mode::Sentence {
            if config.use_gold_pos {
                let pos = vocabs
                    .pos
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("gold POS requested but the treebank has none".into()))?;
                pos_embed = Some(store.add(
                    "pos_embed",
                    normal_table(pos.len(), config.pos_emb_dim, &mut rng),
                    true,
                ));
                input_dim += config.pos_emb_dim;
            }
            if config.wordrep != super::WordRepMode::None {
                let rep = WordRep::new(
                    &mut store,
                    "wordrep",
                    config.wordrep,
                    WordRepDims {
                        n_chars: vocabs.chars.len(),
                        char_dim: config.char_emb_dim,
                        label_dim: config.label_emb_dim,
                        hidden: config.wordrep_hidden,
                    },
                    config.use_labels,
                    &mut rng,
                )?;
                input_dim += rep.output_dim(&store);
                wordrep = Some(rep);
            }
        }
        let encoder = BiLstm::new(
            &mut store,
            "encoder",
            input_dim,
            config.lstm_hidden,
            config.lstm_layers,
            config.lstm_dropout,
            &mut rng,
        );
        let h = encoder.output_dim();
        let (a, r) = (config.arc_mlp_dim, config.label_mlp_dim);
        let arc_head = Mlp::new(&mut store, "mlp_arc_head", h, a, config.mlp_dropout, &mut rng);
        let arc_dep = Mlp::new(&mut store, "mlp_arc_dep", h, a, config.mlp_dropout, &mut rng);
        let label_head = Mlp::new(&mut store, "mlp_label_head", h, r, config.mlp_dropout, &mut rng);
        let label_dep = Mlp::new(&mut store, "mlp_label_dep", h, r, config.mlp_dropout, &mut rng);
        let n_labels = vocabs.labels.len();
        let w_arc = store.add("w_arc", Tensor::zeros(vec![a + 1, a]), true);
        let w_label = store.add("w_label", Tensor::zeros(vec![r + 1, n_labels * (r + 1)]), true);
        Ok(ParserModel {
            config,
            vocabs,
            store,
            layers: Layers {
                embed,
                pretrained: pretrained_id,
                pos_embed,
                wordrep,
                encoder,
                arc_head,
                arc_dep,
                label_head,
                label_dep,
                w_arc,
                w_label,
            },
            lexicon: None,
            external: None,
        })
    }

    /// Word-internal model with vocabularies drawn from `train`.
    pub fn for_words(
        config: ParserConfig,
        train: &WordTreebank,
        pretrained: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self> {
        if config.mode != Mode::WordInternal {
            return Err(Error::InvalidArgument("configuration is not word-internal".into()));
        }
        let vocabs = Vocabs::for_words(train, config.min_freq, pretrained);
        Self::new(config, vocabs, pretrained, seed)
    }

    /// Sentence model with vocabularies drawn from `train`. Structure-aware
    /// word representations read word structures from `lexicon`.
    pub fn for_sentences(
        config: ParserConfig,
        train: &SentenceTreebank,
        pretrained: Option<&EmbeddingTable>,
        lexicon: Option<Lexicon>,
        seed: u64,
    ) -> Result<Self> {
        if config.mode != Mode::Sentence {
            return Err(Error::InvalidArgument("configuration is not sentence mode".into()));
        }
        let vocabs = Vocabs::for_sentences(train, config.min_freq, pretrained);
        let mut m = Self::new(config, vocabs, pretrained, seed)?;
        m.lexicon = lexicon.map(Arc::new);
        Ok(m)
    }

    /// Rebuilds a model around parameters read from a checkpoint.
    pub(crate) fn from_parts(
        config: ParserConfig,
        mut vocabs: Vocabs,
        store: ParamStore<T>,
        lexicon: Option<Lexicon>,
    ) -> Result<Self> {
        config.validate()?;
        vocabs.reindex();
        let wordrep = if config.mode == Mode::Sentence && config.wordrep != super::WordRepMode::None {
            Some(WordRep::from_store(&store, "wordrep", config.wordrep, config.use_labels)?)
        } else {
            None
        };
        let layers = Layers {
            embed: lookup(&store, "embed")?,
            pretrained: store.id("pretrained"),
            pos_embed: store.id("pos_embed"),
            wordrep,
            encoder: BiLstm::from_store(&store, "encoder", config.lstm_dropout)?,
            arc_head: Mlp::from_store(&store, "mlp_arc_head", config.mlp_dropout)?,
            arc_dep: Mlp::from_store(&store, "mlp_arc_dep", config.mlp_dropout)?,
            label_head: Mlp::from_store(&store, "mlp_label_head", config.mlp_dropout)?,
            label_dep: Mlp::from_store(&store, "mlp_label_dep", config.mlp_dropout)?,
            w_arc: lookup(&store, "w_arc")?,
            w_label: lookup(&store, "w_label")?,
        };
        let r = store.get(layers.w_label).dims()[0];
        if store.get(layers.w_label).dims()[1] != vocabs.labels.len() * r {
            return Err(Error::Checkpoint("label biaffine does not match the label vocabulary".into()));
        }
        Ok(ParserModel {
            config,
            vocabs,
            store,
            layers,
            lexicon: lexicon.map(Arc::new),
            external: None,
        })
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        self.lexicon.as_deref()
    }

    pub fn set_lexicon(&mut self, lexicon: Option<Lexicon>) {
        self.lexicon = lexicon.map(Arc::new);
    }

    /// Vectors used instead of character embeddings wherever a
    /// `(word, position)` key is present. Dimensions must match the
    /// character embeddings.
    pub fn attach_external(&mut self, vectors: Arc<ExternalVectors>) -> Result<()> {
        if self.config.mode != Mode::WordInternal {
            return Err(Error::InvalidArgument("external vectors apply to word-internal mode".into()));
        }
        if vectors.dim != self.config.char_emb_dim {
            return Err(Error::InvalidArgument(format!(
                "external vectors have dimension {}, expected {}",
                vectors.dim, self.config.char_emb_dim
            )));
        }
        self.external = Some(vectors);
        Ok(())
    }

    pub fn external(&self) -> Option<&ExternalVectors> {
        self.external.as_deref()
    }

    pub fn n_labels(&self) -> usize {
        self.vocabs.labels.len()
    }

    /// Label id forced on root arcs, if any.
    pub fn root_label(&self) -> Option<usize> {
        match self.config.mode {
            Mode::WordInternal => Some(Label::Root.index()),
            Mode::Sentence => None,
        }
    }

    /// Same architecture and vocabularies in another precision.
    pub fn cast<U: Scalar>(&self) -> Result<ParserModel<U>> {
        let mut m = ParserModel::from_parts(
            self.config.clone(),
            self.vocabs.clone(),
            self.store.cast(),
            None,
        )?;
        m.lexicon = self.lexicon.clone();
        m.external = self.external.clone();
        Ok(m)
    }

    /// Input for a word; `tree` supplies gold targets.
    pub fn sample_word(&self, surface: &str, tree: Option<&DepTree>) -> Result<Sample> {
        let chars: Vec<char> = surface.chars().collect();
        if chars.is_empty() {
            return Err(Error::Empty("empty word".into()));
        }
        let mut tokens = Vec::with_capacity(chars.len() + 1);
        tokens.push(ROOT_INDEX);
        let mut buf = [0u8; 4];
        tokens.extend(chars.iter().map(|c| self.vocabs.chars.lookup(c.encode_utf8(&mut buf))));
        let external = match &self.external {
            Some(ext) => std::iter::once(None)
                .chain((1..=chars.len()).map(|k| ext.get(surface, k).map(<[f64]>::to_vec)))
                .collect(),
            None => Vec::new(),
        };
        let (heads, labels) = match tree {
            Some(t) => {
                if t.len() != chars.len() {
                    return Err(Error::Mismatch(format!(
                        "tree of {} nodes for {surface}",
                        t.len()
                    )));
                }
                (t.heads.clone(), t.labels.iter().map(|l| Some(l.index())).collect())
            }
            None => (Vec::new(), Vec::new()),
        };
        Ok(Sample {
            tokens,
            pos: Vec::new(),
            chars: Vec::new(),
            structures: Vec::new(),
            external,
            heads,
            labels,
        })
    }

    /// Input for a sentence; `gold` supplies heads and label strings.
    pub fn sample_sentence(
        &self,
        words: &[String],
        pos: Option<&[String]>,
        gold: Option<(&[usize], &[String])>,
    ) -> Result<Sample> {
        if words.is_empty() {
            return Err(Error::Empty("empty sentence".into()));
        }
        let wv = self
            .vocabs
            .words
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model is not a sentence parser".into()))?;
        let tokens = std::iter::once(ROOT_INDEX)
            .chain(words.iter().map(|w| wv.lookup(w)))
            .collect();
        let pos = match (&self.layers.pos_embed, &self.vocabs.pos) {
            (Some(_), Some(pv)) => {
                let tags = pos.ok_or_else(|| {
                    Error::InvalidArgument("model uses gold POS but the input has none".into())
                })?;
                std::iter::once(ROOT_INDEX)
                    .chain(tags.iter().map(|t| pv.lookup(t)))
                    .collect()
            }
            _ => Vec::new(),
        };
        let (chars, structures) = match &self.layers.wordrep {
            Some(rep) => {
                let chars = std::iter::once(vec![ROOT_INDEX])
                    .chain(words.iter().map(|w| {
                        let mut buf = [0u8; 4];
                        w.chars()
                            .map(|c| self.vocabs.chars.lookup(c.encode_utf8(&mut buf)))
                            .collect()
                    }))
                    .collect();
                let structures = if rep.mode.needs_structure() {
                    std::iter::once(DepTree::trivial())
                        .chain(words.iter().map(|w| match &self.lexicon {
                            Some(lex) => lex.structure(w),
                            None => fallback_tree(w.chars().count()),
                        }))
                        .collect()
                } else {
                    Vec::new()
                };
                (chars, structures)
            }
            None => (Vec::new(), Vec::new()),
        };
        let (heads, labels) = match gold {
            Some((h, l)) => (
                h.to_vec(),
                l.iter().map(|s| self.vocabs.labels.get(s)).collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        Ok(Sample {
            tokens,
            pos,
            chars,
            structures,
            external: Vec::new(),
            heads,
            labels,
        })
    }

    /// `[n+1, in]` input vectors before the encoder.
    pub fn embed(&self, g: &mut Graph<'_, T>, s: &Sample, rng: &mut dyn RngCore) -> Result<Var> {
        let table = g.param(self.layers.embed);
        let mut x = g.select_rows(table, &s.tokens)?;
        if let Some(p) = self.layers.pretrained {
            let p = g.param(p);
            let fixed = g.select_rows(p, &s.tokens)?;
            x = g.add(x, fixed)?;
        }
        if s.external.iter().any(Option::is_some) {
            let mut rows = Vec::with_capacity(s.tokens.len());
            for (i, ext) in s.external.iter().enumerate() {
                rows.push(match ext {
                    Some(v) => g.constant(Tensor::matrix(1, v.len(), v.iter().map(|&f| T::lit(f)).collect())?),
                    None => g.slice_rows(x, i, i + 1)?,
                });
            }
            x = g.concat_rows(&rows)?;
        }
        let mut parts = vec![x];
        if let Some(rep) = &self.layers.wordrep {
            let mut reps = Vec::with_capacity(s.chars.len());
            for (i, chars) in s.chars.iter().enumerate() {
                let structure = s.structures.get(i);
                reps.push(rep.forward(g, chars, structure, rng)?);
            }
            parts.push(g.concat_rows(&reps)?);
        }
        if let Some(p) = self.layers.pos_embed {
            let t = g.param(p);
            parts.push(g.select_rows(t, &s.pos)?);
        }
        let x = if parts.len() == 1 {
            parts[0]
        } else {
            g.concat_cols(&parts)?
        };
        g.dropout(x, self.config.embed_dropout, rng)
    }

    /// Top-layer BiLSTM states `h_0..h_n`.
    pub fn encode(&self, g: &mut Graph<'_, T>, s: &Sample, rng: &mut dyn RngCore) -> Result<Var> {
        let x = self.embed(g, s, rng)?;
        Ok(self.layers.encoder.forward(g, x, rng)?.states)
    }

    pub fn scorer_reps(&self, g: &mut Graph<'_, T>, hidden: Var, rng: &mut dyn RngCore) -> Result<ScorerReps> {
        let arc_head = self.layers.arc_head.forward(g, hidden, rng)?;
        let arc_dep = self.layers.arc_dep.forward(g, hidden, rng)?;
        let label_head = self.layers.label_head.forward(g, hidden, rng)?;
        let label_dep = self.layers.label_dep.forward(g, hidden, rng)?;
        Ok(ScorerReps {
            arc_head: g.append_ones(arc_head)?,
            arc_dep,
            label_head: g.append_ones(label_head)?,
            label_dep: g.append_ones(label_dep)?,
        })
    }

    /// `[n+1, n+1]` arc scores, entry `(h, d)`.
    pub fn arc_scores(&self, g: &mut Graph<'_, T>, reps: &ScorerReps) -> Result<Var> {
        let w = g.param(self.layers.w_arc);
        g.bilinear(reps.arc_head, w, reps.arc_dep)
    }

    /// `[n, L]` label scores of each dependent `1..=n` under the given heads.
    pub fn label_scores_at(&self, g: &mut Graph<'_, T>, reps: &ScorerReps, heads: &[usize]) -> Result<Var> {
        let n = heads.len();
        let r1 = g.value(reps.label_head).dims()[1];
        let n_labels = self.n_labels();
        let w = g.param(self.layers.w_label);
        let hsel = g.select_rows(reps.label_head, heads)?;
        let dsel = g.slice_rows(reps.label_dep, 1, n + 1)?;
        let projected = g.matmul(hsel, w)?;
        let tiled = g.concat_cols(&vec![dsel; n_labels])?;
        let prod = g.mul(projected, tiled)?;
        let mut blocks = Tensor::zeros(vec![n_labels * r1, n_labels]);
        for l in 0..n_labels {
            for k in 0..r1 {
                blocks.data_mut()[(l * r1 + k) * n_labels + l] = T::one();
            }
        }
        let blocks = g.constant(blocks);
        g.matmul(prod, blocks)
    }

    /// Summed arc and label cross-entropies over the positions of `s`.
    pub fn loss(&self, g: &mut Graph<'_, T>, s: &Sample, rng: &mut dyn RngCore) -> Result<(Var, Option<Var>)> {
        if !s.has_gold() {
            return Err(Error::InvalidArgument("sample without gold tree".into()));
        }
        let hidden = self.encode(g, s, rng)?;
        let reps = self.scorer_reps(g, hidden, rng)?;
        let arcs = self.arc_scores(g, &reps)?;
        // column d holds the scores of all candidate heads of d
        let by_dep = g.transpose(arcs);
        let targets: Vec<Option<usize>> = std::iter::once(None)
            .chain(s.heads.iter().map(|&h| Some(h)))
            .collect();
        let arc_loss = g.cross_entropy(by_dep, &targets, Reduction::Sum)?;
        let label_loss = if s.labels.iter().any(Option::is_some) {
            let logits = self.label_scores_at(g, &reps, &s.heads)?;
            Some(g.cross_entropy(logits, &s.labels, Reduction::Sum)?)
        } else {
            None
        };
        Ok((arc_loss, label_loss))
    }

    /// Full score chart in evaluation mode.
    pub fn chart(&self, s: &Sample) -> Result<ScoredChart> {
        let mut g = Graph::new(&self.store, false);
        // dropout is the identity outside training, so the generator is never read
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hidden = self.encode(&mut g, s, &mut rng)?;
        let reps = self.scorer_reps(&mut g, hidden, &mut rng)?;
        let arcs = self.arc_scores(&mut g, &reps)?;
        let n = s.len();
        let n_labels = self.n_labels();
        let r1 = g.value(reps.label_head).dims()[1];
        let w = g.param(self.layers.w_label);
        let projected = g.matmul(reps.label_head, w)?;
        let dep_t = g.transpose(reps.label_dep);
        let mut labels = vec![0.0; (n + 1) * (n + 1) * n_labels];
        for l in 0..n_labels {
            let block = g.slice_cols(projected, l * r1, (l + 1) * r1)?;
            let scores = g.matmul(block, dep_t)?;
            for (hd, &v) in g.value(scores).data().iter().enumerate() {
                labels[hd * n_labels + l] = v.as_f64();
            }
        }
        let arcs: Vec<f64> = g.value(arcs).data().iter().map(|v| v.as_f64()).collect();
        if arcs.iter().chain(&labels).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parser scores".into()));
        }
        Ok(ScoredChart {
            n,
            n_labels,
            arcs,
            labels,
        })
    }

    /// Eisner decoding followed by per-arc label choice.
    pub fn predict(&self, s: &Sample) -> Result<Prediction> {
        let chart = self.chart(s)?;
        Ok(decode_chart(&chart, self.root_label()))
    }

    /// Parses one word (at least two characters).
    pub fn parse_word(&self, surface: &str) -> Result<WordEntry> {
        if self.config.mode != Mode::WordInternal {
            return Err(Error::InvalidArgument("model is not a word-internal parser".into()));
        }
        let n = surface.chars().count();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "`{surface}` has {n} character(s); word-internal parsing needs at least 2"
            )));
        }
        let p = self.predict(&self.sample_word(surface, None)?)?;
        let labels = p
            .labels
            .iter()
            .map(|&l| Label::from_index(l).expect("label vocabulary is the fixed label set"))
            .collect();
        Ok(WordEntry::new(surface, DepTree::new(p.heads, labels)))
    }

    /// Parses one sentence into heads and label strings.
    pub fn parse_sentence(&self, words: &[String], pos: Option<&[String]>) -> Result<(Vec<usize>, Vec<String>)> {
        if self.config.mode != Mode::Sentence {
            return Err(Error::InvalidArgument("model is not a sentence parser".into()));
        }
        let p = self.predict(&self.sample_sentence(words, pos, None)?)?;
        let labels = p
            .labels
            .iter()
            .map(|&l| self.vocabs.labels.token(l).to_string())
            .collect();
        Ok((p.heads, labels))
    }
}

/// Decodes a chart: Eisner for heads, then the best label per arc.
pub fn decode_chart(chart: &ScoredChart, root_label: Option<usize>) -> Prediction {
    let heads = eisner(&chart.arc_scores());
    let labels = assign_labels(&heads, chart.n_labels, root_label, |h, d, l| chart.label(h, d, l));
    Prediction { heads, labels }
}
