//! Generators and brute-force oracles shared by test suites.
//!
//! Nothing here is used by the library proper. The oracles deliberately
//! avoid the library's own tree algorithms.

use rand::{Rng, SeedableRng};

use crate::treebank::{DepTree, Label, WordEntry};

const CHAR_POOL: &str = "婚姻法常上下文大衣年轻不同放到期走过沙发制服发展人民中国经济学生";

/// Random single-rooted acyclic tree on `n` nodes (possibly non-projective).
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> DepTree {
    assert!(n >= 1);
    let mut order: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut heads = vec![0; n];
    for k in 1..n {
        let attach_to = order[rng.random_range(0..k)];
        heads[order[k] - 1] = attach_to;
    }
    with_random_labels(rng, heads)
}

/// Random projective tree: each subtree covers a contiguous span.
pub fn random_projective_tree<R: Rng>(rng: &mut R, n: usize) -> DepTree {
    fn span<R: Rng>(rng: &mut R, lo: usize, hi: usize, parent: usize, heads: &mut [usize]) {
        if lo > hi {
            return;
        }
        let r = rng.random_range(lo..=hi);
        heads[r - 1] = parent;
        if r > lo {
            span(rng, lo, r - 1, r, heads);
        }
        span(rng, r + 1, hi, r, heads);
    }
    assert!(n >= 1);
    let mut heads = vec![0; n];
    span(rng, 1, n, 0, &mut heads);
    with_random_labels(rng, heads)
}

fn with_random_labels<R: Rng>(rng: &mut R, heads: Vec<usize>) -> DepTree {
    let labels = heads
        .iter()
        .map(|&h| {
            if h == 0 {
                Label::Root
            } else {
                Label::ALL[rng.random_range(1..Label::ALL.len())]
            }
        })
        .collect();
    DepTree::new(heads, labels)
}

pub fn random_surface<R: Rng>(rng: &mut R, n: usize) -> String {
    let pool: Vec<char> = CHAR_POOL.chars().collect();
    (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()
}

/// Random word entry with 2..=`max_len` characters.
pub fn random_word_entry<R: Rng>(rng: &mut R, max_len: usize, projective: bool) -> WordEntry {
    let n = rng.random_range(2..=max_len.max(2));
    let tree = if projective {
        random_projective_tree(rng, n)
    } else {
        random_tree(rng, n)
    };
    let tags = ["Noun", "Verb", "Proper Noun", "Adjective", "Adverb", "Numeral", "X"];
    let n_tags = rng.random_range(0..3);
    let mut pos: Vec<String> = Vec::new();
    for _ in 0..n_tags {
        let t = tags[rng.random_range(0..tags.len())].to_string();
        if !pos.contains(&t) {
            pos.push(t);
        }
    }
    WordEntry {
        surface: random_surface(rng, n),
        tree,
        pos_tags: pos,
        sense_id: rng.random_range(1..4),
    }
}

/// Descendant relation by transitive closure: `desc[a][b]` iff `b` is a
/// (reflexive) descendant of `a`. Nodes are `0..=n`.
#[allow(clippy::needless_range_loop)]
pub fn descendant_closure(heads: &[usize]) -> Vec<Vec<bool>> {
    let n = heads.len();
    let mut desc = vec![vec![false; n + 1]; n + 1];
    for (i, row) in desc.iter_mut().enumerate() {
        row[i] = true;
    }
    for d in 1..=n {
        if heads[d - 1] <= n {
            desc[heads[d - 1]][d] = true;
        }
    }
    for k in 0..=n {
        for a in 0..=n {
            if desc[a][k] {
                for b in 0..=n {
                    if desc[k][b] {
                        desc[a][b] = true;
                    }
                }
            }
        }
    }
    desc
}

/// O(n^3) projectivity check over the closure.
pub fn brute_force_projective(heads: &[usize]) -> bool {
    let desc = descendant_closure(heads);
    (1..=heads.len()).all(|d| {
        let h = heads[d - 1];
        let (lo, hi) = (h.min(d), h.max(d));
        (lo + 1..hi).all(|k| desc[h][k])
    })
}

/// Whether `heads` is single-rooted and every node reaches the root.
pub fn brute_force_is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 || heads.iter().any(|&h| h > n) {
        return false;
    }
    let desc = descendant_closure(heads);
    (1..=n).all(|d| desc[0][d] && !(1..=n).any(|k| k != d && desc[d][k] && desc[k][d]))
        && (1..=n).all(|d| heads[d - 1] != d)
}

/// Every single-rooted projective tree on `n` nodes, by exhaustive search
/// over all `(n+1)^n` head arrays.
pub fn enumerate_projective_trees(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut heads = vec![0usize; n];
    loop {
        if brute_force_is_tree(&heads) && brute_force_projective(&heads) {
            out.push(heads.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            heads[i] += 1;
            if heads[i] <= n {
                break;
            }
            heads[i] = 0;
            i += 1;
        }
    }
}

/// Best single-rooted projective tree score by exhaustive enumeration,
/// summing arc scores directly.
pub fn brute_force_best<S>(scores: &crate::parser::ArcScores<S>) -> S
where
    S: Copy + PartialOrd + std::ops::Add<Output = S>,
{
    let mut best: Option<S> = None;
    for heads in enumerate_projective_trees(scores.n()) {
        let mut total = scores.get(heads[0], 1);
        for (i, &h) in heads.iter().enumerate().skip(1) {
            total = total + scores.get(h, i + 1);
        }
        if best.is_none_or(|b| total > b) {
            best = Some(total);
        }
    }
    best.expect("at least one tree")
}

/// Word-internal configuration with every width set to `dim` and dropout
/// off.
pub fn tiny_word_config(dim: usize, layers: usize) -> crate::parser::ParserConfig {
    crate::parser::ParserConfig {
        char_emb_dim: dim,
        lstm_layers: layers,
        lstm_hidden: dim,
        arc_mlp_dim: dim,
        label_mlp_dim: dim,
        embed_dropout: 0.0,
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
        min_freq: 1,
        ..Default::default()
    }
}

/// Overwrites every parameter with uniform values in `±scale`; zero-initialised
/// scorers otherwise hide most gradients.
pub fn randomize_params<T: crate::Scalar>(store: &mut crate::autodiff::ParamStore<T>, seed: u64, scale: f64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data_mut() {
            *v = T::lit(rng.random_range(-scale..scale));
        }
    }
}

/// Treebank of `n` distinct words with projective trees drawn from `seed`.
pub fn synthetic_word_treebank(n: usize, max_len: usize, seed: u64) -> crate::treebank::WordTreebank {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut entries = Vec::with_capacity(n);
    while entries.len() < n {
        let len = rng.random_range(2..=max_len.max(2));
        let surface = random_surface(&mut rng, len);
        if seen.insert(surface.clone()) {
            entries.push(WordEntry::new(surface, random_projective_tree(&mut rng, len)));
        }
    }
    crate::treebank::Treebank::from_entries(entries).expect("distinct legal entries")
}

/// Two two-character words: the first predicted exactly, the second with
/// correct heads and one wrong label.
pub fn metric_oracle_example() -> (
    crate::treebank::WordTreebank,
    std::collections::BTreeMap<String, DepTree>,
) {
    use Label::*;
    let gold = crate::treebank::Treebank::from_entries(vec![
        WordEntry::new("大衣", DepTree::new(vec![2, 0], vec![Att, Root])),
        WordEntry::new("放到", DepTree::new(vec![0, 1], vec![Root, Cmp])),
    ])
    .expect("legal");
    let predicted = [
        ("大衣".to_string(), DepTree::new(vec![2, 0], vec![Att, Root])),
        ("放到".to_string(), DepTree::new(vec![0, 1], vec![Root, Obj])),
    ]
    .into_iter()
    .collect();
    (gold, predicted)
}

/// Smallest distance of any MLP pre-activation from the LeakyReLU kink,
/// recovered from the activations.
pub fn mlp_kink_margin(model: &crate::parser::ParserModel<f64>, sample: &crate::parser::Sample) -> f64 {
    let mut g = crate::autodiff::Graph::new(&model.store, false);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let hidden = model.encode(&mut g, sample, &mut rng).expect("encodes");
    let reps = model.scorer_reps(&mut g, hidden, &mut rng).expect("scores");
    let mut margin = f64::INFINITY;
    for (v, ones) in [(reps.arc_head, true), (reps.arc_dep, false), (reps.label_head, true), (reps.label_dep, true)] {
        let t = g.value(v);
        let cols = t.cols() - ones as usize;
        for r in 0..t.rows() {
            for &y in &t.row(r)[..cols] {
                let pre = if y >= 0.0 { y } else { -y / crate::autodiff::nn::LEAKY_SLOPE };
                margin = margin.min(pre);
            }
        }
    }
    margin
}

/// Finite-difference step of the full-model check; small enough for the
/// fourth-order stencil, large enough that rounding noise on structurally
/// zero gradients stays below the relative-error floor.
pub const FULL_MODEL_EPS: f64 = 3e-3;

/// Full word-internal model (widths 8, three BiLSTM layers) on a
/// three-character word, with random parameters drawn from the first seed
/// at or after `seed` whose MLP pre-activations all stay `0.05` away from
/// the LeakyReLU kink.
pub fn full_model_grad_check(seed: u64) -> crate::Result<crate::autodiff::GradCheckReport> {
    use crate::parser::ParserModel;
    let tree = DepTree::new(vec![2, 3, 0], vec![Label::Att, Label::Att, Label::Root]);
    let tb = crate::treebank::Treebank::from_entries(vec![WordEntry::new("婚姻法", tree.clone())])?;
    for s in seed.. {
        let mut m = ParserModel::<f64>::for_words(tiny_word_config(8, 3), &tb, None, s)?;
        randomize_params(&mut m.store, s, 0.5);
        let sample = m.sample_word("婚姻法", Some(&tree))?;
        if mlp_kink_margin(&m, &sample) < 0.05 {
            continue;
        }
        return crate::autodiff::grad_check(
            &m.store,
            |g| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
                let (a, l) = m.loss(g, &sample, &mut rng)?;
                g.add(a, l.expect("labels present"))
            },
            FULL_MODEL_EPS,
            1,
        );
    }
    unreachable!("unbounded seed search")
}

/// Word representation with widths `dim` and parameters from `seed`.
pub fn word_rep(
    store: &mut crate::autodiff::ParamStore<f64>,
    mode: crate::parser::WordRepMode,
    n_chars: usize,
    dim: usize,
    seed: u64,
) -> crate::wordrep::WordRep {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dims = crate::wordrep::WordRepDims {
        n_chars,
        char_dim: dim,
        label_dim: dim,
        hidden: dim,
    };
    crate::wordrep::WordRep::new(store, "wordrep", mode, dims, true, &mut rng).expect("valid mode")
}

fn rep_value(
    store: &crate::autodiff::ParamStore<f64>,
    rep: &crate::wordrep::WordRep,
    chars: &[usize],
    tree: Option<&DepTree>,
) -> Vec<f64> {
    let mut g = crate::autodiff::Graph::new(store, false);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let v = rep.forward(&mut g, chars, tree, &mut rng).expect("forward");
    g.value(v).data().to_vec()
}

/// LabelCharLSTM with one label on every character against a CharLSTM
/// whose character table holds `emb(c) ⊕ emb(l)` and whose LSTM weights
/// are copied. Returns both outputs.
pub fn single_label_collapse(seed: u64) -> (Vec<f64>, Vec<f64>) {
    use crate::parser::WordRepMode;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xC0);
    let (n_chars, dim) = (12, 6);
    let mut store = crate::autodiff::ParamStore::new();
    let rep = word_rep(&mut store, WordRepMode::LabelCharLstm, n_chars, dim, seed);
    let k = rng.random_range(1..=8);
    let chars: Vec<usize> = (0..k).map(|_| rng.random_range(0..n_chars)).collect();
    let label = Label::ALL[rng.random_range(0..Label::ALL.len())];

    let mut g = crate::autodiff::Graph::new(&store, false);
    let labels = vec![label.index(); k];
    let v = rep.label_char_lstm(&mut g, &chars, &labels, &mut rng).expect("forward");
    let labelled = g.value(v).data().to_vec();

    let mut aug_store = crate::autodiff::ParamStore::new();
    let mut aug = word_rep(&mut aug_store, WordRepMode::CharLstm, n_chars, 2 * dim, seed);
    let lstm = crate::autodiff::nn::BiLstm::new(
        &mut aug_store,
        "augmented",
        2 * dim,
        dim,
        1,
        0.0,
        &mut rng,
    );
    for (_, p) in store.iter() {
        if let Some(suffix) = p.name.strip_prefix("wordrep.lstm") {
            let target = aug_store.id(&format!("augmented{suffix}")).expect("same layout");
            aug_store.set(target, p.value.clone()).expect("same shape");
        }
    }
    aug.lstm = Some(lstm);
    let chars_t = store.get(rep.char_embed);
    let labels_t = store.get(rep.label_embed.expect("label table"));
    let mut table = Vec::with_capacity(n_chars * 2 * dim);
    for c in 0..n_chars {
        table.extend_from_slice(chars_t.row(c));
        table.extend_from_slice(labels_t.row(label.index()));
    }
    aug_store
        .set(aug.char_embed, crate::autodiff::Tensor::matrix(n_chars, 2 * dim, table).expect("sized"))
        .expect("same shape");
    (labelled, rep_value(&aug_store, &aug, &chars, None))
}

/// Max difference of LabelGCN outputs when the nodes of one random tree are
/// stored in a random other order.
pub fn gcn_permutation_gap(seed: u64) -> f64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut store = crate::autodiff::ParamStore::new();
    let rep = word_rep(&mut store, crate::parser::WordRepMode::LabelGcn, 20, 6, seed);
    let k = rng.random_range(1..=10);
    let tree = random_tree(&mut rng, k);
    let chars: Vec<usize> = (0..k).map(|_| rng.random_range(0..20)).collect();
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    // node i moves to position perm[i]
    let mut p_chars = vec![0; k];
    let mut p_heads = vec![0; k];
    let mut p_labels = vec![Label::Root; k];
    for i in 0..k {
        p_chars[perm[i]] = chars[i];
        p_heads[perm[i]] = match tree.heads[i] {
            0 => 0,
            h => perm[h - 1] + 1,
        };
        p_labels[perm[i]] = tree.labels[i];
    }
    let a = rep_value(&store, &rep, &chars, Some(&tree));
    let b = rep_value(&store, &rep, &p_chars, Some(&DepTree::new(p_heads, p_labels)));
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Whether LabelGCN separates a star from a chain over the same three
/// characters and labels.
pub fn star_chain_differ(seed: u64) -> bool {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut store = crate::autodiff::ParamStore::new();
    let rep = word_rep(&mut store, crate::parser::WordRepMode::LabelGcn, 20, 6, seed);
    let chars: Vec<usize> = (0..3).map(|_| rng.random_range(0..20)).collect();
    let labels = vec![Label::Root, Label::Att, Label::Att];
    let star = DepTree::new(vec![0, 1, 1], labels.clone());
    let chain = DepTree::new(vec![0, 1, 2], labels);
    let a = rep_value(&store, &rep, &chars, Some(&star));
    let b = rep_value(&store, &rep, &chars, Some(&chain));
    a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9)
}

/// Two annotators over two words, disagreeing on one label of one word.
pub fn agreement_oracle_example() -> (crate::analysis::AnnotationSet, crate::analysis::AnnotationSet) {
    use crate::analysis::AnnotationSet;
    use crate::treebank::Treebank;
    use Label::*;
    let set = |name: &str, second: Label| {
        let tb = Treebank::from_entries(vec![
            WordEntry::new("常常", DepTree::new(vec![0, 1], vec![Root, Repet])),
            WordEntry::new("大衣", DepTree::new(vec![2, 0], vec![second, Root])),
        ])
        .expect("legal");
        AnnotationSet::new(name, tb)
    };
    (set("a", Att), set("b", Adv))
}

fn rand_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> crate::autodiff::Tensor<f64> {
    let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
    crate::autodiff::Tensor::matrix(r, c, data).expect("sized")
}

/// Values bounded away from zero so kinks of relu-like functions are not
/// straddled by the finite difference.
fn rand_away_from_zero<R: Rng>(rng: &mut R, r: usize, c: usize) -> crate::autodiff::Tensor<f64> {
    let data = (0..r * c)
        .map(|_| {
            let m = rng.random_range(0.1..1.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    crate::autodiff::Tensor::matrix(r, c, data).expect("sized")
}

/// Reduces `out` to a scalar through a fixed random weighting so that every
/// output coordinate contributes a distinct gradient.
pub fn weighted_sum(
    g: &mut crate::autodiff::Graph<'_, f64>,
    out: crate::autodiff::Var,
    seed: u64,
) -> crate::Result<crate::autodiff::Var> {
    let [m, n] = g.value(out).dims();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let data = (0..m * n).map(|_| rng.random_range(0.5..1.5)).collect();
    let w = g.constant(crate::autodiff::Tensor::matrix(m, n, data)?);
    let p = g.mul(out, w)?;
    Ok(g.sum(p))
}

fn store_of(ts: Vec<crate::autodiff::Tensor<f64>>) -> (crate::autodiff::ParamStore<f64>, Vec<crate::autodiff::ParamId>) {
    let mut s = crate::autodiff::ParamStore::new();
    let ids = ts
        .into_iter()
        .enumerate()
        .map(|(i, t)| s.add(format!("p{i}"), t, true))
        .collect();
    (s, ids)
}

type Checks = Vec<(&'static str, crate::autodiff::GradCheckReport)>;

fn check<F>(out: &mut Checks, name: &'static str, store: &crate::autodiff::ParamStore<f64>, seed: u64, f: F)
where
    F: Fn(&mut crate::autodiff::Graph<'_, f64>) -> crate::Result<crate::autodiff::Var>,
{
    let report = crate::autodiff::grad_check(
        store,
        |g| {
            let v = f(g)?;
            weighted_sum(g, v, seed)
        },
        1e-3,
        1,
    )
    .expect("finite objective");
    out.push((name, report));
}

/// Finite-difference reports for every graph primitive on random shapes and
/// values drawn from `seed`.
pub fn primitive_grad_checks(seed: u64) -> Checks {
    use crate::autodiff::Reduction;
    let mut out = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (m, k, n) = (
        rng.random_range(1..5),
        rng.random_range(1..5),
        rng.random_range(1..5),
    );

    let (s, p) = store_of(vec![rand_matrix(&mut rng, m, k), rand_matrix(&mut rng, k, n)]);
    check(&mut out, "matmul", &s, seed, |g| {
        let (a, b) = (g.param(p[0]), g.param(p[1]));
        g.matmul(a, b)
    });

    let (s, p) = store_of(vec![rand_matrix(&mut rng, m, n), rand_matrix(&mut rng, m, n)]);
    check(&mut out, "add", &s, seed, |g| {
        let (a, b) = (g.param(p[0]), g.param(p[1]));
        g.add(a, b)
    });
    check(&mut out, "mul", &s, seed, |g| {
        let (a, b) = (g.param(p[0]), g.param(p[1]));
        g.mul(a, b)
    });
    check(&mut out, "mul_self", &s, seed, |g| {
        let a = g.param(p[0]);
        g.mul(a, a)
    });

    let (s, p) = store_of(vec![rand_matrix(&mut rng, m, n), rand_matrix(&mut rng, 1, n)]);
    check(&mut out, "add_bias", &s, seed, |g| {
        let (a, b) = (g.param(p[0]), g.param(p[1]));
        g.add_bias(a, b)
    });

    let (s, p) = store_of(vec![rand_matrix(&mut rng, m, n), rand_matrix(&mut rng, m, 1)]);
    check(&mut out, "mul_col", &s, seed, |g| {
        let (a, c) = (g.param(p[0]), g.param(p[1]));
        g.mul_col(a, c)
    });

    let (s, p) = store_of(vec![rand_matrix(&mut rng, m, n)]);
    check(&mut out, "tanh", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.tanh(a))
    });
    check(&mut out, "sigmoid", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.sigmoid(a))
    });
    check(&mut out, "softmax", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.softmax_rows(a))
    });
    check(&mut out, "scale", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.scale(a, -1.7))
    });
    check(&mut out, "transpose", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.transpose(a))
    });
    check(&mut out, "row_sums", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.row_sums(a))
    });
    check(&mut out, "mean_rows", &s, seed, |g| {
        let a = g.param(p[0]);
        g.mean_rows(a)
    });
    let mask: std::sync::Arc<Vec<f64>> = std::sync::Arc::new((0..m * n).map(|i| (i % 3) as f64 * 0.5).collect());
    check(&mut out, "mask", &s, seed, |g| {
        let a = g.param(p[0]);
        g.mask(a, mask.clone())
    });
    let targets: Vec<Option<usize>> = (0..m)
        .map(|r| if r % 3 == 2 { None } else { Some((r * 7) % n) })
        .collect();
    if targets.iter().any(Option::is_some) {
        check(&mut out, "cross_entropy", &s, seed, |g| {
            let a = g.param(p[0]);
            g.cross_entropy(a, &targets, Reduction::Mean)
        });
    }

    let (s, p) = store_of(vec![rand_away_from_zero(&mut rng, m, n)]);
    check(&mut out, "relu", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.relu(a))
    });
    check(&mut out, "leaky_relu", &s, seed, |g| {
        let a = g.param(p[0]);
        Ok(g.leaky_relu(a, 0.1))
    });

    let (s, p) = store_of(vec![
        rand_matrix(&mut rng, m, n),
        rand_matrix(&mut rng, m, k),
        rand_matrix(&mut rng, k, n),
    ]);
    check(&mut out, "concat_cols", &s, seed, |g| {
        let (a, b) = (g.param(p[0]), g.param(p[1]));
        g.concat_cols(&[a, b, a])
    });
    check(&mut out, "concat_rows", &s, seed, |g| {
        let (a, c) = (g.param(p[0]), g.param(p[2]));
        g.concat_rows(&[a, c])
    });
    let cut = rng.random_range(0..=n);
    check(&mut out, "slice_cols", &s, seed, |g| {
        let a = g.param(p[0]);
        let l = g.slice_cols(a, 0, cut)?;
        let r = g.slice_cols(a, cut, n)?;
        let r2 = g.scale(r, 2.0);
        g.concat_cols(&[r2, l])
    });
    let cut = rng.random_range(0..=m);
    check(&mut out, "slice_rows", &s, seed, |g| {
        let a = g.param(p[0]);
        let top = g.slice_rows(a, 0, cut)?;
        let bottom = g.slice_rows(a, cut, m)?;
        let b2 = g.scale(bottom, 3.0);
        g.concat_rows(&[b2, top])
    });
    let idx: Vec<usize> = (0..rng.random_range(1..6))
        .map(|_| rng.random_range(0..m))
        .collect();
    check(&mut out, "select_rows", &s, seed, |g| {
        let a = g.param(p[0]);
        g.select_rows(a, &idx)
    });

    let (s, p) = store_of(vec![
        rand_matrix(&mut rng, m, k),
        rand_matrix(&mut rng, k, n),
        rand_matrix(&mut rng, 3, n),
    ]);
    check(&mut out, "bilinear", &s, seed, |g| {
        let (x, w, y) = (g.param(p[0]), g.param(p[1]), g.param(p[2]));
        g.bilinear(x, w, y)
    });
    out
}
