use std::sync::Arc;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordtree_core::autodiff::Graph;
use wordtree_core::embeddings::{EmbeddingTable, ExternalVectors};
use wordtree_core::parser::{
    assign_labels, eisner, score_sentences, score_words, train_words, tree_score, ArcScores,
    Mode, ParserConfig, ParserModel, TrainConfig, WordRepMode,
};
use wordtree_core::testing::{
    brute_force_best, brute_force_is_tree, full_model_grad_check, brute_force_projective, metric_oracle_example,
    random_projective_tree, randomize_params, synthetic_word_treebank, tiny_word_config,
};
use wordtree_core::treebank::{DepTree, Label, SentenceEntry, SentenceTreebank, Treebank};
use wordtree_core::autodiff::AdamConfig;
use wordtree_core::Error;

fn rational_chart(rng: &mut ChaCha8Rng, n: usize) -> ArcScores<Ratio<i64>> {
    ArcScores::from_fn(n, |_, _| Ratio::new(rng.random_range(-20..=20), rng.random_range(1..=4))).unwrap()
}

#[test]
fn eisner_is_optimal_on_exact_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=5 {
        for _ in 0..1000 {
            let s = rational_chart(&mut rng, n);
            let heads = eisner(&s);
            assert!(brute_force_is_tree(&heads) && brute_force_projective(&heads));
            assert_eq!(tree_score(&s, &heads), brute_force_best(&s), "n={n}");
        }
    }
}

#[test]
fn eisner_is_optimal_on_floats() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=5 {
        for _ in 0..300 {
            let s = ArcScores::from_fn(n, |_, _| rng.random_range(-5.0f64..5.0)).unwrap();
            let got = tree_score(&s, &eisner(&s));
            assert!((got - brute_force_best(&s)).abs() < 1e-9);
        }
    }
}

#[test]
fn eisner_outputs_legal_projective_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=32);
        let s = ArcScores::from_fn(n, |_, _| rng.random_range(-10.0f64..10.0)).unwrap();
        let heads = eisner(&s);
        let labels = heads.iter().map(|&h| if h == 0 { Label::Root } else { Label::Att }).collect();
        let report = DepTree::new(heads, labels).validate();
        assert!(report.is_clean(), "{report:?}");
    }
}

#[test]
fn eisner_recovers_a_planted_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let n = rng.random_range(1..=20);
        let t = random_projective_tree(&mut rng, n);
        let s = ArcScores::from_fn(n, |h, d| if d > 0 && t.heads[d - 1] == h { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(eisner(&s), t.heads);
    }
}

#[test]
fn labels_follow_argmax_per_arc() {
    let heads = [2, 0, 2];
    let table = |h: usize, d: usize, l: usize| ((h * 7 + d * 3 + l * 5) % 11) as f64;
    let labels = assign_labels(&heads, 11, None, table);
    for (i, &l) in labels.iter().enumerate() {
        let best = (0..11).map(|k| table(heads[i], i + 1, k)).fold(f64::MIN, f64::max);
        assert_eq!(table(heads[i], i + 1, l), best);
        assert!((0..l).all(|k| table(heads[i], i + 1, k) < best));
    }
}

fn tiny_model(seed: u64) -> (ParserModel<f64>, wordtree_core::treebank::WordTreebank) {
    let tb = synthetic_word_treebank(6, 4, seed);
    let mut m = ParserModel::<f64>::for_words(tiny_word_config(8, 2), &tb, None, seed).unwrap();
    randomize_params(&mut m.store, seed, 0.5);
    (m, tb)
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for seed in [0, 100, 200] {
        let report = full_model_grad_check(seed).unwrap();
        assert!(report.coords_checked > 1000);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}

#[test]
fn loss_agrees_with_a_softmax_over_the_chart() {
    let (m, tb) = tiny_model(5);
    for e in &tb {
        let s = m.sample_word(&e.surface, Some(&e.tree)).unwrap();
        let chart = m.chart(&s).unwrap();
        let n = s.len();
        let mut arc = 0.0;
        let mut label = 0.0;
        for d in 1..=n {
            let h = e.tree.heads[d - 1];
            let lse = (0..=n).map(|k| chart.arc(k, d).exp()).sum::<f64>().ln();
            arc += lse - chart.arc(h, d);
            let l = e.tree.labels[d - 1].index();
            let lse = (0..chart.n_labels).map(|k| chart.label(h, d, k).exp()).sum::<f64>().ln();
            label += lse - chart.label(h, d, l);
        }
        let mut g = Graph::new(&m.store, false);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, l) = m.loss(&mut g, &s, &mut rng).unwrap();
        assert!((g.scalar(a) - arc).abs() < 1e-9 * arc.max(1.0));
        assert!((g.scalar(l.unwrap()) - label).abs() < 1e-9 * label.max(1.0));
    }
}

#[test]
fn predictions_are_legal_and_root_labelled() {
    let (m, _) = tiny_model(6);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let len = rng.random_range(2..=9);
        let surface = wordtree_core::testing::random_surface(&mut rng, len);
        let e = m.parse_word(&surface).unwrap();
        assert!(e.tree.validate().is_clean());
        for (h, l) in e.tree.heads.iter().zip(&e.tree.labels) {
            assert_eq!(*h == 0, *l == Label::Root);
        }
    }
    assert!(matches!(m.parse_word("的"), Err(Error::InvalidArgument(_))));
}

#[test]
fn overfits_a_small_treebank() {
    let tb = synthetic_word_treebank(50, 4, 2024);
    let config = ParserConfig {
        lstm_hidden: 64,
        arc_mlp_dim: 64,
        label_mlp_dim: 32,
        ..tiny_word_config(32, 2)
    };
    let model = ParserModel::<f32>::for_words(config, &tb, None, 1).unwrap();
    let cfg = TrainConfig {
        batch_tokens: 40,
        max_epochs: 200,
        patience: 200,
        stop_at_perfect: true,
        ..Default::default()
    };
    let start = Instant::now();
    let out = train_words(model, &tb, None, &cfg, |_| {}).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let report = out.model.evaluate_words(&tb).unwrap();
    assert!(report.las >= 99.0, "LAS {} after {} epochs", report.las, out.log.len());
    assert!(out.log.len() <= 200);
    assert!(secs < 120.0, "{secs}s");
}

#[test]
fn training_is_reproducible() {
    let tb = synthetic_word_treebank(8, 4, 9);
    let run = || {
        let config = ParserConfig {
            embed_dropout: 0.2,
            lstm_dropout: 0.2,
            mlp_dropout: 0.2,
            ..tiny_word_config(8, 1)
        };
        let model = ParserModel::<f32>::for_words(config, &tb, None, 4).unwrap();
        let cfg = TrainConfig {
            batch_tokens: 10,
            max_epochs: 3,
            ..Default::default()
        };
        let out = train_words(model, &tb, None, &cfg, |_| {}).unwrap();
        out.log.iter().map(|e| e.arc_loss.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn metric_oracle() {
    let (gold, pred) = metric_oracle_example();
    let r = score_words(&gold, &pred).unwrap();
    assert_eq!((r.uas, r.las, r.cm), (100.0, 75.0, 50.0));
    assert_eq!(r.per_label["cmp"].labeled, 0);
}

#[test]
fn gold_against_itself_is_perfect() {
    for seed in 0..20 {
        let tb = synthetic_word_treebank(30, 6, seed);
        let pred = tb.iter().map(|e| (e.surface.clone(), e.tree.clone())).collect();
        let r = score_words(&tb, &pred).unwrap();
        assert_eq!((r.uas, r.las, r.cm), (100.0, 100.0, 100.0));
        assert!(r.las <= r.uas);
    }
}

fn sentence_tb() -> SentenceTreebank {
    let s = |words: &[&str], heads: &[usize], labels: &[&str]| SentenceEntry {
        words: words.iter().map(|w| w.to_string()).collect(),
        heads: heads.to_vec(),
        labels: labels.iter().map(|l| l.to_string()).collect(),
        pos_tags: None,
        is_punct: words.iter().map(|w| *w == "。").collect(),
    };
    Treebank::from_entries(vec![
        s(&["学生", "喜欢", "经济学", "。"], &[2, 0, 2, 2], &["SBJ", "ROOT", "OBJ", "PU"]),
        s(&["中国", "经济", "发展"], &[2, 3, 0], &["NMOD", "SBJ", "ROOT"]),
        s(&["人民", "喜欢", "大衣", "。"], &[2, 0, 2, 2], &["SBJ", "ROOT", "OBJ", "PU"]),
    ])
    .unwrap()
}

#[test]
fn punctuation_is_excluded_everywhere() {
    let tb = sentence_tb();
    let mut pred: Vec<(Vec<usize>, Vec<String>)> =
        tb.iter().map(|e| (e.heads.clone(), e.labels.clone())).collect();
    pred[0].0[3] = 1;
    pred[2].1[3] = "X".into();
    let r = score_sentences(&tb, &pred, None).unwrap();
    assert_eq!((r.uas, r.las, r.cm, r.n_tokens), (100.0, 100.0, 100.0, 9));
}

#[test]
fn sentence_models_train_and_decode() {
    let tb = sentence_tb();
    let lexicon = wordtree_core::wordrep::Lexicon::from_gold(&synthetic_word_treebank(5, 3, 1));
    for mode in [WordRepMode::None, WordRepMode::CharLstm, WordRepMode::LabelCharLstm, WordRepMode::LabelGcn] {
        let config = ParserConfig {
            mode: Mode::Sentence,
            word_emb_dim: 8,
            char_emb_dim: 4,
            label_emb_dim: 4,
            wordrep: mode,
            wordrep_hidden: 4,
            min_freq: 1,
            ..tiny_word_config(8, 1)
        };
        let model = ParserModel::<f32>::for_sentences(config, &tb, None, Some(lexicon.clone()), 2).unwrap();
        let cfg = TrainConfig {
            max_epochs: 2,
            ..Default::default()
        };
        let out = wordtree_core::parser::train_sentences(model, &tb, None, &cfg, |_| {}).unwrap();
        assert_eq!(out.log.len(), 2);
        let (heads, labels) = out.model.parse_sentence(&tb.entries[1].words, None).unwrap();
        assert!(brute_force_is_tree(&heads) && brute_force_projective(&heads));
        assert!(labels.iter().all(|l| out.model.vocabs.labels.get(l).is_some()));
        let report = out.model.evaluate_sentences(&tb).unwrap();
        assert!(report.buckets.values().map(|t| t.total).sum::<u64>() == report.n_tokens);
    }
}

#[test]
fn checkpoints_round_trip_across_precisions() {
    let (m, tb) = tiny_model(7);
    let bytes = m.to_bytes().unwrap();
    let back = ParserModel::<f64>::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes().unwrap(), bytes);
    let narrow = ParserModel::<f32>::from_bytes(&bytes).unwrap();
    for e in &tb {
        let a = m.chart(&m.sample_word(&e.surface, None).unwrap()).unwrap();
        let b = back.chart(&back.sample_word(&e.surface, None).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = narrow.chart(&narrow.sample_word(&e.surface, None).unwrap()).unwrap();
        for (x, y) in a.arcs.iter().zip(&c.arcs) {
            assert!((x - y).abs() < 1e-3 * x.abs().max(1.0));
        }
    }
    let dir = std::env::temp_dir().join(format!("wt-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.ckpt");
    narrow.save(&path).unwrap();
    assert!(wordtree_core::parser::sidecar_path(&path).exists());
    let loaded = ParserModel::<f32>::load(&path).unwrap();
    assert_eq!(loaded.to_bytes().unwrap(), narrow.to_bytes().unwrap());
    let mut bad = bytes.clone();
    bad.truncate(bad.len() - 3);
    assert!(matches!(ParserModel::<f64>::from_bytes(&bad), Err(Error::Checkpoint(_))));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn pretrained_vectors_are_frozen_and_external_vectors_override() {
    let tb = synthetic_word_treebank(4, 3, 3);
    let ch: Vec<String> = tb.entries[0].surface.chars().map(String::from).collect();
    let table = EmbeddingTable::parse(&format!("{} 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5\n", ch[0])).unwrap();
    let m = ParserModel::<f64>::for_words(tiny_word_config(8, 1), &tb, Some(&table), 1).unwrap();
    let frozen = m.store.id("pretrained").unwrap();
    assert!(!m.store.is_trainable(frozen));
    let row = m.vocabs.chars.get(&ch[0]).unwrap();
    assert_eq!(m.store.get(frozen).row(row), &[0.5; 8]);

    let mut m = m;
    let key = format!("{}{}1", tb.entries[0].surface, wordtree_core::embeddings::KEY_SEPARATOR);
    let ext = EmbeddingTable::parse(&format!("{key} 1 2 3 4 5 6 7 8\n")).unwrap();
    let ext = Arc::new(ExternalVectors::from_table(&ext).unwrap());
    m.attach_external(ext).unwrap();
    let s = m.sample_word(&tb.entries[0].surface, None).unwrap();
    assert_eq!(s.external[1].as_deref(), Some(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0][..]));
    assert!(m.chart(&s).is_ok());
    let wrong = Arc::new(ExternalVectors { dim: 3, ..Default::default() });
    assert!(m.attach_external(wrong).is_err());
}

#[test]
fn adam_defaults_are_exposed() {
    let c = AdamConfig::default();
    assert_eq!((c.lr, c.beta1, c.beta2), (2e-3, 0.9, 0.9));
}
