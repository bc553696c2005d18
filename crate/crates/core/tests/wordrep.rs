use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordtree_core::autodiff::{grad_check, Graph, ParamStore, Tensor, Var};
use wordtree_core::parser::WordRepMode;
use wordtree_core::testing::{
    gcn_permutation_gap, random_projective_tree, single_label_collapse, star_chain_differ, word_rep,
};
use wordtree_core::treebank::{DepTree, Label};
use wordtree_core::wordrep::{adjacency, WordRep};
use wordtree_core::Result;

const MODES: [WordRepMode; 3] = [WordRepMode::CharLstm, WordRepMode::LabelCharLstm, WordRepMode::LabelGcn];

fn run(store: &ParamStore<f64>, rep: &WordRep, chars: &[usize], tree: Option<&DepTree>) -> Vec<f64> {
    let mut g = Graph::new(store, false);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let v = rep.forward(&mut g, chars, tree, &mut rng).unwrap();
    g.value(v).data().to_vec()
}

#[test]
fn single_label_collapse_is_exact() {
    for seed in 0..100 {
        let (a, b) = single_label_collapse(seed);
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn gcn_ignores_node_storage_order() {
    for seed in 0..100 {
        let gap = gcn_permutation_gap(seed);
        assert!(gap < 1e-6, "seed {seed}: {gap}");
    }
}

#[test]
fn gcn_separates_star_from_chain() {
    let hits = (0..100).filter(|&s| star_chain_differ(s)).count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn output_dimension_is_twice_hidden_for_every_variant() {
    for mode in MODES {
        let mut store = ParamStore::new();
        let rep = word_rep(&mut store, mode, 5, 7, 1);
        assert_eq!(rep.output_dim(&store), 14);
        let t = DepTree::new(vec![0, 1], vec![Label::Root, Label::Cmp]);
        assert_eq!(run(&store, &rep, &[1, 2], Some(&t)).len(), 14);
    }
}

#[test]
fn zero_parameters_give_zero_vectors() {
    for mode in MODES {
        let mut store = ParamStore::new();
        let rep = word_rep(&mut store, mode, 5, 4, 2);
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            store.get_mut(id).data_mut().fill(0.0);
        }
        let t = DepTree::new(vec![0, 1, 1], vec![Label::Root, Label::Obj, Label::Cmp]);
        assert!(run(&store, &rep, &[0, 3, 4], Some(&t)).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn single_character_words() {
    let mut store = ParamStore::new();
    let rep = word_rep(&mut store, WordRepMode::CharLstm, 5, 4, 3);
    let v = run(&store, &rep, &[2], None);
    assert_eq!(v.len(), 8);

    let mut store = ParamStore::new();
    let rep = word_rep(&mut store, WordRepMode::LabelGcn, 5, 4, 3);
    let tree = DepTree::trivial();
    let (a_in, a_out) = adjacency::<f64>(&tree.heads).unwrap();
    assert!(a_in.data().iter().chain(a_out.data()).all(|&x| x == 0.0));
    // one node: mean pooling is the identity on the self term
    let mut g = Graph::new(&store, false);
    let z = rep.inputs(&mut g, &[2], Some(&[Label::Root.index()])).unwrap();
    let nodes = rep.gcn.as_ref().unwrap().node_states(&mut g, z, &tree.heads).unwrap();
    let pooled = rep.gcn.as_ref().unwrap().forward(&mut g, z, &tree.heads).unwrap();
    assert_eq!(g.value(nodes).data(), g.value(pooled).data());
}

#[test]
fn deterministic_and_length_robust() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for mode in MODES {
        let mut store = ParamStore::new();
        let rep = word_rep(&mut store, mode, 30, 4, 4);
        for k in 1..=32 {
            let chars: Vec<usize> = (0..k).map(|_| rng.random_range(0..30)).collect();
            let t = random_projective_tree(&mut rng, k);
            let a = run(&store, &rep, &chars, Some(&t));
            assert_eq!(a, run(&store, &rep, &chars, Some(&t)));
            assert!(a.iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn label_pairs_reach_the_lstm_inputs() {
    // 常常 (root, repet): inputs are emb(常)⊕emb(root), emb(常)⊕emb(repet)
    let mut store = ParamStore::new();
    let rep = word_rep(&mut store, WordRepMode::LabelCharLstm, 5, 3, 5);
    let mut g = Graph::new(&store, false);
    let z = rep.inputs(&mut g, &[4, 4], Some(&[Label::Root.index(), Label::Repet.index()])).unwrap();
    let c = store.get(rep.char_embed).row(4).to_vec();
    let labels = store.get(rep.label_embed.unwrap());
    let want: Vec<f64> = [c.clone(), labels.row(Label::Root.index()).to_vec(), c, labels.row(Label::Repet.index()).to_vec()].concat();
    assert_eq!(g.value(z).data(), &want[..]);
}

#[test]
fn zero_label_channel_matches_padded_charlstm() {
    let mut store = ParamStore::new();
    let mut rep = word_rep(&mut store, WordRepMode::LabelCharLstm, 6, 4, 6);
    let t = DepTree::new(vec![2, 0, 2], vec![Label::Att, Label::Root, Label::Obj]);
    rep.use_labels = false;
    let switched_off = run(&store, &rep, &[1, 2, 3], Some(&t));
    rep.use_labels = true;
    let id = rep.label_embed.unwrap();
    let dims = store.get(id).dims();
    store.set(id, Tensor::zeros(dims.to_vec())).unwrap();
    assert_eq!(run(&store, &rep, &[1, 2, 3], Some(&t)), switched_off);
}

#[test]
fn structure_must_cover_the_word() {
    let mut store = ParamStore::new();
    let rep = word_rep(&mut store, WordRepMode::LabelGcn, 6, 4, 7);
    let mut g = Graph::new(&store, false);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(rep.forward(&mut g, &[1, 2], Some(&DepTree::trivial()), &mut rng).is_err());
    assert!(rep.forward(&mut g, &[1, 2], None, &mut rng).is_err());
}

fn weighted(g: &mut Graph<'_, f64>, v: Var) -> Result<Var> {
    let n = g.value(v).cols();
    let w = g.constant(Tensor::matrix(1, n, (0..n).map(|i| 0.5 + i as f64 / n as f64).collect())?);
    let p = g.mul(v, w)?;
    Ok(g.sum(p))
}

#[test]
fn label_embedding_gradients_through_both_paths() {
    let chars = [1, 2, 3];
    let t = DepTree::new(vec![2, 0, 2], vec![Label::Att, Label::Root, Label::Cmp]);
    let labels: Vec<usize> = t.labels.iter().map(|l| l.index()).collect();
    for mode in [WordRepMode::LabelCharLstm, WordRepMode::LabelGcn] {
        let mut checked = 0;
        for seed in 0.. {
            let mut store = ParamStore::new();
            let rep = word_rep(&mut store, mode, 5, 4, seed);
            if let Some(gcn) = &rep.gcn {
                // keep finite differences away from ReLU kinks
                let mut g = Graph::new(&store, false);
                let z = rep.inputs(&mut g, &chars, Some(&labels)).unwrap();
                let pre = gcn.pre_activations(&mut g, z, &t.heads).unwrap();
                let margin = pre
                    .iter()
                    .flat_map(|&p| g.value(p).data().iter().map(|x| x.abs()).collect::<Vec<_>>())
                    .fold(f64::INFINITY, f64::min);
                if margin < 0.05 {
                    continue;
                }
            }
            let report = grad_check(
                &store,
                |g| {
                    let mut rng = ChaCha8Rng::seed_from_u64(0);
                    let v = rep.forward(g, &chars, Some(&t), &mut rng)?;
                    weighted(g, v)
                },
                1e-3,
                1,
            )
            .unwrap();
            assert!(report.max_rel_error < 1e-4, "{mode} seed {seed}: {report:?}");
            checked += 1;
            if checked == 5 {
                break;
            }
        }
    }
}
