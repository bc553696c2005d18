use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordtree_core::analysis::{pairwise_consistency, AnnotationSet};
use wordtree_core::testing::{
    agreement_oracle_example, brute_force_is_tree, brute_force_projective, random_tree,
    random_word_entry,
};
use wordtree_core::treebank::{
    is_projective, serialize_entry, split_dataset, validate_heads, Treebank, WordTreebank,
};

fn entries(seed: u64, n: usize) -> Vec<wordtree_core::WordEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let e = random_word_entry(&mut rng, 8, false);
        if seen.insert((e.surface.clone(), e.sense_id)) {
            out.push(e);
        }
    }
    out
}

#[test]
fn thousand_entries_round_trip_byte_identically() {
    let tb = Treebank::from_entries(entries(1, 1000)).unwrap();
    let text = tb.to_text();
    let back = WordTreebank::parse(&text).unwrap();
    assert_eq!(back.entries, tb.entries);
    assert_eq!(back.to_text(), text);
    for e in &tb {
        let block = serialize_entry(e);
        let single = WordTreebank::parse(&block).unwrap();
        assert_eq!(&single.entries[0], e);
        assert_eq!(serialize_entry(&single.entries[0]), block);
    }
}

#[test]
fn agreement_oracle() {
    let (a, b) = agreement_oracle_example();
    let r = pairwise_consistency(&a, &b).unwrap();
    assert_eq!(
        (r.dep_labeled, r.dep_unlabeled, r.word_labeled, r.word_unlabeled),
        (75.0, 100.0, 50.0, 100.0)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn entries_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_word_entry(&mut rng, 10, false);
        let block = serialize_entry(&e);
        let back = WordTreebank::parse(&block).unwrap();
        prop_assert_eq!(&back.entries[0], &e);
        prop_assert_eq!(serialize_entry(&back.entries[0]), block);
    }

    #[test]
    fn projectivity_matches_brute_force(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, n);
        prop_assert!(brute_force_is_tree(&t.heads));
        prop_assert_eq!(is_projective(&t.heads), brute_force_projective(&t.heads));
        prop_assert_eq!(validate_heads(&t.heads).is_clean(), brute_force_projective(&t.heads));
    }

    #[test]
    fn arbitrary_head_arrays_are_judged_like_the_oracle(heads in prop::collection::vec(0usize..7, 1..7)) {
        let report = validate_heads(&heads);
        let legal = heads.iter().all(|&h| h <= heads.len()) && brute_force_is_tree(&heads);
        prop_assert_eq!(report.is_legal(), legal);
        if legal {
            prop_assert_eq!(report.is_clean(), brute_force_projective(&heads));
        }
    }

    #[test]
    fn split_is_a_partition(seed in any::<u64>(), n in 3usize..60, dev in 0usize..10, test in 0usize..10) {
        prop_assume!(dev + test < n);
        let tb = Treebank::from_entries(entries(seed, n)).unwrap();
        let s = split_dataset(&tb, seed, dev, test).unwrap();
        prop_assert_eq!((s.dev.len(), s.test.len()), (dev, test));
        let mut all: Vec<_> = s.train.iter().chain(&s.dev).chain(&s.test).map(|e| e.id()).collect();
        all.sort();
        let mut want: Vec<_> = tb.iter().map(|e| e.id()).collect();
        want.sort();
        prop_assert_eq!(all, want);
        let again = split_dataset(&tb, seed, dev, test).unwrap();
        prop_assert_eq!(again.test.entries, s.test.entries);
    }

    #[test]
    fn consistency_is_symmetric_and_bounded(seed in any::<u64>(), n in 1usize..20) {
        let base = entries(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let other: Vec<_> = base
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.tree = random_tree(&mut rng, e.tree.len());
                e
            })
            .collect();
        let a = AnnotationSet::new("a", Treebank::from_entries(base).unwrap());
        let b = AnnotationSet::new("b", Treebank::from_entries(other).unwrap());
        let ab = pairwise_consistency(&a, &b).unwrap();
        prop_assert_eq!(&ab, &pairwise_consistency(&b, &a).unwrap());
        prop_assert!(ab.dep_labeled <= ab.dep_unlabeled && ab.word_labeled <= ab.word_unlabeled);
        let self_r = pairwise_consistency(&a, &a).unwrap();
        prop_assert_eq!(self_r.dep_labeled, 100.0);
    }
}
