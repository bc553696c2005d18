use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Treebank;
use crate::error::{Error, Result};

/// Train/dev/test partition of a treebank.
#[derive(Clone, Debug)]
pub struct Split<E> {
    pub train: Treebank<E>,
    pub dev: Treebank<E>,
    pub test: Treebank<E>,
}

/// Random partition into `dev_n` development and `test_n` test entries, the
/// rest for training. The shuffle is a ChaCha8 stream seeded with `seed`;
/// each part keeps file order.
pub fn split_dataset<E: Clone>(
    tb: &Treebank<E>,
    seed: u64,
    dev_n: usize,
    test_n: usize,
) -> Result<Split<E>> {
    let total = tb.entries.len();
    if dev_n + test_n >= total {
        return Err(Error::InvalidArgument(format!(
            "dev ({dev_n}) + test ({test_n}) must leave training entries out of {total}"
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut part = vec![0u8; total];
    for &i in &order[..dev_n] {
        part[i] = 1;
    }
    for &i in &order[dev_n..dev_n + test_n] {
        part[i] = 2;
    }
    let collect = |which: u8| {
        let mut entries = Vec::new();
        let mut nonprojective = Vec::new();
        for (i, e) in tb.entries.iter().enumerate() {
            if part[i] == which {
                if tb.nonprojective.binary_search(&i).is_ok() {
                    nonprojective.push(entries.len());
                }
                entries.push(e.clone());
            }
        }
        Treebank {
            entries,
            nonprojective,
        }
    };
    Ok(Split {
        train: collect(0),
        dev: collect(1),
        test: collect(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbers(n: usize) -> Treebank<usize> {
        Treebank {
            entries: (0..n).collect(),
            nonprojective: Vec::new(),
        }
    }

    #[test]
    fn corpus_sized_split_leaves_expected_train() {
        let s = split_dataset(&numbers(32_954), 1, 2_500, 5_000).unwrap();
        assert_eq!(s.train.len(), 25_454);
        assert_eq!(s.dev.len(), 2_500);
        assert_eq!(s.test.len(), 5_000);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = split_dataset(&numbers(100), 7, 10, 20).unwrap();
        let b = split_dataset(&numbers(100), 7, 10, 20).unwrap();
        assert_eq!(a.dev.entries, b.dev.entries);
        assert_eq!(a.test.entries, b.test.entries);
        let c = split_dataset(&numbers(100), 8, 10, 20).unwrap();
        assert_ne!(a.dev.entries, c.dev.entries);
    }

    #[test]
    fn empty_train_is_rejected() {
        assert!(split_dataset(&numbers(30), 1, 10, 20).is_err());
        assert!(split_dataset(&numbers(31), 1, 10, 20).is_ok());
    }
}
