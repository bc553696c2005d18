use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::EvalReport;
use super::model::{ParserModel, Sample};
use super::TrainConfig;
use crate::autodiff::{AdamState, GradStore, Graph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::treebank::{SentenceTreebank, WordTreebank};

/// Gradients of a batch are accumulated in this many fixed slices, so the
/// summation order does not depend on the thread count.
const GRAD_SLICES: usize = 16;

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-token arc cross-entropy.
    pub arc_loss: f64,
    /// Mean per-token label cross-entropy.
    pub label_loss: f64,
    pub dev_uas: f64,
    pub dev_las: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T: Scalar> {
    /// Parameters of the epoch with the best dev LAS.
    pub model: ParserModel<T>,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best: EvalReport,
}

/// Greedy batches over a shuffled order, each at most `batch_tokens`
/// positions (a longer single sample forms its own batch).
pub fn make_batches(lengths: &[usize], batch_tokens: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.shuffle(rng);
    let mut batches = Vec::new();
    let mut cur = Vec::new();
    let mut tokens = 0;
    for i in order {
        if !cur.is_empty() && tokens + lengths[i] > batch_tokens {
            batches.push(std::mem::take(&mut cur));
            tokens = 0;
        }
        cur.push(i);
        tokens += lengths[i];
    }
    if !cur.is_empty() {
        batches.push(cur);
    }
    batches
}

fn sample_seed(seed: u64, epoch: usize, idx: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (idx as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Summed gradients and losses of `batch`.
fn batch_gradients<T: Scalar>(
    model: &ParserModel<T>,
    samples: &[Sample],
    batch: &[usize],
    seed: u64,
    epoch: usize,
) -> Result<(GradStore<T>, f64, f64)> {
    let slice = batch.len().div_ceil(GRAD_SLICES).max(1);
    let parts: Vec<Result<(GradStore<T>, f64, f64)>> = batch
        .par_chunks(slice)
        .map(|ids| {
            let mut grads = GradStore::new(&model.store);
            let (mut arc, mut label) = (0.0, 0.0);
            for &i in ids {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, epoch, i));
                let mut g = Graph::new(&model.store, true);
                let (a, l) = model.loss(&mut g, &samples[i], &mut rng)?;
                let total = match l {
                    Some(l) => {
                        label += g.scalar(l).as_f64();
                        g.add(a, l)?
                    }
                    None => a,
                };
                arc += g.scalar(a).as_f64();
                if !g.scalar(total).is_finite() {
                    return Err(Error::NonFinite(format!("training loss (epoch {epoch})")));
                }
                g.backward(total)?;
                g.accumulate_into(&mut grads);
            }
            Ok((grads, arc, label))
        })
        .collect();
    let mut grads = GradStore::new(&model.store);
    let (mut arc, mut label) = (0.0, 0.0);
    for p in parts {
        let (g, a, l) = p?;
        grads.merge(&g);
        arc += a;
        label += l;
    }
    Ok((grads, arc, label))
}

/// Mini-batch Adam training with per-epoch evaluation through `dev`.
/// Keeps the parameters of the epoch with the strictly best dev LAS and
/// stops after `patience` epochs without improvement.
pub fn train_loop<T: Scalar>(
    mut model: ParserModel<T>,
    samples: &[Sample],
    cfg: &TrainConfig,
    mut dev: impl FnMut(&ParserModel<T>) -> Result<EvalReport>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<T>> {
    if samples.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if cfg.batch_tokens == 0 || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument("batch_tokens and max_epochs must be positive".into()));
    }
    let lengths: Vec<usize> = samples.iter().map(Sample::len).collect();
    let mut adam = AdamState::new(&model.store, cfg.adam);
    let mut log = Vec::new();
    let mut best: Option<(usize, EvalReport, crate::autodiff::ParamStore<T>)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, epoch, usize::MAX));
        let (mut arc, mut label, mut tokens) = (0.0, 0.0, 0usize);
        for batch in make_batches(&lengths, cfg.batch_tokens, &mut rng) {
            let n: usize = batch.iter().map(|&i| lengths[i]).sum();
            let (mut grads, a, l) = batch_gradients(&model, samples, &batch, cfg.seed, epoch)?;
            grads.scale(T::lit(1.0 / n as f64));
            adam.step(&mut model.store, &grads)?;
            arc += a;
            label += l;
            tokens += n;
        }
        let report = dev(&model)?;
        let entry = EpochLog {
            epoch,
            arc_loss: arc / tokens as f64,
            label_loss: label / tokens as f64,
            dev_uas: report.uas,
            dev_las: report.las,
        };
        on_epoch(&entry);
        log.push(entry);
        let improved = best.as_ref().is_none_or(|(_, b, _)| report.las > b.las);
        let perfect = cfg.stop_at_perfect && report.las >= 100.0;
        if improved {
            best = Some((epoch, report, model.store.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if perfect || since_best >= cfg.patience {
            break;
        }
    }
    let (best_epoch, best, store) = best.expect("at least one epoch ran");
    model.store = store;
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        best,
    })
}

impl<T: Scalar> ParserModel<T> {
    /// Samples of every entry (all senses) of a word treebank.
    pub fn word_samples(&self, tb: &WordTreebank) -> Result<Vec<Sample>> {
        tb.iter().map(|e| self.sample_word(&e.surface, Some(&e.tree))).collect()
    }

    pub fn sentence_samples(&self, tb: &SentenceTreebank) -> Result<Vec<Sample>> {
        tb.iter()
            .map(|e| {
                self.sample_sentence(&e.words, e.pos_tags.as_deref(), Some((&e.heads, &e.labels)))
            })
            .collect()
    }
}

/// Trains a word-internal parser; without a dev set the training set is
/// used for model selection.
pub fn train_words<T: Scalar>(
    model: ParserModel<T>,
    train: &WordTreebank,
    dev: Option<&WordTreebank>,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<T>> {
    train.require_projective()?;
    let samples = model.word_samples(train)?;
    let dev = dev.filter(|d| !d.is_empty()).unwrap_or(train);
    train_loop(model, &samples, cfg, |m| m.evaluate_words(dev), on_epoch)
}

pub fn train_sentences<T: Scalar>(
    model: ParserModel<T>,
    train: &SentenceTreebank,
    dev: Option<&SentenceTreebank>,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<T>> {
    train.require_projective()?;
    let samples = model.sentence_samples(train)?;
    let dev = dev.filter(|d| !d.is_empty()).unwrap_or(train);
    train_loop(model, &samples, cfg, |m| m.evaluate_sentences(dev), on_epoch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_partition_and_respect_budget() {
        let lengths = vec![3, 2, 4, 1, 5, 2, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batches = make_batches(&lengths, 5, &mut rng);
        let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..lengths.len()).collect::<Vec<_>>());
        for b in &batches {
            let t: usize = b.iter().map(|&i| lengths[i]).sum();
            assert!(t <= 5 || b.len() == 1);
        }
    }
}
