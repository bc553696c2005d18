use std::ops::Add;

use num_traits::Zero;

use crate::error::{Error, Result};

/// Square score matrix over nodes `0..=n`; entry `(h, d)` scores the arc
/// `h -> d`, node 0 being the virtual root.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScores<S> {
    n: usize,
    scores: Vec<S>,
}

impl<S: Copy> ArcScores<S> {
    /// `scores` is row-major `(n+1) x (n+1)`.
    pub fn new(n: usize, scores: Vec<S>) -> Result<Self> {
        if n == 0 || scores.len() != (n + 1) * (n + 1) {
            return Err(Error::Shape {
                op: "arc_scores",
                left: vec![n + 1, n + 1],
                right: vec![scores.len()],
            });
        }
        Ok(ArcScores { n, scores })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let scores = (0..=n)
            .flat_map(|h| (0..=n).map(move |d| (h, d)))
            .map(|(h, d)| f(h, d))
            .collect();
        Self::new(n, scores)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, h: usize, d: usize) -> S {
        self.scores[h * (self.n + 1) + d]
    }
}

/// Total score of a head array under `scores`.
pub fn tree_score<S: Copy + Zero + Add<Output = S>>(scores: &ArcScores<S>, heads: &[usize]) -> S {
    heads
        .iter()
        .enumerate()
        .fold(S::zero(), |acc, (i, &h)| acc + scores.get(h, i + 1))
}

#[derive(Clone, Copy)]
struct Cell<S> {
    score: S,
    split: usize,
}

/// First-order projective decoding with exactly one child of the root.
///
/// The chart runs over nodes `1..=n` only; the root child `r` is chosen last
/// by maximising `left(1, r) + right(r, n) + s(0, r)`. Ties go to the lower
/// split point and the lower root index.
pub fn eisner<S>(scores: &ArcScores<S>) -> Vec<usize>
where
    S: Copy + PartialOrd + Zero + Add<Output = S>,
{
    let n = scores.n();
    // complete[dir][i][j] / incomplete[dir][i][j]; dir 0 = head at j (left
    // arcs), dir 1 = head at i (right arcs). Indices are 1-based.
    let size = n + 2;
    let idx = |i: usize, j: usize| i * size + j;
    let blank = Cell {
        score: S::zero(),
        split: 0,
    };
    let mut complete = [vec![blank; size * size], vec![blank; size * size]];
    let mut incomplete = [vec![blank; size * size], vec![blank; size * size]];

    for width in 1..n {
        for i in 1..=n - width {
            let j = i + width;
            // incomplete spans: i <- j and i -> j share the split maximiser
            let mut best: Option<(S, usize)> = None;
            for k in i..j {
                let v = complete[1][idx(i, k)].score + complete[0][idx(k + 1, j)].score;
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, k));
                }
            }
            let (v, k) = best.expect("non-empty split range");
            incomplete[0][idx(i, j)] = Cell {
                score: v + scores.get(j, i),
                split: k,
            };
            incomplete[1][idx(i, j)] = Cell {
                score: v + scores.get(i, j),
                split: k,
            };

            // complete span headed at j: left part complete, right part incomplete
            let mut best: Option<(S, usize)> = None;
            for k in i..j {
                let v = complete[0][idx(i, k)].score + incomplete[0][idx(k, j)].score;
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, k));
                }
            }
            let (v, k) = best.expect("non-empty split range");
            complete[0][idx(i, j)] = Cell { score: v, split: k };

            // complete span headed at i
            let mut best: Option<(S, usize)> = None;
            for k in i + 1..=j {
                let v = incomplete[1][idx(i, k)].score + complete[1][idx(k, j)].score;
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, k));
                }
            }
            let (v, k) = best.expect("non-empty split range");
            complete[1][idx(i, j)] = Cell { score: v, split: k };
        }
    }

    let mut best: Option<(S, usize)> = None;
    for r in 1..=n {
        let v = complete[0][idx(1, r)].score + complete[1][idx(r, n)].score + scores.get(0, r);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, r));
        }
    }
    let (_, root) = best.expect("n >= 1");

    let mut heads = vec![0usize; n];
    let mut stack = vec![(0u8, 0u8, 1, root), (0u8, 1u8, root, n)];
    // (kind, dir, i, j): kind 0 = complete, 1 = incomplete
    while let Some((kind, dir, i, j)) = stack.pop() {
        if i == j {
            continue;
        }
        let d = dir as usize;
        if kind == 0 {
            let k = complete[d][idx(i, j)].split;
            if dir == 0 {
                stack.push((0, 0, i, k));
                stack.push((1, 0, k, j));
            } else {
                stack.push((1, 1, i, k));
                stack.push((0, 1, k, j));
            }
        } else {
            let k = incomplete[d][idx(i, j)].split;
            if dir == 0 {
                heads[i - 1] = j;
            } else {
                heads[j - 1] = i;
            }
            stack.push((0, 1, i, k));
            stack.push((0, 0, k + 1, j));
        }
    }
    heads
}

/// Per-arc label choice: `label_scores(h, d, l)` is maximised over `l` with
/// the lowest index winning ties. With `root_label = Some(r)`, arcs from the
/// virtual root take label `r` and other arcs never do.
pub fn assign_labels<F>(heads: &[usize], n_labels: usize, root_label: Option<usize>, label_scores: F) -> Vec<usize>
where
    F: Fn(usize, usize, usize) -> f64,
{
    heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let d = i + 1;
            match root_label {
                Some(r) if h == 0 => r,
                _ => {
                    let mut best: Option<(f64, usize)> = None;
                    for l in 0..n_labels {
                        if root_label == Some(l) {
                            continue;
                        }
                        let v = label_scores(h, d, l);
                        if best.is_none_or(|(b, _)| v > b) {
                            best = Some((v, l));
                        }
                    }
                    best.map_or(0, |(_, l)| l)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_attaches_to_root() {
        let s = ArcScores::new(1, vec![0.0, -3.0, 7.0, 1.0]).unwrap();
        assert_eq!(eisner(&s), vec![0]);
    }

    #[test]
    fn dominant_chain_wins() {
        let s = ArcScores::from_fn(2, |h, d| match (h, d) {
            (0, 1) | (1, 2) => 5.0,
            _ => -1.0,
        })
        .unwrap();
        assert_eq!(eisner(&s), vec![0, 1]);
    }

    #[test]
    fn only_one_root_child_even_when_root_arcs_dominate() {
        let s = ArcScores::from_fn(3, |h, _| if h == 0 { 10.0 } else { 0.0 }).unwrap();
        let heads = eisner(&s);
        assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
        // all non-root arcs tie; the lowest split yields the chain
        assert_eq!(heads, vec![0, 1, 2]);
    }

    #[test]
    fn label_ties_pick_lowest_index() {
        let labels = assign_labels(&[2, 0], 6, None, |_, _, l| if l == 2 || l == 5 { 1.0 } else { 0.0 });
        assert_eq!(labels, vec![2, 2]);
    }

    #[test]
    fn root_label_is_forced_and_reserved() {
        let labels = assign_labels(&[2, 0, 2], 4, Some(0), |_, _, l| if l == 0 { 9.0 } else { l as f64 });
        assert_eq!(labels, vec![3, 0, 3]);
    }
}
