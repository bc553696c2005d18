use std::fmt;

use serde::{Deserialize, Serialize};

use super::Label;

/// Labeled dependency tree over `n` real nodes.
///
/// `heads[i]` is the head of node `i + 1`; head `0` is the virtual root,
/// which is implicit and never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepTree {
    pub heads: Vec<usize>,
    pub labels: Vec<Label>,
}

impl DepTree {
    pub fn new(heads: Vec<usize>, labels: Vec<Label>) -> Self {
        assert_eq!(heads.len(), labels.len(), "heads and labels differ in length");
        DepTree { heads, labels }
    }

    /// Single node attached to the virtual root.
    pub fn trivial() -> Self {
        DepTree::new(vec![0], vec![Label::Root])
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// 1-based index of the node attached to the virtual root, if unique.
    pub fn root(&self) -> Option<usize> {
        let mut roots = self.heads.iter().enumerate().filter(|(_, &h)| h == 0);
        match (roots.next(), roots.next()) {
            (Some((i, _)), None) => Some(i + 1),
            _ => None,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_heads(&self.heads);
        for (i, (&h, &l)) in self.heads.iter().zip(&self.labels).enumerate() {
            if (h == 0) != (l == Label::Root) {
                report.violations.push(Violation::RootLabelMisuse { node: i + 1 });
            }
        }
        report
    }

    pub fn is_projective(&self) -> bool {
        is_projective(&self.heads)
    }

    pub fn same_unlabeled(&self, other: &DepTree) -> bool {
        self.heads == other.heads
    }
}

/// One way a head array fails to be a legal projective tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    MultiRoot { roots: Vec<usize> },
    NoRoot,
    Cycle { nodes: Vec<usize> },
    RootLabelMisuse { node: usize },
    OutOfRange { node: usize, head: usize },
    NonProjective { head: usize, dependent: usize },
}

impl Violation {
    pub fn is_non_projective(&self) -> bool {
        matches!(self, Violation::NonProjective { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultiRoot { roots } => write!(f, "multiple roots at {roots:?}"),
            Violation::NoRoot => write!(f, "no root"),
            Violation::Cycle { nodes } => write!(f, "cycle through {nodes:?}"),
            Violation::RootLabelMisuse { node } => {
                write!(f, "node {node}: `root` label must mark exactly the arc from the virtual root")
            }
            Violation::OutOfRange { node, head } => {
                write!(f, "node {node}: head {head} out of range")
            }
            Violation::NonProjective { head, dependent } => {
                write!(f, "arc {head}->{dependent} is non-projective")
            }
        }
    }
}

/// Violations found in one tree; empty means legal and projective.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Legal tree, ignoring projectivity.
    pub fn is_legal(&self) -> bool {
        self.violations.iter().all(Violation::is_non_projective)
    }

    pub fn is_projective(&self) -> bool {
        !self.violations.iter().any(Violation::is_non_projective)
    }
}

/// Structural checks on a head array: range, single root, acyclicity and
/// projectivity. Labels are not inspected.
pub fn validate_heads(heads: &[usize]) -> ValidationReport {
    let n = heads.len();
    let mut violations = Vec::new();

    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            violations.push(Violation::OutOfRange { node: i + 1, head: h });
        }
    }

    let roots: Vec<usize> = (1..=n).filter(|&d| heads[d - 1] == 0).collect();
    match roots.len() {
        0 => violations.push(Violation::NoRoot),
        1 => {}
        _ => violations.push(Violation::MultiRoot { roots }),
    }

    let on_cycle = cycle_nodes(heads);
    if !on_cycle.is_empty() {
        violations.push(Violation::Cycle { nodes: on_cycle });
    }

    violations.extend(
        nonprojective_arcs(heads)
            .into_iter()
            .map(|(head, dependent)| Violation::NonProjective { head, dependent }),
    );

    ValidationReport { violations }
}

/// Nodes lying on a cycle, ascending.
fn cycle_nodes(heads: &[usize]) -> Vec<usize> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; n + 1];
    let mut on_cycle = vec![false; n + 1];
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while cur != 0 && cur <= n && state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if cur != 0 && cur <= n && state[cur] == 1 {
            let pos = path.iter().position(|&x| x == cur).unwrap_or(0);
            for &x in &path[pos..] {
                on_cycle[x] = true;
            }
        }
        for &x in &path {
            state[x] = 2;
        }
    }
    (1..=n).filter(|&i| on_cycle[i]).collect()
}

/// Whether `node` is reached from `ancestor` by following arcs downwards.
/// Walks at most `n` steps so cyclic inputs terminate.
fn descends_from(heads: &[usize], node: usize, ancestor: usize) -> bool {
    let n = heads.len();
    let mut cur = node;
    for _ in 0..=n {
        if cur == ancestor {
            return true;
        }
        if cur == 0 || cur > n {
            return false;
        }
        cur = heads[cur - 1];
    }
    false
}

/// Arcs `(h, d)` spanning a node that does not descend from `h`.
pub fn nonprojective_arcs(heads: &[usize]) -> Vec<(usize, usize)> {
    let n = heads.len();
    let mut arcs = Vec::new();
    for d in 1..=n {
        let h = heads[d - 1];
        if h > n {
            continue;
        }
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        if (lo + 1..hi).any(|k| !descends_from(heads, k, h)) {
            arcs.push((h, d));
        }
    }
    arcs
}

pub fn is_projective(heads: &[usize]) -> bool {
    nonprojective_arcs(heads).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn minimal_legal_tree_is_clean() {
        let t = DepTree::new(vec![0, 1], vec![Root, Repet]);
        assert!(t.validate().is_clean());
        assert_eq!(t.root(), Some(1));
    }

    #[test]
    fn two_cycle_is_reported() {
        let r = validate_heads(&[2, 1]);
        assert!(r.violations.contains(&Violation::NoRoot));
        assert!(r.violations.contains(&Violation::Cycle { nodes: vec![1, 2] }));
    }

    #[test]
    fn crossing_root_arc_is_non_projective() {
        // 3->1 spans node 2, whose head is the virtual root; 1 and 3 also
        // form a cycle.
        let r = validate_heads(&[3, 0, 1]);
        assert!(r.violations.contains(&Violation::NonProjective { head: 3, dependent: 1 }));
        assert!(r.violations.contains(&Violation::Cycle { nodes: vec![1, 3] }));
        assert!(!r.is_projective());
    }

    #[test]
    fn projectivity_examples() {
        assert!(is_projective(&[0, 1, 2]));
        // 1->3->2: node 2 between 1 and 3 descends from 1
        assert!(is_projective(&[0, 3, 1]));
        // arcs 1->3 and 2->4 cross
        assert!(!is_projective(&[0, 3, 1, 2]));
        assert_eq!(nonprojective_arcs(&[0, 3, 1, 2]), vec![(2, 4)]);
    }

    #[test]
    fn root_label_rules() {
        let both_root = DepTree::new(vec![2, 1], vec![Root, Root]);
        let r = both_root.validate();
        assert!(r.violations.contains(&Violation::RootLabelMisuse { node: 1 }));

        let unlabeled_root = DepTree::new(vec![0, 1], vec![Att, Repet]);
        assert_eq!(
            unlabeled_root.validate().violations,
            vec![Violation::RootLabelMisuse { node: 1 }]
        );
    }

    #[test]
    fn multi_root_and_range() {
        let r = validate_heads(&[0, 0, 5]);
        assert!(r.violations.contains(&Violation::MultiRoot { roots: vec![1, 2] }));
        assert!(r.violations.contains(&Violation::OutOfRange { node: 3, head: 5 }));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let r = validate_heads(&[0, 2]);
        assert!(r.violations.contains(&Violation::Cycle { nodes: vec![2] }));
    }
}
