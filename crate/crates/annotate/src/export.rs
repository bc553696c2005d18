//! Final answers, submission records and project statistics.

use std::collections::BTreeMap;

use serde::Serialize;
use wordtree_core::analysis::{annotation_accuracy, percent, AccuracyReport, AgreementReport, AnnotationSet};
use wordtree_core::treebank::{WordEntry, WordTreebank};

use crate::error::{Result, ServiceError};
use crate::workflow::{Project, Task, TaskState, Workspace};

/// Everything the analysis module needs about one project.
#[derive(Clone, Debug)]
pub struct Export {
    /// Final answers in import order.
    pub finals: WordTreebank,
    /// First and second submissions of every task that received both,
    /// in import order.
    pub slots: [AnnotationSet; 2],
    /// Original (pre-correction) submissions on final tasks, per annotator.
    pub by_annotator: Vec<AnnotationSet>,
}

/// Serializable form of [`Export`]: every treebank as `.wist` text.
#[derive(Clone, Debug, Serialize)]
pub struct SubmissionRecord {
    pub finals: String,
    pub first: String,
    pub second: String,
    pub annotators: BTreeMap<String, String>,
}

impl Export {
    pub fn record(&self) -> SubmissionRecord {
        SubmissionRecord {
            finals: self.finals.to_text(),
            first: self.slots[0].treebank.to_text(),
            second: self.slots[1].treebank.to_text(),
            annotators: self
                .by_annotator
                .iter()
                .map(|s| (s.annotator.clone(), s.treebank.to_text()))
                .collect(),
        }
    }
}

fn entry(task: &Task, tree: &wordtree_core::DepTree) -> WordEntry {
    WordEntry::new(task.surface.clone(), tree.clone()).with_pos(task.pos_hints.iter().cloned())
}

fn tasks<'a>(ws: &'a Workspace, project: &'a Project) -> impl Iterator<Item = &'a Task> + 'a {
    project.tasks.iter().map(move |id| &ws.tasks[id])
}

pub fn export(ws: &Workspace, project: &str) -> Result<Export> {
    let p = ws.project(project)?;
    let mut finals = Vec::new();
    let mut slots = [Vec::new(), Vec::new()];
    let mut by_annotator: BTreeMap<&str, Vec<WordEntry>> = BTreeMap::new();
    for t in tasks(ws, p) {
        let subs: Vec<_> = t.submissions().collect();
        if subs.len() == 2 {
            for (slot, s) in slots.iter_mut().zip(&subs) {
                slot.push(entry(t, &s.tree));
            }
        }
        if let Some(tree) = &t.final_tree {
            finals.push(entry(t, tree));
            for s in subs {
                by_annotator.entry(&s.annotator).or_default().push(entry(t, &s.tree));
            }
        }
    }
    if finals.is_empty() {
        return Err(ServiceError::Conflict(format!("project {project} has no final answers yet")));
    }
    let [first, second] = slots;
    Ok(Export {
        finals: WordTreebank::from_entries(finals)?,
        slots: [
            AnnotationSet::new("first", WordTreebank::from_entries(first)?),
            AnnotationSet::new("second", WordTreebank::from_entries(second)?),
        ],
        by_annotator: by_annotator
            .into_iter()
            .map(|(a, es)| Ok(AnnotationSet::new(a, WordTreebank::from_entries(es)?)))
            .collect::<Result<_>>()?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnotatorStats {
    pub assigned: usize,
    pub submitted: usize,
    /// Submissions later overruled by adjudication or resolution.
    pub overruled: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectStats {
    pub tasks: usize,
    pub by_state: BTreeMap<TaskState, usize>,
    /// Agreement between first and second submissions; absent until some
    /// task has both.
    pub consistency: Option<AgreementReport>,
    /// Original submissions against final answers.
    pub accuracy: Option<AccuracyReport>,
    pub annotators: BTreeMap<String, AnnotatorStats>,
    /// Words some annotator flagged as having several structures.
    pub multi_structure: Vec<String>,
}

/// Agreement counted directly from task submissions.
fn consistency<'a>(tasks: impl Iterator<Item = &'a Task>) -> Option<AgreementReport> {
    let mut r = AgreementReport {
        dep_labeled: 0.0,
        dep_unlabeled: 0.0,
        word_labeled: 0.0,
        word_unlabeled: 0.0,
        n_chars: 0,
        n_words: 0,
        chars_labeled: 0,
        chars_unlabeled: 0,
        words_labeled: 0,
        words_unlabeled: 0,
    };
    for t in tasks {
        let subs: Vec<_> = t.submissions().collect();
        let [a, b] = subs.as_slice() else { continue };
        let (a, b) = (&a.tree, &b.tree);
        let same_heads = a.heads.iter().zip(&b.heads).filter(|(x, y)| x == y).count() as u64;
        let same_both = (0..a.len())
            .filter(|&i| a.heads[i] == b.heads[i] && a.labels[i] == b.labels[i])
            .count() as u64;
        r.n_words += 1;
        r.n_chars += a.len() as u64;
        r.chars_unlabeled += same_heads;
        r.chars_labeled += same_both;
        r.words_unlabeled += (same_heads == a.len() as u64) as u64;
        r.words_labeled += (a == b) as u64;
    }
    if r.n_words == 0 {
        return None;
    }
    r.dep_labeled = percent(r.chars_labeled, r.n_chars);
    r.dep_unlabeled = percent(r.chars_unlabeled, r.n_chars);
    r.word_labeled = percent(r.words_labeled, r.n_words);
    r.word_unlabeled = percent(r.words_unlabeled, r.n_words);
    Some(r)
}

pub fn stats(ws: &Workspace, project: &str) -> Result<ProjectStats> {
    let p = ws.project(project)?;
    let mut by_state = BTreeMap::new();
    let mut annotators: BTreeMap<String, AnnotatorStats> = BTreeMap::new();
    let mut multi_structure = Vec::new();
    for t in tasks(ws, p) {
        *by_state.entry(t.state).or_insert(0) += 1;
        for a in &t.assignments {
            let s = annotators.entry(a.annotator.clone()).or_insert(AnnotatorStats {
                assigned: 0,
                submitted: 0,
                overruled: 0,
            });
            s.assigned += 1;
            if let Some(sub) = &a.submission {
                s.submitted += 1;
                if t.final_tree.as_ref().is_some_and(|f| f != &sub.tree) {
                    s.overruled += 1;
                }
            }
        }
        if t.submissions().any(|s| s.multi_structure) {
            multi_structure.push(t.surface.clone());
        }
    }
    let accuracy = match export(ws, project) {
        Ok(e) if e.by_annotator.iter().any(|s| !s.treebank.is_empty()) => {
            Some(annotation_accuracy(&e.by_annotator, &e.finals)?)
        }
        Ok(_) | Err(ServiceError::Conflict(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ProjectStats {
        tasks: p.tasks.len(),
        by_state,
        consistency: consistency(tasks(ws, p)),
        accuracy,
        annotators,
        multi_structure,
    })
}
