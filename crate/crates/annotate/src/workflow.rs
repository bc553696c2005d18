//! Task state machine.
//!
//! Every mutation is split into a pure `plan_*` step that validates a
//! request against the current state and returns an [`Event`], and
//! [`Workspace::apply`], which performs it. Events carry every random
//! choice, so replaying a log reproduces the state exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wordtree_core::treebank::DepTree;

use crate::error::{Result, ServiceError};

pub type TaskId = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Unassigned,
    /// One annotator holds a slot.
    PartiallyAssigned,
    /// Both slots are held; waiting for the remaining submission(s).
    AwaitingSecond,
    /// Two differing submissions; queued for an expert.
    Inconsistent,
    /// Adjudicated; annotators who disagreed must correct or complain.
    AwaitingCorrection,
    Complained,
    Final,
}

/// Import item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub surface: String,
    #[serde(default)]
    pub pos_hints: Vec<String>,
    #[serde(default)]
    pub example_sentences: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    pub tree: DepTree,
    /// The annotator believes the word has several structures.
    pub multi_structure: bool,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub annotator: String,
    pub submission: Option<Submission>,
    /// Resubmission after adjudication; always equals the adjudicated tree.
    pub correction: Option<DepTree>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjudication {
    pub expert: String,
    pub tree: DepTree,
    /// Annotators that still owe a correction.
    pub pending: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complaint {
    pub annotator: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub senior: String,
    pub tree: DepTree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub project: String,
    pub surface: String,
    pub pos_hints: Vec<String>,
    pub example_sentences: Vec<String>,
    pub state: TaskState,
    pub assignments: Vec<Assignment>,
    pub adjudication: Option<Adjudication>,
    pub complaint: Option<Complaint>,
    pub resolution: Option<Resolution>,
    pub final_tree: Option<DepTree>,
}

impl Task {
    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }

    pub fn slot(&self, annotator: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.annotator == annotator)
    }

    fn slot_mut(&mut self, annotator: &str) -> Option<&mut Assignment> {
        self.assignments.iter_mut().find(|a| a.annotator == annotator)
    }

    pub fn submissions(&self) -> impl Iterator<Item = &Submission> {
        self.assignments.iter().filter_map(|a| a.submission.as_ref())
    }

    /// Everyone who touched the task in any role.
    pub fn participants(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.assignments.iter().map(|a| a.annotator.as_str()).collect();
        if let Some(adj) = &self.adjudication {
            out.insert(&adj.expert);
        }
        out
    }

    /// Copy without annotator identities, as shown to experts.
    pub fn blind(&self) -> Task {
        let mut t = self.clone();
        for (i, a) in t.assignments.iter_mut().enumerate() {
            let alias = format!("annotator-{}", i + 1);
            if let Some(s) = &mut a.submission {
                s.annotator = alias.clone();
            }
            a.annotator = alias;
        }
        if let Some(adj) = &mut t.adjudication {
            adj.pending = adj
                .pending
                .iter()
                .map(|p| {
                    let i = self.assignments.iter().position(|a| &a.annotator == p).unwrap_or(0);
                    format!("annotator-{}", i + 1)
                })
                .collect();
        }
        if let Some(c) = &mut t.complaint {
            if let Some(i) = self.assignments.iter().position(|a| a.annotator == c.annotator) {
                c.annotator = format!("annotator-{}", i + 1);
            }
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub seed: u64,
    /// Task ids in import order.
    pub tasks: Vec<TaskId>,
    pub annotators: BTreeSet<String>,
    /// Number of assignments handed out; salts the assignment draw.
    pub draws: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ProjectCreated { project: String, seed: u64 },
    TasksImported { project: String, tasks: Vec<(TaskId, TaskSpec)> },
    Assigned { task: TaskId, annotator: String },
    Submitted { task: TaskId, submission: Submission },
    Adjudicated { task: TaskId, expert: String, tree: DepTree },
    Corrected { task: TaskId, annotator: String },
    Complained { task: TaskId, annotator: String, reason: String },
    Resolved { task: TaskId, senior: String, tree: DepTree },
}

/// All projects and tasks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub projects: BTreeMap<String, Project>,
    pub tasks: BTreeMap<TaskId, Task>,
    /// Tasks created so far; task ids are `t1`, `t2`, ...
    pub task_count: u64,
}

fn conflict(msg: impl Into<String>) -> ServiceError {
    ServiceError::Conflict(msg.into())
}

/// Rejects trees that do not cover the word or are not legal.
/// Non-projective trees are legal.
pub fn check_tree(tree: &DepTree, n_chars: usize) -> Result<()> {
    if tree.heads.len() != tree.labels.len() || tree.heads.len() != n_chars {
        return Err(ServiceError::IllegalTree {
            message: format!(
                "expected {n_chars} heads and labels, got {} and {}",
                tree.heads.len(),
                tree.labels.len()
            ),
            violations: Vec::new(),
        });
    }
    let report = tree.validate();
    if !report.is_legal() {
        let violations: Vec<_> = report
            .violations
            .into_iter()
            .filter(|v| !v.is_non_projective())
            .collect();
        let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(ServiceError::IllegalTree { message, violations });
    }
    Ok(())
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn project(&self, id: &str) -> Result<&Project> {
        self.projects
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("project {id}")))
    }

    pub fn task(&self, id: &str) -> Result<&Task> {
        self.tasks
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("task {id}")))
    }

    pub fn plan_create_project(&self, id: &str, seed: u64) -> Result<Event> {
        if id.is_empty() || id.contains('/') {
            return Err(ServiceError::Malformed(format!("bad project id `{id}`")));
        }
        if self.projects.contains_key(id) {
            return Err(conflict(format!("project {id} exists")));
        }
        Ok(Event::ProjectCreated {
            project: id.to_string(),
            seed,
        })
    }

    pub fn plan_import(&self, project: &str, specs: Vec<TaskSpec>) -> Result<Event> {
        let p = self.project(project)?;
        let seen: BTreeSet<&str> = p.tasks.iter().map(|t| self.tasks[t].surface.as_str()).collect();
        let mut fresh = BTreeSet::new();
        for s in &specs {
            if s.surface.chars().count() < 2 {
                return Err(ServiceError::Malformed(format!(
                    "`{}`: only multi-character words are annotated",
                    s.surface
                )));
            }
            if s.surface.chars().any(char::is_whitespace) {
                return Err(ServiceError::Malformed(format!("`{}` contains whitespace", s.surface)));
            }
            if let Some(tag) = s
                .pos_hints
                .iter()
                .find(|t| t.is_empty() || t.contains(',') || t.chars().any(char::is_whitespace))
            {
                return Err(ServiceError::Malformed(format!("bad POS hint `{tag}`")));
            }
            if seen.contains(s.surface.as_str()) || !fresh.insert(s.surface.as_str()) {
                return Err(conflict(format!("`{}` is already a task", s.surface)));
            }
        }
        let tasks = specs
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("t{}", self.task_count + 1 + i as u64), s))
            .collect();
        Ok(Event::TasksImported {
            project: project.to_string(),
            tasks,
        })
    }

    /// Tasks `annotator` may still be given, in import order.
    pub fn eligible<'a>(&'a self, project: &'a Project, annotator: &str) -> Vec<&'a TaskId> {
        project
            .tasks
            .iter()
            .filter(|id| {
                let t = &self.tasks[*id];
                t.assignments.len() < 2 && t.slot(annotator).is_none()
            })
            .collect()
    }

    /// Uniform draw among eligible tasks, seeded by the project seed and
    /// the number of earlier draws.
    pub fn plan_next_task(&self, project: &str, annotator: &str) -> Result<Event> {
        if annotator.is_empty() {
            return Err(ServiceError::Malformed("annotator id is required".into()));
        }
        let p = self.project(project)?;
        let eligible = self.eligible(p, annotator);
        if eligible.is_empty() {
            return Err(conflict(format!("no eligible task for {annotator}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ p.draws.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let pick = eligible[rng.random_range(0..eligible.len())];
        Ok(Event::Assigned {
            task: pick.clone(),
            annotator: annotator.to_string(),
        })
    }

    /// A first or second submission, or a correction after adjudication.
    pub fn plan_submit(
        &self,
        task: &str,
        annotator: &str,
        tree: DepTree,
        multi_structure: bool,
        timestamp: u64,
    ) -> Result<Event> {
        let t = self.task(task)?;
        if t.state == TaskState::Final {
            return Err(conflict(format!("task {task} is final")));
        }
        let slot = t
            .slot(annotator)
            .ok_or_else(|| conflict(format!("{annotator} is not assigned to task {task}")))?;
        check_tree(&tree, t.char_len())?;
        match t.state {
            TaskState::PartiallyAssigned | TaskState::AwaitingSecond => {
                if slot.submission.is_some() {
                    return Err(conflict(format!("{annotator} already submitted task {task}")));
                }
                Ok(Event::Submitted {
                    task: task.to_string(),
                    submission: Submission {
                        annotator: annotator.to_string(),
                        tree,
                        multi_structure,
                        timestamp,
                    },
                })
            }
            TaskState::AwaitingCorrection => {
                let adj = t.adjudication.as_ref().expect("adjudicated");
                if !adj.pending.contains(annotator) {
                    return Err(conflict(format!("{annotator} owes no correction on task {task}")));
                }
                if tree != adj.tree {
                    return Err(conflict("a correction must match the adjudicated answer"));
                }
                Ok(Event::Corrected {
                    task: task.to_string(),
                    annotator: annotator.to_string(),
                })
            }
            s => Err(conflict(format!("task {task} does not accept submissions when {s:?}"))),
        }
    }

    pub fn plan_adjudicate(&self, task: &str, expert: &str, tree: DepTree) -> Result<Event> {
        let t = self.task(task)?;
        if t.state != TaskState::Inconsistent {
            return Err(conflict(format!("task {task} is not awaiting adjudication")));
        }
        if t.slot(expert).is_some() {
            return Err(conflict(format!("{expert} annotated task {task} and cannot adjudicate it")));
        }
        check_tree(&tree, t.char_len())?;
        Ok(Event::Adjudicated {
            task: task.to_string(),
            expert: expert.to_string(),
            tree,
        })
    }

    pub fn plan_complain(&self, task: &str, annotator: &str, reason: String) -> Result<Event> {
        let t = self.task(task)?;
        let owes = t
            .adjudication
            .as_ref()
            .is_some_and(|a| a.pending.contains(annotator));
        if t.state != TaskState::AwaitingCorrection || !owes {
            return Err(conflict(format!("{annotator} cannot complain about task {task} now")));
        }
        Ok(Event::Complained {
            task: task.to_string(),
            annotator: annotator.to_string(),
            reason,
        })
    }

    pub fn plan_resolve(&self, task: &str, senior: &str, tree: DepTree) -> Result<Event> {
        let t = self.task(task)?;
        if t.state != TaskState::Complained {
            return Err(conflict(format!("task {task} has no open complaint")));
        }
        if t.participants().contains(senior) {
            return Err(conflict(format!("{senior} already took part in task {task}")));
        }
        check_tree(&tree, t.char_len())?;
        Ok(Event::Resolved {
            task: task.to_string(),
            senior: senior.to_string(),
            tree,
        })
    }

    /// Performs a planned event. Events from [`Workspace`]'s planners always
    /// apply; anything else is a corrupted log.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        let corrupt = |what: &str| ServiceError::Conflict(format!("event log out of sync: {what}"));
        match event {
            Event::ProjectCreated { project, seed } => {
                self.projects.insert(
                    project.clone(),
                    Project {
                        id: project.clone(),
                        seed: *seed,
                        tasks: Vec::new(),
                        annotators: BTreeSet::new(),
                        draws: 0,
                    },
                );
            }
            Event::TasksImported { project, tasks } => {
                let p = self.projects.get_mut(project).ok_or_else(|| corrupt("unknown project"))?;
                for (id, spec) in tasks {
                    p.tasks.push(id.clone());
                    self.tasks.insert(
                        id.clone(),
                        Task {
                            id: id.clone(),
                            project: project.clone(),
                            surface: spec.surface.clone(),
                            pos_hints: spec.pos_hints.clone(),
                            example_sentences: spec.example_sentences.clone(),
                            state: TaskState::Unassigned,
                            assignments: Vec::new(),
                            adjudication: None,
                            complaint: None,
                            resolution: None,
                            final_tree: None,
                        },
                    );
                }
                self.task_count += tasks.len() as u64;
            }
            Event::Assigned { task, annotator } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                t.assignments.push(Assignment {
                    annotator: annotator.clone(),
                    submission: None,
                    correction: None,
                });
                if t.state == TaskState::Unassigned || t.state == TaskState::PartiallyAssigned {
                    t.state = if t.assignments.len() == 2 {
                        TaskState::AwaitingSecond
                    } else {
                        TaskState::PartiallyAssigned
                    };
                }
                let p = self.projects.get_mut(&t.project).ok_or_else(|| corrupt("unknown project"))?;
                p.annotators.insert(annotator.clone());
                p.draws += 1;
            }
            Event::Submitted { task, submission } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                let slot = t.slot_mut(&submission.annotator).ok_or_else(|| corrupt("no slot"))?;
                slot.submission = Some(submission.clone());
                let trees: Vec<&DepTree> = t.submissions().map(|s| &s.tree).collect();
                if trees.len() == 2 {
                    if trees[0] == trees[1] {
                        t.final_tree = Some(trees[0].clone());
                        t.state = TaskState::Final;
                    } else {
                        t.state = TaskState::Inconsistent;
                    }
                }
            }
            Event::Adjudicated { task, expert, tree } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                let pending = t
                    .assignments
                    .iter()
                    .filter(|a| a.submission.as_ref().is_some_and(|s| &s.tree != tree))
                    .map(|a| a.annotator.clone())
                    .collect::<BTreeSet<_>>();
                t.state = if pending.is_empty() {
                    t.final_tree = Some(tree.clone());
                    TaskState::Final
                } else {
                    TaskState::AwaitingCorrection
                };
                t.adjudication = Some(Adjudication {
                    expert: expert.clone(),
                    tree: tree.clone(),
                    pending,
                });
            }
            Event::Corrected { task, annotator } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                let adj = t.adjudication.as_mut().ok_or_else(|| corrupt("not adjudicated"))?;
                adj.pending.remove(annotator);
                let tree = adj.tree.clone();
                let done = adj.pending.is_empty();
                let slot = t.slot_mut(annotator).ok_or_else(|| corrupt("no slot"))?;
                slot.correction = Some(tree.clone());
                if done {
                    t.final_tree = Some(tree);
                    t.state = TaskState::Final;
                }
            }
            Event::Complained {
                task,
                annotator,
                reason,
            } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                t.complaint = Some(Complaint {
                    annotator: annotator.clone(),
                    reason: reason.clone(),
                });
                t.state = TaskState::Complained;
            }
            Event::Resolved { task, senior, tree } => {
                let t = self.tasks.get_mut(task).ok_or_else(|| corrupt("unknown task"))?;
                t.resolution = Some(Resolution {
                    senior: senior.clone(),
                    tree: tree.clone(),
                });
                t.final_tree = Some(tree.clone());
                t.state = TaskState::Final;
            }
        }
        Ok(())
    }

    /// Plans and applies in one step.
    pub fn execute(&mut self, plan: impl FnOnce(&Self) -> Result<Event>) -> Result<Event> {
        let event = plan(self)?;
        self.apply(&event)?;
        Ok(event)
    }
}
