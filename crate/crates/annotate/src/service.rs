//! Serialized access to a workspace and its event log.

use std::path::Path;
use std::sync::{Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use wordtree_core::DepTree;

use crate::error::Result;
use crate::export::{self, Export, ProjectStats};
use crate::store::EventLog;
use crate::workflow::{Event, Task, TaskSpec, TaskState, Workspace};

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 256;

struct Inner {
    ws: Workspace,
    log: Option<EventLog>,
}

/// The single writer: every mutation is planned, logged and applied while
/// holding one lock, so task transitions are linearizable.
pub struct Service {
    inner: Mutex<Inner>,
    clock: fn() -> u64,
}

/// What an annotator sees of a task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnotatorView {
    pub task_id: String,
    pub surface: String,
    pub chars: Vec<String>,
    pub pos_hints: Vec<String>,
    pub example_sentences: Vec<String>,
}

impl From<&Task> for AnnotatorView {
    fn from(t: &Task) -> Self {
        AnnotatorView {
            task_id: t.id.clone(),
            surface: t.surface.clone(),
            chars: t.surface.chars().map(String::from).collect(),
            pos_hints: t.pos_hints.clone(),
            example_sentences: t.example_sentences.clone(),
        }
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Service {
    /// Volatile service; state is lost on exit.
    pub fn in_memory() -> Self {
        Service {
            inner: Mutex::new(Inner {
                ws: Workspace::new(),
                log: None,
            }),
            clock: unix_seconds,
        }
    }

    /// Service persisted in `dir`, recovering any existing state.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<Self> {
        let (log, ws) = EventLog::open(dir, snapshot_every)?;
        Ok(Service {
            inner: Mutex::new(Inner { ws, log: Some(log) }),
            clock: unix_seconds,
        })
    }

    /// Replaces the timestamp source; tests use a constant.
    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = clock;
        self
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("service state poisoned")
    }

    fn commit(&self, plan: impl FnOnce(&Workspace) -> Result<Event>) -> Result<Event> {
        self.commit_then(plan, |_, _| ()).map(|(e, ())| e)
    }

    /// Commits and inspects the resulting state under the same lock.
    fn commit_then<R>(
        &self,
        plan: impl FnOnce(&Workspace) -> Result<Event>,
        after: impl FnOnce(&Workspace, &Event) -> R,
    ) -> Result<(Event, R)> {
        let mut inner = self.lock();
        let event = plan(&inner.ws)?;
        let Inner { ws, log } = &mut *inner;
        if let Some(log) = log.as_mut() {
            log.append(&event)?;
        }
        ws.apply(&event)?;
        if let Some(log) = log.as_mut() {
            if log.snapshot_due() {
                log.snapshot(ws)?;
            }
        }
        let r = after(ws, &event);
        Ok((event, r))
    }

    /// Runs `f` on a consistent view of the state.
    pub fn read<R>(&self, f: impl FnOnce(&Workspace) -> R) -> R {
        f(&self.lock().ws)
    }

    pub fn create_project(&self, id: &str, seed: u64) -> Result<()> {
        self.commit(|ws| ws.plan_create_project(id, seed)).map(drop)
    }

    /// Returns the ids of the new tasks.
    pub fn import_tasks(&self, project: &str, specs: Vec<TaskSpec>) -> Result<Vec<String>> {
        match self.commit(|ws| ws.plan_import(project, specs))? {
            Event::TasksImported { tasks, .. } => Ok(tasks.into_iter().map(|(id, _)| id).collect()),
            e => unreachable!("import planned {e:?}"),
        }
    }

    pub fn next_task(&self, project: &str, annotator: &str) -> Result<AnnotatorView> {
        let (_, view) = self.commit_then(
            |ws| ws.plan_next_task(project, annotator),
            |ws, e| match e {
                Event::Assigned { task, .. } => AnnotatorView::from(&ws.tasks[task]),
                e => unreachable!("next_task planned {e:?}"),
            },
        )?;
        Ok(view)
    }

    fn transition(&self, task: &str, plan: impl FnOnce(&Workspace) -> Result<Event>) -> Result<TaskState> {
        self.commit_then(plan, |ws, _| ws.tasks[task].state).map(|(_, s)| s)
    }

    pub fn submit(&self, task: &str, annotator: &str, tree: DepTree, multi_structure: bool) -> Result<TaskState> {
        let now = (self.clock)();
        self.transition(task, |ws| ws.plan_submit(task, annotator, tree, multi_structure, now))
    }

    pub fn adjudicate(&self, task: &str, expert: &str, tree: DepTree) -> Result<TaskState> {
        self.transition(task, |ws| ws.plan_adjudicate(task, expert, tree))
    }

    pub fn complain(&self, task: &str, annotator: &str, reason: String) -> Result<TaskState> {
        self.transition(task, |ws| ws.plan_complain(task, annotator, reason))
    }

    pub fn resolve(&self, task: &str, senior: &str, tree: DepTree) -> Result<TaskState> {
        self.transition(task, |ws| ws.plan_resolve(task, senior, tree))
    }

    /// The task record; `blind` replaces annotator identities with aliases.
    pub fn task(&self, id: &str, blind: bool) -> Result<Task> {
        self.read(|ws| {
            let t = ws.task(id)?;
            Ok(if blind { t.blind() } else { t.clone() })
        })
    }

    pub fn export(&self, project: &str) -> Result<Export> {
        self.read(|ws| export::export(ws, project))
    }

    pub fn stats(&self, project: &str) -> Result<ProjectStats> {
        self.read(|ws| export::stats(ws, project))
    }

    /// Forces a snapshot of persisted state.
    pub fn checkpoint(&self) -> Result<()> {
        let mut inner = self.lock();
        let Inner { ws, log } = &mut *inner;
        if let Some(log) = log.as_mut() {
            log.snapshot(ws)?;
        }
        Ok(())
    }
}
