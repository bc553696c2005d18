//! Exhaustive exploration of the task state machine.
//!
//! One two-character task, annotators `a` and `b`, expert `e` and senior
//! `s`. From every reachable state every actor tries every operation with
//! every tree from a small alphabet (three legal trees and one with two
//! roots), including operations their role forbids. The explored graph
//! must be acyclic, every maximal path must end in `Final`, and the safety
//! rules must hold in every state.

use std::collections::HashMap;

use serde::Serialize;
use wordtree_core::{DepTree, Label};

use crate::workflow::{check_tree, Event, Task, TaskSpec, TaskState, Workspace};

const PROJECT: &str = "mc";
const WORD: &str = "大衣";
const ANNOTATORS: [&str; 2] = ["a", "b"];
const EXPERT: &str = "e";
const SENIOR: &str = "s";

#[derive(Clone, Debug, Default, Serialize)]
pub struct ModelCheckReport {
    pub states: usize,
    pub transitions: usize,
    /// Attempted operations the workflow refused.
    pub rejected: usize,
    /// Maximal paths from the initial state.
    pub paths: u128,
    /// Maximal paths whose last state is not `Final`.
    pub stuck_paths: u128,
    /// Reachable states where both submissions agree.
    pub identical_states: usize,
    pub violations: Vec<String>,
}

impl ModelCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.stuck_paths == 0 && self.paths > 0
    }
}

fn trees() -> Vec<(DepTree, bool)> {
    use Label::*;
    vec![
        (DepTree::new(vec![2, 0], vec![Att, Root]), true),
        (DepTree::new(vec![2, 0], vec![Adv, Root]), true),
        (DepTree::new(vec![0, 1], vec![Root, Obj]), true),
        (DepTree::new(vec![0, 0], vec![Root, Root]), false),
    ]
}

#[derive(Clone, Debug)]
enum Op {
    Next(&'static str),
    Submit(&'static str, usize),
    Adjudicate(&'static str, usize),
    Complain(&'static str),
    Resolve(&'static str, usize),
}

fn ops() -> Vec<Op> {
    let n = trees().len();
    let everyone = ["a", "b", EXPERT, SENIOR];
    let mut out = Vec::new();
    for who in everyone {
        if ANNOTATORS.contains(&who) {
            out.push(Op::Next(who));
        }
        out.push(Op::Complain(who));
        for t in 0..n {
            out.push(Op::Submit(who, t));
            out.push(Op::Adjudicate(who, t));
            out.push(Op::Resolve(who, t));
        }
    }
    out
}

fn plan(ws: &Workspace, task: &str, op: &Op, trees: &[(DepTree, bool)]) -> crate::Result<Event> {
    match *op {
        Op::Next(who) => ws.plan_next_task(PROJECT, who),
        Op::Submit(who, t) => ws.plan_submit(task, who, trees[t].0.clone(), false, 0),
        Op::Adjudicate(who, t) => ws.plan_adjudicate(task, who, trees[t].0.clone()),
        Op::Complain(who) => ws.plan_complain(task, who, String::new()),
        Op::Resolve(who, t) => ws.plan_resolve(task, who, trees[t].0.clone()),
    }
}

/// Rules that must hold in every reachable state.
fn invariants(t: &Task) -> Vec<String> {
    let mut v = Vec::new();
    let names: Vec<&str> = t.assignments.iter().map(|a| a.annotator.as_str()).collect();
    if names.len() > 2 {
        v.push(format!("{} slots", names.len()));
    }
    if names.len() == 2 && names[0] == names[1] {
        v.push(format!("{} holds two slots", names[0]));
    }
    if names.iter().any(|n| !ANNOTATORS.contains(n)) {
        v.push(format!("slot given outside the annotator pool: {names:?}"));
    }
    if let Some(adj) = &t.adjudication {
        if names.contains(&adj.expert.as_str()) {
            v.push(format!("{} adjudicated their own task", adj.expert));
        }
    }
    if let Some(r) = &t.resolution {
        if t.participants().contains(r.senior.as_str()) {
            v.push(format!("{} resolved a task they took part in", r.senior));
        }
    }
    if (t.state == TaskState::Final) != t.final_tree.is_some() {
        v.push(format!("state {:?} with final tree {:?}", t.state, t.final_tree));
    }
    if let Some(f) = &t.final_tree {
        if check_tree(f, t.char_len()).is_err() {
            v.push("final answer is not a legal tree".into());
        }
    }
    let subs: Vec<_> = t.submissions().collect();
    if subs.len() == 2 && subs[0].tree == subs[1].tree {
        if t.adjudication.is_some() {
            v.push("identical submissions went to adjudication".into());
        }
        if t.state != TaskState::Final {
            v.push(format!("identical submissions left the task {:?}", t.state));
        }
    }
    if subs.len() == 2 && subs[0].tree != subs[1].tree && t.state == TaskState::Final && t.adjudication.is_none() {
        v.push("differing submissions finalized without adjudication".into());
    }
    v
}

pub fn model_check() -> ModelCheckReport {
    let trees = trees();
    let ops = ops();
    let mut init = Workspace::new();
    let create = init.plan_create_project(PROJECT, 0).expect("fresh project");
    init.apply(&create).expect("apply");
    let import = init
        .plan_import(
            PROJECT,
            vec![TaskSpec {
                surface: WORD.into(),
                pos_hints: vec!["NOUN".into()],
                example_sentences: vec![],
            }],
        )
        .expect("import");
    init.apply(&import).expect("apply");
    let task = init.projects[PROJECT].tasks[0].clone();

    let key = |ws: &Workspace| serde_json::to_string(ws).expect("serializable");
    let mut report = ModelCheckReport::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut states: Vec<Workspace> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    index.insert(key(&init), 0);
    states.push(init);
    edges.push(Vec::new());
    let mut frontier = vec![0];
    while let Some(i) = frontier.pop() {
        let ws = states[i].clone();
        let t = &ws.tasks[&task];
        for msg in invariants(t) {
            report.violations.push(format!("state {i}: {msg}"));
        }
        let subs: Vec<_> = t.submissions().collect();
        if subs.len() == 2 && subs[0].tree == subs[1].tree {
            report.identical_states += 1;
        }
        for op in &ops {
            let event = match plan(&ws, &task, op, &trees) {
                Ok(e) => e,
                Err(_) => {
                    report.rejected += 1;
                    continue;
                }
            };
            let illegal = match op {
                Op::Submit(_, k) | Op::Adjudicate(_, k) | Op::Resolve(_, k) => !trees[*k].1,
                _ => false,
            };
            if illegal {
                report.violations.push(format!("state {i}: accepted an illegal tree via {op:?}"));
            }
            if t.state == TaskState::Final {
                report.violations.push(format!("state {i}: final task accepted {op:?}"));
            }
            let mut next = ws.clone();
            if let Err(e) = next.apply(&event) {
                report.violations.push(format!("state {i}: planned {op:?} failed to apply: {e}"));
                continue;
            }
            report.transitions += 1;
            let k = key(&next);
            let j = match index.get(&k) {
                Some(&j) => j,
                None => {
                    let j = states.len();
                    index.insert(k, j);
                    states.push(next);
                    edges.push(Vec::new());
                    frontier.push(j);
                    j
                }
            };
            edges[i].push(j);
        }
    }
    report.states = states.len();

    // Path counting doubles as the cycle check: a state revisited while
    // still on the stack closes a cycle.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done(u128, u128),
    }
    let mut mark = vec![Mark::New; states.len()];
    let mut stack = vec![(0usize, 0usize)];
    mark[0] = Mark::Open;
    while let Some(&mut (i, ref mut next)) = stack.last_mut() {
        if *next < edges[i].len() {
            let j = edges[i][*next];
            *next += 1;
            match mark[j] {
                Mark::New => {
                    mark[j] = Mark::Open;
                    stack.push((j, 0));
                }
                Mark::Open => report.violations.push(format!("cycle through state {j}")),
                Mark::Done(..) => {}
            }
            continue;
        }
        stack.pop();
        let (paths, stuck) = if edges[i].is_empty() {
            let fin = states[i].tasks[&task].state == TaskState::Final;
            (1, (!fin) as u128)
        } else {
            edges[i].iter().fold((0u128, 0u128), |(p, s), &j| match mark[j] {
                Mark::Done(pj, sj) => (p.saturating_add(pj), s.saturating_add(sj)),
                _ => (p, s),
            })
        };
        mark[i] = Mark::Done(paths, stuck);
    }
    if let Mark::Done(p, s) = mark[0] {
        report.paths = p;
        report.stuck_paths = s;
    }
    report
}
