//! Acceptance suite: one PASS, FAIL or SKIPPED line per criterion, then a non-zero
//! exit if anything failed.
//!
//! Corpus-dependent criteria run only when their data is present:
//! `WORDTREE_WIST` names a complete word-internal treebank (.wist) and
//! `WORDTREE_CTB5_DIR` a directory holding `train.dep`, `dev.dep` and
//! `test.dep`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordtree_annotate::{model_check, Service, TaskSpec, TaskState};
use wordtree_core::analysis::{pairwise_consistency, AgreementReport};
use wordtree_core::parser::{eisner, score_words, train_words, tree_score, ArcScores, ParserConfig, TrainConfig};
use wordtree_core::testing::{
    agreement_oracle_example, brute_force_best, brute_force_is_tree, brute_force_projective, full_model_grad_check,
    gcn_permutation_gap, metric_oracle_example, primitive_grad_checks, random_word_entry, single_label_collapse,
    star_chain_differ, synthetic_word_treebank, tiny_word_config,
};
use wordtree_core::treebank::{serialize_entry, validate_heads, WordTreebank};
use wordtree_core::{DepTree, Label, ParserModel32, Treebank};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}
use Outcome::*;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn decoder_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    let mut charts = 0;
    for n in 2..=5 {
        for _ in 0..1000 {
            // Exact rationals: equality is meaningful without a tolerance.
            let s = ArcScores::from_fn(n, |_, _| Ratio::new(rng.random_range(-50i64..=50), rng.random_range(1..=6)))
                .expect("square chart");
            let heads = eisner(&s);
            if tree_score(&s, &heads) != brute_force_best(&s) {
                mismatches += 1;
            }
            charts += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && secs < 30.0,
        format!("{charts} charts, {mismatches} suboptimal, {secs:.2}s"),
    )
}

fn decoder_legality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut bad = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=32);
        let s = ArcScores::from_fn(n, |_, _| rng.random_range(-10.0f64..10.0)).expect("square chart");
        let heads = eisner(&s);
        let report = validate_heads(&heads);
        let legal = report.is_legal() && report.is_projective();
        // Second opinion from the closure-based oracles.
        let oracle = brute_force_is_tree(&heads) && brute_force_projective(&heads);
        if !legal || !oracle {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("10000 charts (n <= 32), {bad} rejected"))
}

fn gradient_fidelity() -> Outcome {
    let full = match full_model_grad_check(0) {
        Ok(r) => r,
        Err(e) => return Fail(format!("full model: {e}")),
    };
    let mut worst = (0.0f64, "");
    for seed in 0..100 {
        for (name, r) in primitive_grad_checks(seed) {
            if r.max_rel_error > worst.0 || worst.1.is_empty() {
                worst = (r.max_rel_error.max(worst.0), name);
            }
        }
    }
    verdict(
        full.max_rel_error < 1e-4 && worst.0 < 1e-6,
        format!(
            "full model {:.2e} over {} coords (< 1e-4); worst primitive {} {:.2e} (< 1e-6)",
            full.max_rel_error, full.coords_checked, worst.1, worst.0
        ),
    )
}

fn overfit_sanity() -> Outcome {
    let tb = synthetic_word_treebank(50, 4, 2024);
    let config = ParserConfig {
        lstm_hidden: 64,
        arc_mlp_dim: 64,
        label_mlp_dim: 32,
        ..tiny_word_config(32, 2)
    };
    let cfg = TrainConfig {
        batch_tokens: 40,
        max_epochs: 200,
        patience: 200,
        stop_at_perfect: true,
        ..Default::default()
    };
    let start = Instant::now();
    let run = ParserModel32::for_words(config, &tb, None, 1)
        .and_then(|m| train_words(m, &tb, None, &cfg, |_| {}))
        .and_then(|out| Ok((out.model.evaluate_words(&tb)?, out.log.len())));
    let secs = start.elapsed().as_secs_f64();
    match run {
        Ok((r, epochs)) => verdict(
            r.las >= 99.0 && epochs <= 200 && secs < 120.0,
            format!("train LAS {:.2} after {epochs} epochs, {secs:.1}s", r.las),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

fn metric_oracle() -> Outcome {
    let (gold, pred) = metric_oracle_example();
    let r = match score_words(&gold, &pred) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let mut self_ok = true;
    for seed in 0..20 {
        let tb = synthetic_word_treebank(40, 6, seed);
        let same = tb.iter().map(|e| (e.surface.clone(), e.tree.clone())).collect();
        match score_words(&tb, &same) {
            Ok(s) => self_ok &= (s.uas, s.las, s.cm) == (100.0, 100.0, 100.0),
            Err(_) => self_ok = false,
        }
    }
    verdict(
        (r.uas, r.las, r.cm) == (100.0, 75.0, 50.0) && self_ok,
        format!("UAS {} LAS {} CM {}; gold vs gold perfect on 20 treebanks: {self_ok}", r.uas, r.las, r.cm),
    )
}

fn quad(r: &AgreementReport) -> (f64, f64, f64, f64) {
    (r.dep_labeled, r.dep_unlabeled, r.word_labeled, r.word_unlabeled)
}

/// The same two annotators working through the annotation service, whose
/// statistics count agreement without the analysis module.
fn service_agreement() -> Result<AgreementReport, String> {
    let (a, b) = agreement_oracle_example();
    let svc = Service::in_memory();
    let err = |e: wordtree_annotate::ServiceError| e.to_string();
    svc.create_project("oracle", 1).map_err(err)?;
    let specs = a
        .treebank
        .iter()
        .map(|e| TaskSpec {
            surface: e.surface.clone(),
            pos_hints: vec![],
            example_sentences: vec![],
        })
        .collect();
    svc.import_tasks("oracle", specs).map_err(err)?;
    for set in [&a, &b] {
        for _ in 0..set.treebank.len() {
            let view = svc.next_task("oracle", &set.annotator).map_err(err)?;
            let entry = set.treebank.iter().find(|e| e.surface == view.surface).ok_or("unknown surface")?;
            svc.submit(&view.task_id, &set.annotator, entry.tree.clone(), false).map_err(err)?;
        }
    }
    svc.stats("oracle").map_err(err)?.consistency.ok_or_else(|| "no consistency".into())
}

fn agreement_oracle() -> Outcome {
    let want = (75.0, 100.0, 50.0, 100.0);
    let (a, b) = agreement_oracle_example();
    let direct = match pairwise_consistency(&a, &b) {
        Ok(r) => quad(&r),
        Err(e) => return Fail(e.to_string()),
    };
    let service = match service_agreement() {
        Ok(r) => quad(&r),
        Err(e) => return Fail(format!("service: {e}")),
    };
    verdict(
        direct == want && service == want,
        format!("analysis {direct:?}, service {service:?}"),
    )
}

fn format_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = 0;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for i in 0..1000 {
        let e = random_word_entry(&mut rng, 8, i % 2 == 0);
        let block = serialize_entry(&e);
        match WordTreebank::parse(&block) {
            Ok(tb) if tb.len() == 1 && tb.entries[0] == e && serialize_entry(&tb.entries[0]) == block => {}
            _ => failures += 1,
        }
        if seen.insert((e.surface.clone(), e.sense_id)) {
            entries.push(e);
        }
    }
    let whole = Treebank::from_entries(entries).map_err(|e| e.to_string()).and_then(|tb| {
        let text = tb.to_text();
        let back = WordTreebank::parse(&text).map_err(|e| e.to_string())?;
        Ok(back.entries == tb.entries && back.to_text() == text)
    });
    verdict(
        failures == 0 && whole == Ok(true),
        format!("1000 entries, {failures} changed; whole file stable: {whole:?}"),
    )
}

fn workflow_model_check() -> Outcome {
    let r = model_check();
    // Direct route: two identical answers finish the task with no expert.
    let svc = Service::in_memory();
    let tree = DepTree::new(vec![2, 0], vec![Label::Att, Label::Root]);
    let direct = (|| -> wordtree_annotate::Result<bool> {
        svc.create_project("p", 0)?;
        let ids = svc.import_tasks(
            "p",
            vec![TaskSpec {
                surface: "大衣".into(),
                pos_hints: vec![],
                example_sentences: vec![],
            }],
        )?;
        for who in ["a", "b"] {
            svc.next_task("p", who)?;
        }
        svc.submit(&ids[0], "a", tree.clone(), false)?;
        let state = svc.submit(&ids[0], "b", tree.clone(), false)?;
        let task = svc.task(&ids[0], false)?;
        Ok(state == TaskState::Final && task.adjudication.is_none() && task.final_tree == Some(tree.clone()))
    })()
    .unwrap_or(false);
    verdict(
        r.passed() && r.identical_states > 0 && direct,
        format!(
            "{} states, {} transitions, {} paths, {} stuck, {} violations; identical answers final without adjudication: {direct}",
            r.states,
            r.transitions,
            r.paths,
            r.stuck_paths,
            r.violations.len()
        ),
    )
}

fn representation() -> Outcome {
    let mut collapse_bad = 0;
    for seed in 0..50 {
        let (labelled, augmented) = single_label_collapse(seed);
        if labelled != augmented {
            collapse_bad += 1;
        }
    }
    let gap = (0..100).map(gcn_permutation_gap).fold(0.0, f64::max);
    let differ = (0..100).filter(|&s| star_chain_differ(s)).count();
    verdict(
        collapse_bad == 0 && gap < 1e-6 && differ >= 95,
        format!("collapse inexact in {collapse_bad}/50; permutation gap {gap:.1e}; star vs chain differ {differ}/100"),
    )
}

fn wordtree() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wordtree"))
}

fn run(cmd: &mut Command) -> Result<(), String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn wist() -> Option<PathBuf> {
    std::env::var_os("WORDTREE_WIST").map(PathBuf::from).filter(|p| p.is_file())
}

fn wist_parsing() -> Outcome {
    let Some(tb) = wist() else {
        return Skip("WORDTREE_WIST not set".into());
    };
    let go = || -> Result<(f64, f64), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = dir.path();
        run(wordtree().args(["split", "--dev", "2500", "--test", "5000", "--tb"]).arg(&tb).arg("--out-dir").arg(d))?;
        run(wordtree()
            .args(["train", "--mode", "word-internal", "--train"])
            .arg(d.join("train.wist"))
            .arg("--dev")
            .arg(d.join("dev.wist"))
            .arg("--test")
            .arg(d.join("test.wist"))
            .arg("--out")
            .arg(d.join("model.bin")))?;
        let r = read_json(&d.join("model.bin.report.json"))?;
        let test = &r["report"]["test"];
        Ok((test["uas"].as_f64().unwrap_or(f64::NAN), test["las"].as_f64().unwrap_or(f64::NAN)))
    };
    match go() {
        Ok((uas, las)) => verdict(
            (uas - 80.63).abs() <= 1.5 && (las - 75.58).abs() <= 1.5,
            format!("test UAS {uas:.2} (80.63 +- 1.5), LAS {las:.2} (75.58 +- 1.5)"),
        ),
        Err(e) => Fail(e),
    }
}

fn wist_statistics() -> Outcome {
    let Some(tb) = wist() else {
        return Skip("WORDTREE_WIST not set".into());
    };
    let go = || -> Result<Vec<(&'static str, f64, f64)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("stats.json");
        run(wordtree().arg("stats").arg("--tb").arg(&tb).arg("--out").arg(&out))?;
        let r = read_json(&out)?;
        let dist = &r["report"]["distribution"];
        let total = dist["totals"]["overall"].as_f64().ok_or("no overall total")?;
        Ok([("root", 39.2), ("att", 29.1), ("coo", 10.2)]
            .into_iter()
            .map(|(l, want)| (l, 100.0 * dist["counts"]["overall"][l].as_f64().unwrap_or(0.0) / total, want))
            .collect())
    };
    match go() {
        Ok(rows) => verdict(
            rows.iter().all(|(_, got, want)| (got - want).abs() <= 0.1),
            rows.iter().map(|(l, got, want)| format!("{l} {got:.2} ({want})")).collect::<Vec<_>>().join(", "),
        ),
        Err(e) => Fail(e),
    }
}

fn ctb5_gain() -> Outcome {
    let Some(dir) = std::env::var_os("WORDTREE_CTB5_DIR").map(PathBuf::from).filter(|p| p.is_dir()) else {
        return Skip("WORDTREE_CTB5_DIR not set".into());
    };
    let go = || -> Result<Vec<f64>, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut gains = Vec::new();
        for seed in 1..=3u64 {
            let mut las = Vec::new();
            for wordrep in ["charlstm", "labelgcn"] {
                let out = tmp.path().join(format!("{wordrep}-{seed}.bin"));
                let mut cmd = wordtree();
                cmd.args(["train", "--mode", "sentence", "--wordrep", wordrep, "--seed"])
                    .arg(seed.to_string())
                    .arg("--train")
                    .arg(dir.join("train.dep"))
                    .arg("--dev")
                    .arg(dir.join("dev.dep"))
                    .arg("--test")
                    .arg(dir.join("test.dep"))
                    .arg("--out")
                    .arg(&out);
                if let Some(w) = wist() {
                    cmd.arg("--lexicon").arg(w);
                }
                run(&mut cmd)?;
                let r = read_json(&PathBuf::from(format!("{}.report.json", out.display())))?;
                las.push(r["report"]["test"]["las"].as_f64().ok_or("no test LAS")?);
            }
            gains.push(las[1] - las[0]);
        }
        Ok(gains)
    };
    match go() {
        Ok(g) => verdict(g.iter().all(|&x| x > 0.0), format!("LabelGCN - CharLSTM LAS per seed {g:.2?}")),
        Err(e) => Fail(e),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("decoder optimality", decoder_optimality),
        ("decoder legality", decoder_legality),
        ("gradient fidelity", gradient_fidelity),
        ("overfit sanity", overfit_sanity),
        ("metric oracle", metric_oracle),
        ("agreement oracle", agreement_oracle),
        ("format round-trip", format_round_trip),
        ("workflow model check", workflow_model_check),
        ("representation properties", representation),
        ("WIST parsing accuracy", wist_parsing),
        ("WIST label distribution", wist_statistics),
        ("CTB5 LabelGCN gain", ctb5_gain),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIPPED", d),
        };
        println!("{tag} {name} [{secs:.1}s]: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
