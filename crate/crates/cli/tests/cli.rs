use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wordtree_core::testing::synthetic_word_treebank;
use wordtree_core::treebank::WordTreebank;

const TINY: [&str; 14] = [
    "--epochs", "3", "--char-dim", "8", "--hidden", "8", "--layers", "1", "--arc-mlp", "8", "--label-mlp", "8",
    "--batch-tokens", "20",
];

fn wordtree(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordtree"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Temp dir holding `train.wist` with twelve synthetic words.
fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("train.wist"), synthetic_word_treebank(12, 4, 5).to_text()).unwrap();
    dir
}

fn train_tiny(dir: &Path, out: &str) -> Output {
    let mut args = vec!["train", "--train", "train.wist", "--out", out];
    args.extend(TINY);
    wordtree(&args, dir)
}

#[test]
fn every_command_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["train", "parse", "eval", "stats", "agree", "serve", "lexicon", "split", "validate"] {
        let o = wordtree(&[cmd, "--help"], dir.path());
        assert_eq!(code(&o), 0, "{cmd}");
        assert!(stdout(&o).contains("Usage: wordtree"), "{cmd}");
    }
    assert_eq!(code(&wordtree(&["--help"], dir.path())), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = workdir();
    let o = wordtree(&["train", "--out", "m.bin"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--train"));
    assert_eq!(code(&wordtree(&["no-such-command"], dir.path())), 1);
    assert_eq!(code(&wordtree(&["train", "--epochs", "many"], dir.path())), 1);
    assert_eq!(code(&wordtree(&["validate"], dir.path())), 1);
    std::fs::write(dir.path().join("bad.toml"), "[train]\nlearning_rate = 1\n").unwrap();
    let o = wordtree(&["train", "--config", "bad.toml", "--train", "train.wist", "--out", "m.bin"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("learning_rate"));
}

#[test]
fn data_errors_exit_two_and_name_the_entry() {
    let dir = workdir();
    let np = "1\t大\t2\tatt\n2\t衣\t0\troot\n\n1\t国\t0\troot\n2\t际\t3\tatt\n3\t化\t1\tatt\n4\t好\t2\tatt\n";
    std::fs::write(dir.path().join("np.wist"), np).unwrap();
    let o = wordtree(&["train", "--train", "np.wist", "--out", "m/x.bin"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("国际化好"), "{}", stderr(&o));
    assert!(!dir.path().join("m").exists(), "nothing written for a rejected run");

    std::fs::write(dir.path().join("broken.wist"), "1\t大\t0\troot\n2\t衣\t0\troot\n").unwrap();
    let o = wordtree(&["validate", "broken.wist"], dir.path());
    assert_eq!(code(&o), 2);
    assert_eq!(code(&wordtree(&["stats", "--tb", "missing.wist"], dir.path())), 2);
}

#[test]
fn validate_reports_nonprojective_entries() {
    let dir = workdir();
    let np = "1\t国\t0\troot\n2\t际\t3\tatt\n3\t化\t1\tatt\n4\t好\t2\tatt\n";
    std::fs::write(dir.path().join("np.wist"), np).unwrap();
    let o = wordtree(&["validate", "np.wist", "train.wist"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("non-projective: 国际化好#1"));
    assert_eq!(code(&wordtree(&["validate", "--projective", "np.wist"], dir.path())), 2);
}

#[test]
fn train_parse_eval_round_trip() {
    let dir = workdir();
    let d = dir.path();
    let o = train_tiny(d, "m/model.bin");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("best epoch"));
    for suffix in ["", ".json", ".run.toml", ".log.jsonl", ".report.json"] {
        assert!(d.join(format!("m/model.bin{suffix}")).is_file(), "{suffix}");
    }
    let log = std::fs::read_to_string(d.join("m/model.bin.log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);

    let tb = synthetic_word_treebank(12, 4, 5);
    let words: Vec<&str> = tb.iter().take(3).map(|e| e.surface.as_str()).collect();
    let mut args = vec!["parse", "--model", "m/model.bin"];
    args.extend(&words);
    let o = wordtree(&args, d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let parsed = WordTreebank::parse(&stdout(&o)).unwrap();
    let surfaces: Vec<&str> = parsed.iter().map(|e| e.surface.as_str()).collect();
    assert_eq!(surfaces, words, "order preserved");
    assert!(parsed.nonprojective.is_empty());

    std::fs::write(d.join("words.txt"), format!("{}\n\n{}\n", words[0], words[1])).unwrap();
    let o = wordtree(&["parse", "--model", "m/model.bin", "--file", "words.txt"], d);
    assert_eq!(WordTreebank::parse(&stdout(&o)).unwrap().len(), 2);

    let o = wordtree(&["parse", "--model", "m/model.bin", "大"], d);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&wordtree(&["parse", "--model", "m/model.bin"], d)), 2);

    let o = wordtree(&["eval", "--model", "m/model.bin", "--test", "train.wist", "--out", "eval.json"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(d.join("eval.json"));
    assert_eq!(r["command"], "eval");
    let (uas, las) = (r["report"]["uas"].as_f64().unwrap(), r["report"]["las"].as_f64().unwrap());
    assert!(las <= uas);
    // Training selected on the same set, so the report agrees with eval.
    let train_report = json(d.join("m/model.bin.report.json"));
    assert_eq!(train_report["report"]["dev"]["las"].as_f64().unwrap(), las);
}

#[test]
fn seeded_training_is_reproducible() {
    let dir = workdir();
    let d = dir.path();
    for out in ["a/m.bin", "b/m.bin"] {
        assert_eq!(code(&train_tiny(d, out)), 0);
    }
    for suffix in ["", ".json", ".log.jsonl"] {
        let a = std::fs::read(d.join(format!("a/m.bin{suffix}"))).unwrap();
        let b = std::fs::read(d.join(format!("b/m.bin{suffix}"))).unwrap();
        assert!(a == b, "m.bin{suffix} differs");
    }
}

#[test]
fn printed_config_loads_back() {
    let dir = workdir();
    let d = dir.path();
    let mut args = vec!["train", "--train", "train.wist", "--out", "m.bin", "--print-config", "--lr", "0.01"];
    args.extend(TINY);
    let o = wordtree(&args, d);
    assert_eq!(code(&o), 0);
    let printed = stdout(&o);
    assert!(printed.contains("lr = 0.01"));
    std::fs::write(d.join("run.toml"), &printed).unwrap();
    let again = wordtree(&["train", "--config", "run.toml", "--print-config"], d);
    assert_eq!(stdout(&again), printed);
    // Flags still win over the file.
    let o = wordtree(&["train", "--config", "run.toml", "--print-config", "--seed", "9"], d);
    assert!(stdout(&o).contains("seed = 9"));
}

#[test]
fn stats_and_agree_reports() {
    let dir = workdir();
    let d = dir.path();
    let o = wordtree(&["stats", "--tb", "train.wist", "--patterns", "--by-pos", "--out", "stats.json"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(d.join("stats.json"));
    assert_eq!(r["report"]["entries"], 12);
    let total: u64 = r["report"]["distribution"]["counts"]["overall"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(Some(total), r["report"]["distribution"]["totals"]["overall"].as_u64());
    assert_eq!(r["report"]["characters"].as_u64(), Some(total));
    assert!(r["report"]["patterns"].is_object());

    let (a, b) = wordtree_core::testing::agreement_oracle_example();
    std::fs::write(d.join("a.wist"), a.treebank.to_text()).unwrap();
    std::fs::write(d.join("b.wist"), b.treebank.to_text()).unwrap();
    let o = wordtree(&["agree", "--a", "a.wist", "--b", "b.wist", "--gold", "a.wist", "--out", "agree.json"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(d.join("agree.json"));
    let c = &r["report"]["consistency"];
    assert_eq!(
        [&c["dep_labeled"], &c["dep_unlabeled"], &c["word_labeled"], &c["word_unlabeled"]].map(|v| v.as_f64()),
        [Some(75.0), Some(100.0), Some(50.0), Some(100.0)]
    );
    assert!(r["report"]["accuracy"].is_object());
    assert_eq!(code(&wordtree(&["agree", "--a", "a.wist", "--b", "train.wist"], d)), 2);
}

#[test]
fn split_partitions_the_treebank() {
    let dir = workdir();
    let d = dir.path();
    let o = wordtree(&["split", "--tb", "train.wist", "--dev", "2", "--test", "3", "--out-dir", "parts"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let read = |n: &str| WordTreebank::parse(&std::fs::read_to_string(d.join("parts").join(n)).unwrap()).unwrap();
    let (train, dev, test) = (read("train.wist"), read("dev.wist"), read("test.wist"));
    assert_eq!((train.len(), dev.len(), test.len()), (7, 2, 3));
    let mut all: Vec<String> = [&train, &dev, &test].iter().flat_map(|t| t.iter().map(|e| e.surface.clone())).collect();
    all.sort();
    let mut orig: Vec<String> = synthetic_word_treebank(12, 4, 5).iter().map(|e| e.surface.clone()).collect();
    orig.sort();
    assert_eq!(all, orig);
    let o = wordtree(&["validate", "parts/train.wist", "parts/dev.wist", "parts/test.wist"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&wordtree(&["split", "--tb", "train.wist", "--dev", "10", "--test", "10", "--out-dir", "x"], d)), 2);
}

#[test]
fn lexicon_takes_gold_then_parsed_structures() {
    let dir = workdir();
    let d = dir.path();
    std::fs::write(d.join("words.txt"), "大衣\n常常\n").unwrap();
    std::fs::write(d.join("gold.wist"), "1\t大\t2\tatt\n2\t衣\t0\troot\n").unwrap();
    let surfaces = |o: &Output| {
        let lex = WordTreebank::parse(&stdout(o)).unwrap();
        let mut s: Vec<String> = lex.iter().map(|e| e.surface.clone()).collect();
        s.sort();
        (s, lex)
    };
    // Without a parser only annotated words are written.
    let o = wordtree(&["lexicon", "--gold", "gold.wist", "--words", "words.txt"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(surfaces(&o).0, ["大衣"]);

    assert_eq!(code(&train_tiny(d, "m.bin")), 0);
    let o = wordtree(&["lexicon", "--gold", "gold.wist", "--words", "words.txt", "--model", "m.bin"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (s, lex) = surfaces(&o);
    assert_eq!(s, ["大衣", "常常"]);
    let gold = lex.iter().find(|e| e.surface == "大衣").unwrap();
    assert_eq!(gold.tree.heads, vec![2, 0]);
    assert_eq!(code(&wordtree(&["lexicon"], d)), 1);
}
