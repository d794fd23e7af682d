use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn asrnoise(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asrnoise"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = asrnoise(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small_synth(dir: &Path) {
    ok(
        dir,
        &[
            "make-synth", "--out-dir", "d", "--pair-sentences", "300", "--train-size", "120",
            "--dev-size", "10", "--test-size", "60",
        ],
    );
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = asrnoise(dir.path(), &[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_invocations_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&asrnoise(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&asrnoise(dir.path(), &["per", "--orig", "only one side"])), 1);
    assert_eq!(code(&asrnoise(dir.path(), &["per", "--seed", "x", "--input", "a"])), 1);
    fs::write(dir.path().join("in.jsonl"), "{\"text\":\"hi there\"}\n").unwrap();
    let out = asrnoise(dir.path(), &["augment", "--method", "zzz", "in.jsonl", "out.jsonl"]);
    assert_eq!(code(&out), 1);
    let out = asrnoise(dir.path(), &["augment", "--method", "ss", "in.jsonl", "out.jsonl"]);
    assert_eq!(code(&out), 1, "ss without a table");
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&asrnoise(dir.path(), &["--help"])), 0);
    assert_eq!(code(&asrnoise(dir.path(), &["augment", "--help"])), 0);
}

#[test]
fn per_of_a_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["per", "--orig", "The priest tied the knot.", "--gen", "The priest told the knot."],
    );
    assert_eq!(out.trim(), "0.1333");
}

#[test]
fn per_over_a_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pairs.jsonl"),
        "{\"original\":\"The priest tied the knot.\",\"generated\":\"The priest told the knot.\"}\n\
         {\"original\":\"turn on the lights\",\"generated\":\"Turn on the lights!\"}\n",
    )
    .unwrap();
    let out = ok(dir.path(), &["per", "--input", "pairs.jsonl"]);
    let pers: Vec<f64> = out
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["per"].as_f64().unwrap())
        .collect();
    assert_eq!(pers.len(), 2);
    assert!((pers[0] - 2.0 / 15.0).abs() < 1e-12);
    assert_eq!(pers[1], 0.0);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&asrnoise(dir.path(), &["per", "--input", "missing.jsonl"])), 2);
    fs::write(dir.path().join("bad.jsonl"), "{\"text\": 1}\n").unwrap();
    assert_eq!(code(&asrnoise(dir.path(), &["train-slu", "--train", "bad.jsonl", "--out", "m.json"])), 2);
    let out = asrnoise(dir.path(), &["augment", "--method", "eda", "bad.jsonl", "out.jsonl"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn substitution_pipeline_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_synth(dir);
    for f in ["refs", "hyps", "pairs", "train", "dev", "test", "test-noisy"] {
        assert!(dir.join(format!("d/{f}.jsonl")).exists(), "{f}");
    }
    ok(dir, &["collect-pairs", "--refs", "d/refs.jsonl", "--hyps", "d/hyps.jsonl", "--out", "p.jsonl"]);
    assert_eq!(fs::read(dir.join("p.jsonl")).unwrap(), fs::read(dir.join("d/pairs.jsonl")).unwrap());
    ok(dir, &["extract-confusions", "--pairs", "p.jsonl", "--out", "ss.tsv"]);
    assert!(!fs::read_to_string(dir.join("ss.tsv")).unwrap().trim().is_empty());

    let run = |out: &str, jobs: &str| {
        ok(
            dir,
            &[
                "augment", "--method", "ss", "--table", "ss.tsv", "--n-aug", "2", "--seed", "9",
                "--jobs", jobs, "d/train.jsonl", out,
            ],
        );
        fs::read_to_string(dir.join(out)).unwrap()
    };
    let a = run("a.jsonl", "1");
    let b = run("b.jsonl", "3");
    assert_eq!(a, b);
    // Each source line is followed by its two kept samples.
    assert_eq!(a.lines().count(), 120 * 3);
    let c = run("c.jsonl", "1");
    assert_eq!(a, c);
}

#[test]
fn rs_table_and_augmentation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["build-rs-table", "--out", "rs.tsv", "--max-phone-edit", "2"]);
    let table = fs::read_to_string(dir.join("rs.tsv")).unwrap();
    assert!(table.lines().all(|l| l.split('\t').count() == 3));
    fs::write(dir.join("in.jsonl"), "{\"text\":\"turn on the lights\"}\n").unwrap();
    ok(dir, &["augment", "--method", "rs", "--table", "rs.tsv", "--prop", "1.0", "in.jsonl", "o.jsonl"]);
    let lines: Vec<serde_json::Value> = fs::read_to_string(dir.join("o.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["method"], "rs");
    assert!(lines[1]["per"].as_f64().unwrap() <= 1.0);
}

#[test]
fn noise_model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_synth(dir);
    ok(
        dir,
        &[
            "train-ngm", "--pairs", "d/pairs.jsonl", "--out", "ngm.json", "--report", "r.json",
            "--steps", "20", "--layers", "1", "--d-model", "16", "--heads", "2", "--d-ff", "32",
            "--context", "40",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert!(report.is_object());
    let gen = |seed: &str| ok(dir, &["generate", "--model", "ngm.json", "--text", "turn on the lights", "-n", "3", "--seed", seed]);
    let first = gen("4");
    assert_eq!(first.lines().count(), 3);
    assert_eq!(first, gen("4"));
    ok(dir, &["augment", "--method", "ngm", "--model", "ngm.json", "--per-threshold", "inf", "d/train.jsonl", "o.jsonl", "--samples", "s.jsonl"]);
    assert_eq!(fs::read_to_string(dir.join("s.jsonl")).unwrap().lines().count(), 120 * 5);
}

#[test]
fn classifier_train_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_synth(dir);
    for mode in ["softmax", "one-vs-all"] {
        ok(dir, &["train-slu", "--train", "d/train.jsonl", "--out", "m.json", "--mode", mode]);
        ok(dir, &["eval-slu", "--model", "m.json", "--test", "d/test.jsonl", "--out", "e.json"]);
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("e.json")).unwrap()).unwrap();
        assert_eq!(m["examples"], 60);
        assert!(m["accuracy"].as_f64().unwrap() > 0.8, "{mode}: {m}");
        assert!(m["f1"].as_f64().unwrap() >= m["accuracy"].as_f64().unwrap());
    }
}

#[test]
fn config_file_supplies_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("in.jsonl"), "{\"text\":\"turn on the kitchen lights now please\"}\n").unwrap();
    fs::write(dir.join("a.conf"), "# eda run\nmethod = eda\nn_aug = 3\nseed = 5\n").unwrap();
    ok(dir, &["--config", "a.conf", "augment", "in.jsonl", "o1.jsonl"]);
    ok(dir, &["augment", "--method", "eda", "--n-aug", "3", "--seed", "5", "in.jsonl", "o2.jsonl"]);
    let o1 = fs::read_to_string(dir.join("o1.jsonl")).unwrap();
    assert_eq!(o1.lines().count(), 4);
    assert_eq!(o1, fs::read_to_string(dir.join("o2.jsonl")).unwrap());
    ok(dir, &["--config", "a.conf", "augment", "--n-aug", "1", "in.jsonl", "o3.jsonl"]);
    assert_eq!(fs::read_to_string(dir.join("o3.jsonl")).unwrap().lines().count(), 2);

    fs::write(dir.join("dup.conf"), "seed = 1\nseed = 2\n").unwrap();
    assert_eq!(code(&asrnoise(dir, &["--config", "dup.conf", "augment", "in.jsonl", "x.jsonl"])), 1);
    fs::write(dir.join("bad.conf"), "n_aug = lots\nmethod = eda\n").unwrap();
    assert_eq!(code(&asrnoise(dir, &["--config", "bad.conf", "augment", "in.jsonl", "x.jsonl"])), 1);
}

#[test]
fn tiny_benchmark_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ok(
        dir,
        &[
            "benchmark", "--out-dir", "b", "--repeats", "1", "--steps", "10", "--n-aug", "1",
            "--pair-sentences", "200", "--train-size", "80", "--dev-size", "5", "--test-size", "40",
        ],
    );
    assert!(out.contains("+NGM"));
    assert_eq!(fs::read_to_string(dir.join("b/table.txt")).unwrap(), out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("b/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["repeats"], 1);
}
