//! End-to-end behaviour of the `cofusion` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cofusion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A small synthetic cohort plus a three-repetition split file.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("data");
        ok(&[
            "synth",
            "--patients",
            "36",
            "--genes",
            "24",
            "--causal",
            "6",
            "--image-dim",
            "12",
            "--seed",
            "5",
            "--write-risk",
            "--out",
            s(&data),
        ]);
        ok(&[
            "splits",
            "--clinical",
            s(&data.join("clinical.csv")),
            "--reps",
            "3",
            "--seed",
            "2",
            "--out",
            s(&root.join("splits.json")),
        ]);
        Fixture { _dir: dir, root }
    }

    fn data(&self, name: &str) -> PathBuf {
        self.root.join("data").join(name)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn train(&self, out: &str, extra: &[&str]) -> PathBuf {
        let dir = self.path(out);
        let data = self.root.join("data");
        let edges = self.data("edges.tsv");
        let splits = self.path("splits.json");
        let mut args =
            vec!["train", "--data-dir", s(&data), "--edge-list", s(&edges), "--splits", s(&splits), "--out", s(&dir)];
        args.extend_from_slice(extra);
        ok(&args);
        dir
    }
}

fn checksums(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_writes_four_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "synth",
            "--patients",
            "30",
            "--genes",
            "20",
            "--causal",
            "4",
            "--image-dim",
            "8",
            "--seed",
            "7",
            "--out",
            s(d),
        ]);
    }
    let files = checksums(&a);
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["clinical.csv", "edges.tsv", "embedding.csv", "expression.csv"]);
    assert_eq!(files, checksums(&b));
}

#[test]
fn synth_without_censoring_has_no_censored_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--patients",
        "30",
        "--genes",
        "20",
        "--causal",
        "4",
        "--censor",
        "0",
        "--image-dim",
        "4",
        "--out",
        s(dir.path()),
    ]);
    let text = fs::read_to_string(dir.path().join("clinical.csv")).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(3), Some("1"), "{line}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["synth", "--genes", "20", "--out", s(dir.path())]), 2);
    assert_eq!(code(&["synth", "--patients", "20", "--genes", "10", "--causal", "11", "--out", s(dir.path())]), 2);
    assert_eq!(code(&["synth", "--patients", "20", "--genes", "10"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn splits_defaults_flags_and_failures() {
    let f = Fixture::new();
    let clinical = f.data("clinical.csv");
    let (a, b) = (f.path("a.json"), f.path("b.json"));
    for p in [&a, &b] {
        ok(&["splits", "--clinical", s(&clinical), "--seed", "9", "--out", s(p)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let set = json(&a);
    assert_eq!(set["repetitions"].as_array().unwrap().len(), 15);
    assert_eq!(set["train_frac"], 0.8);
    assert_eq!(set["grouping"], "patient");

    let bad = f.path("bad.json");
    assert_eq!(code(&["splits", "--clinical", s(&clinical), "--train-frac", "1.5", "--out", s(&bad)]), 2);
    assert_eq!(code(&["splits", "--clinical", s(&clinical), "--group", "ward", "--out", s(&bad)]), 2);
    assert_eq!(code(&["splits", "--clinical", s(&f.path("missing.csv")), "--out", s(&bad)]), 1);
    assert!(!bad.exists());
}

#[test]
fn train_echoes_presets_and_is_reproducible() {
    let f = Fixture::new();
    let a = f.train("a", &["--seed", "3"]);
    let summary = json(&a.join("train_summary.json"));
    assert_eq!(summary["preset"], "mmmt-default");
    assert_eq!(summary["epochs"], 30);
    assert_eq!(summary["lr"], 0.0001);
    assert_eq!(summary["weight_decay"], 0.0004);
    assert_eq!(summary["batch_size"], 32);
    assert_eq!(summary["schedule"], "alternate");
    let (sv, gr) = (summary["survival_iterations"].as_i64().unwrap(), summary["grade_iterations"].as_i64().unwrap());
    assert!((sv - gr).abs() <= 1);
    for file in ["run_config.json", "history.csv", "standardizer.json", "metrics.json", "checkpoint/manifest.json"] {
        assert!(a.join(file).exists(), "{file}");
    }

    let b = f.train("b", &["--seed", "3"]);
    assert_eq!(checksums(&a.join("checkpoint")), checksums(&b.join("checkpoint")));
    assert_eq!(fs::read(a.join("metrics.json")).unwrap(), fs::read(b.join("metrics.json")).unwrap());

    let g =
        f.train("g", &["--variant", "gene-only", "--preset", "smst-gene", "--schedule", "grade-only", "--epochs", "2"]);
    let summary = json(&g.join("train_summary.json"));
    assert_eq!(summary["lr"], 0.002);
    assert_eq!(summary["weight_decay"], 0.0005);
    assert_eq!(summary["batch_size"], 64);
    assert_eq!(summary["survival_iterations"], 0);
}

#[test]
fn train_config_file_is_overridden_by_flags() {
    let f = Fixture::new();
    let cfg = f.path("run.json");
    let text = serde_json::json!({
        "variant": "image-only",
        "epochs": 4,
        "lr": 0.01,
        "data_dir": f.root.join("data"),
        "splits": f.path("splits.json"),
        "rep": 1,
    });
    fs::write(&cfg, text.to_string()).unwrap();
    let out = f.path("cfg");
    ok(&["train", "--config", s(&cfg), "--epochs", "2", "--out", s(&out)]);
    let summary = json(&out.join("train_summary.json"));
    assert_eq!(summary["epochs"], 2);
    assert_eq!(summary["lr"], 0.01);
    assert_eq!(summary["rep"], 1);
    assert_eq!(summary["variant"], "image-only");
    let resolved = json(&out.join("run_config.json"));
    assert!(Path::new(resolved["clinical"].as_str().unwrap()).is_absolute());
    assert!(resolved["expression"].is_null());

    fs::write(&cfg, r#"{"epochz": 2}"#).unwrap();
    assert_eq!(code(&["train", "--config", s(&cfg), "--out", s(&out)]), 2);
}

#[test]
fn train_rejects_bad_configurations_before_training() {
    let f = Fixture::new();
    let out = f.path("bad");
    let data = f.root.join("data");
    let splits = f.path("splits.json");
    let base = ["train", "--data-dir", s(&data), "--splits", s(&splits), "--out", s(&out)];
    let with = |extra: &[&str]| -> i32 {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        code(&v)
    };
    // Gene variants need the edge list.
    assert_eq!(with(&["--variant", "gene-only"]), 2);
    assert_eq!(with(&["--variant", "image-only", "--rep", "9"]), 2);
    assert_eq!(with(&["--variant", "image-only", "--schedule", "sideways"]), 2);
    assert_eq!(with(&["--variant", "image-only", "--preset", "huge"]), 2);
    assert_eq!(with(&["--variant", "image-only", "--dropout", "1.5"]), 2);
    assert!(!out.join("checkpoint").exists());
}

#[test]
fn all_reps_writes_subdirectories_and_aggregate() {
    let f = Fixture::new();
    let out = f.train("all", &["--variant", "image-only", "--epochs", "1", "--all-reps"]);
    for rep in 0..3 {
        assert!(out.join(format!("rep_{rep:02}/metrics.json")).exists());
    }
    let agg = json(&out.join("aggregate.json"));
    assert_eq!(agg["repetitions"], 3);
    let cs: Vec<f64> =
        (0..3).map(|r| json(&out.join(format!("rep_{r:02}/metrics.json")))["c_index"].as_f64().unwrap()).collect();
    let mean = cs.iter().sum::<f64>() / 3.0;
    assert!((agg["c_index"]["mean"].as_f64().unwrap() - mean).abs() < 1e-12);
}

#[test]
fn validation_holdout_keeps_a_best_checkpoint() {
    let f = Fixture::new();
    let out = f.train("val", &["--variant", "image-only", "--epochs", "3", "--validation-frac", "0.25"]);
    assert!(out.join("best/manifest.json").exists());
    let summary = json(&out.join("train_summary.json"));
    assert!(summary["n_validation"].as_u64().unwrap() > 0);
    assert!(summary["best_epoch"].is_u64());
}

#[test]
fn eval_reproduces_training_metrics_and_checks_heads() {
    let f = Fixture::new();
    let both = f.train("both", &["--epochs", "2"]);
    let report = f.path("eval.json");
    ok(&["eval", "--model", s(&both), "--out", s(&report)]);
    assert_eq!(fs::read(&report).unwrap(), fs::read(both.join("metrics.json")).unwrap());
    let r = json(&report);
    for key in ["c_index", "micro_auc", "micro_ap", "micro_f1", "accuracy", "f1_per_class"] {
        assert!(!r[key].is_null(), "{key}");
    }

    let grade = f.train("grade", &["--schedule", "grade-only", "--epochs", "1"]);
    let out = ok(&["eval", "--model", s(&grade)]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["c_index"].is_null());
    assert!(!r["micro_f1"].is_null());
    assert_eq!(code(&["eval", "--model", s(&grade), "--metrics", "survival"]), 2);
    assert_eq!(code(&["eval", "--model", s(&grade), "--metrics", "everything"]), 2);
    assert_eq!(code(&["eval", "--model", s(&f.path("nowhere"))]), 2);
}

#[test]
fn eval_risk_bypass_matches_direct_metrics() {
    use cofusion::surveval::{c_index, TieRule};
    let f = Fixture::new();
    let out = ok(&[
        "eval",
        "--risks",
        s(&f.data("true_risk.csv")),
        "--clinical",
        s(&f.data("clinical.csv")),
        "--split",
        s(&f.path("splits.json")),
        "--rep",
        "2",
    ]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();

    let split = json(&f.path("splits.json"));
    let test: Vec<&str> =
        split["repetitions"][2]["test"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let clinical = fs::read_to_string(f.data("clinical.csv")).unwrap();
    let risks = fs::read_to_string(f.data("true_risk.csv")).unwrap();
    let risk_of =
        |id: &str| -> f64 { risks.lines().find_map(|l| l.strip_prefix(&format!("{id},"))).unwrap().parse().unwrap() };
    let (mut rs, mut ts, mut es) = (Vec::new(), Vec::new(), Vec::new());
    for id in &test {
        let row: Vec<&str> = clinical.lines().find(|l| l.starts_with(&format!("{id},"))).unwrap().split(',').collect();
        rs.push(risk_of(id));
        ts.push(row[2].parse::<f64>().unwrap());
        es.push(row[3] == "1");
    }
    let direct = c_index(&rs, &ts, &es, TieRule::Half).unwrap();
    assert_eq!(r["c_index"].as_f64().unwrap(), direct);
    assert_eq!(r["n_samples"], test.len());
    assert!(r["micro_f1"].is_null());

    assert_eq!(code(&["eval", "--risks", s(&f.data("true_risk.csv"))]), 2);
    assert_eq!(
        code(&[
            "eval",
            "--risks",
            s(&f.data("true_risk.csv")),
            "--clinical",
            s(&f.data("clinical.csv")),
            "--metrics",
            "grade"
        ]),
        2
    );
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Clinical and risk files for `(time, event, risk)` rows.
fn km_inputs(dir: &Path, rows: &[(f64, u8, f64)]) -> (PathBuf, PathBuf) {
    let mut clinical = String::from("sample_id,patient_id,time_days,event,grade\n");
    let mut risks = String::from("sample_id,risk\n");
    for (i, (t, e, r)) in rows.iter().enumerate() {
        clinical.push_str(&format!("S{i},P{i},{t},{e},0\n"));
        risks.push_str(&format!("S{i},{r}\n"));
    }
    (write(dir, "clinical.csv", &clinical), write(dir, "risks.csv", &risks))
}

fn km_rows(csv: &str, group: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .filter(|l| l.starts_with(&format!("{group},")))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn km_groups_monotone_risks_into_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(f64, u8, f64)> = (0..9).map(|i| (10.0 + i as f64, 1, i as f64)).collect();
    let (clinical, risks) = km_inputs(dir.path(), &rows);
    let out = dir.path().join("km.csv");
    let svg = dir.path().join("km.svg");
    ok(&["km", "--risks", s(&risks), "--clinical", s(&clinical), "--out", s(&out), "--svg", s(&svg)]);
    let text = fs::read_to_string(&out).unwrap();
    for g in ["Low", "Mid", "High"] {
        assert!(text.contains(&format!("{g},0,1,3,0")), "{text}");
        assert_eq!(km_rows(&text, g).last().unwrap().1, 0.0);
    }
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn km_without_events_stays_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(f64, u8, f64)> = (0..9).map(|i| (5.0 * (i + 1) as f64, 0, (i * 7 % 9) as f64)).collect();
    let (clinical, risks) = km_inputs(dir.path(), &rows);
    let out = dir.path().join("km.csv");
    ok(&["km", "--risks", s(&risks), "--clinical", s(&clinical), "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    for g in ["Low", "Mid", "High"] {
        assert!(km_rows(&text, g).iter().all(|&(_, sv)| sv == 1.0));
    }
}

#[test]
fn km_curve_drops_to_zero_after_the_last_censoring() {
    let dir = tempfile::tempdir().unwrap();
    // Low group (lowest risks): censored at 5 and 8, death at 12 is last.
    let rows = [
        (5.0, 0, 0.1),
        (8.0, 0, 0.2),
        (12.0, 1, 0.3),
        (3.0, 1, 5.0),
        (6.0, 0, 5.1),
        (9.0, 1, 5.2),
        (2.0, 1, 9.0),
        (4.0, 1, 9.1),
        (7.0, 0, 9.2),
    ];
    let (clinical, risks) = km_inputs(dir.path(), &rows);
    let out = dir.path().join("km.csv");
    ok(&["km", "--risks", s(&risks), "--clinical", s(&clinical), "--out", s(&out)]);
    let low = km_rows(&fs::read_to_string(&out).unwrap(), "Low");
    assert_eq!(low.last().unwrap(), &(12.0, 0.0));
    assert!(low.iter().take(low.len() - 1).all(|&(_, sv)| sv == 1.0));
}

#[test]
fn km_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (clinical, risks) = km_inputs(dir.path(), &[(1.0, 1, 0.0), (2.0, 1, 1.0)]);
    let out = dir.path().join("km.csv");
    assert_eq!(code(&["km", "--risks", s(&risks), "--clinical", s(&clinical), "--out", s(&out)]), 1);

    let rows: Vec<(f64, u8, f64)> = (0..6).map(|i| (i as f64 + 1.0, 1, i as f64)).collect();
    let (clinical, _) = km_inputs(dir.path(), &rows);
    let partial = write(dir.path(), "partial.csv", "sample_id,risk\nS0,1\nS1,2\nS2,3\n");
    assert_eq!(code(&["km", "--risks", s(&partial), "--clinical", s(&clinical), "--out", s(&out)]), 1);
    assert!(!out.exists());
}
