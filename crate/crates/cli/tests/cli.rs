use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_impzombie"))
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--quiet").arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

/// Small corpus so full pipelines stay fast.
const SMALL: &[&str] = &[
    "--set", "synth.n_general_accounts=300",
    "--set", "synth.n_zombie_accounts=300",
    "--set", "synth.n_general_pairs=300",
    "--set", "synth.n_zombie_pairs=300",
    "--set", "synth.n_clean_pairs=600",
    "--set", "encoder.hash_dim=4096",
    "--set", "classifier.hidden=32",
    "--set", "classifier.epochs=10",
];

#[test]
fn synth_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(d.path(), &["--seed", "7", "synth"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), ["accounts.jsonl", "clean_pairs.jsonl", "config.resolved.json", "pairs.jsonl"]);
    assert_eq!(fa, fb);
    // a different seed changes the data
    let c = tempfile::tempdir().unwrap();
    run(c.path(), &["--seed", "8", "synth"]);
    assert_ne!(files(c.path())["pairs.jsonl"], fa["pairs.jsonl"]);
}

#[test]
fn empty_synth_writes_empty_files() {
    let d = tempfile::tempdir().unwrap();
    let mut args = Vec::new();
    for k in ["n_general_accounts", "n_zombie_accounts", "n_general_pairs", "n_zombie_pairs", "n_clean_pairs"] {
        args.push("--set".to_string());
        args.push(format!("synth.{k}=0"));
    }
    args.push("synth".into());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(d.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["accounts.jsonl", "pairs.jsonl", "clean_pairs.jsonl"] {
        assert_eq!(std::fs::read(d.path().join(f)).unwrap(), b"", "{f}");
    }
}

#[test]
fn invalid_rate_exits_2_naming_the_field() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--set", "synth.zombie_duplicate_rate=1.5", "synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zombie_duplicate_rate"), "{}", stderr(&o));
    assert!(!d.path().join("pairs.jsonl").exists());

    // same through a config file
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "[synth]\nzombie_emoji_rate = 1.5\n").unwrap();
    let o = bin().args(["--quiet", "--out"]).arg(d.path()).arg("--config").arg(&cfg).arg("synth").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zombie_emoji_rate"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--set", "synth.no_such_field=1", "synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_field"));
    let cfg = d.path().join("run.json");
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = bin().args(["--quiet", "--out"]).arg(d.path()).arg("--config").arg(&cfg).arg("synth").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
    let missing = d.path().join("nope.toml");
    let o = bin().args(["--quiet", "--out"]).arg(d.path()).arg("--config").arg(&missing).arg("synth").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"));
    // clap usage errors
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["synth", "--seed", "x"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_2_naming_the_path() {
    let d = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("analyze", "accounts.jsonl"),
        ("split", "pairs.jsonl"),
        ("train-encoder", "clean_pairs.jsonl"),
        ("train-classifier", "pairs.jsonl"),
        ("evaluate", "pairs.jsonl"),
        ("judge", "pairs.jsonl"),
        ("report", "report.json"),
    ] {
        let o = run(d.path(), &[cmd]);
        assert_eq!(o.status.code(), Some(2), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains(file), "{cmd}: {}", stderr(&o));
    }
    let explicit = d.path().join("elsewhere.jsonl");
    let o = bin().args(["--quiet", "--out"]).arg(d.path()).args(["analyze", "--accounts"]).arg(&explicit).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("elsewhere.jsonl"));
}

#[test]
fn missing_checkpoint_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let mut args = SMALL.to_vec();
    args.push("synth");
    assert!(run(d.path(), &args).status.success());
    assert!(run(d.path(), &["split"]).status.success());
    let o = run(d.path(), &["train-classifier"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("encoder.bin"), "{}", stderr(&o));
}

#[test]
fn http_judge_without_credential_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let mut args = SMALL.to_vec();
    args.push("synth");
    assert!(run(d.path(), &args).status.success());
    assert!(run(d.path(), &["split"]).status.success());
    let o = run(
        d.path(),
        &["--set", "judge.transport.credential_env=IMPZOMBIE_CLI_TEST_UNSET_KEY", "judge", "--backend", "http"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("IMPZOMBIE_CLI_TEST_UNSET_KEY"));
}

#[test]
fn locked_or_unwritable_output_is_a_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join(".impzombie.lock"), "123\n").unwrap();
    let o = run(d.path(), &["synth"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lock"), "{}", stderr(&o));

    let file = d.path().join("plain_file");
    std::fs::write(&file, "x").unwrap();
    let o = run(&file.join("sub"), &["synth"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("plain_file"));
}

fn pipeline(dir: &Path) {
    let mut args = SMALL.to_vec();
    args.extend(["--seed", "11", "pipeline", "--judge", "mock-overlap"]);
    let o = run(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn pipeline_is_deterministic_and_leaves_no_lock() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(!fa.contains_key(".impzombie.lock"));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name == "audit.jsonl" {
            continue; // carries wall-clock latencies
        }
        assert!(bytes == &fb[name], "{name} differs between identical runs");
    }
    // audit records agree apart from latency
    let strip = |b: &[u8]| -> Vec<serde_json::Value> {
        String::from_utf8_lossy(b)
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("latency_ms");
                v
            })
            .collect()
    };
    assert_eq!(strip(&fa["audit.jsonl"]), strip(&fb["audit.jsonl"]));

    let eval: serde_json::Value = serde_json::from_slice(&fa["eval_report.json"]).unwrap();
    let models: Vec<&str> = eval["rows"].as_array().unwrap().iter().map(|r| r["model"].as_str().unwrap()).collect();
    assert_eq!(models, ["proposed", "proposed_without_fine_tuning", "tfidf_logreg"]);
    for r in eval["rows"].as_array().unwrap() {
        assert!(r["general"]["precision"].is_number() && r["zombie"]["recall"].is_number());
    }
    let md = String::from_utf8_lossy(&fa["report.md"]);
    assert!(md.contains("| proposed |") && md.contains("llm judge"));
    let resolved: serde_json::Value = serde_json::from_slice(&fa["config.resolved.json"]).unwrap();
    assert_eq!(resolved["seed"], 11);
    assert_eq!(resolved["synth"]["n_zombie_pairs"], 300);
}

#[test]
fn stages_do_not_mutate_inputs_and_rerun_identically() {
    let d = tempfile::tempdir().unwrap();
    let mut args = SMALL.to_vec();
    args.push("synth");
    assert!(run(d.path(), &args).status.success());
    let before = files(d.path());
    for cmd in ["analyze", "split", "train-encoder", "train-classifier", "evaluate", "report"] {
        let mut a = SMALL.to_vec();
        a.push(cmd);
        let o = run(d.path(), &a);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let after = files(d.path());
    for f in ["accounts.jsonl", "pairs.jsonl", "clean_pairs.jsonl"] {
        assert!(before[f] == after[f], "{f} was modified");
    }
    // rerunning a stage over its own outputs reproduces them
    let mut a = SMALL.to_vec();
    a.push("evaluate");
    assert!(run(d.path(), &a).status.success());
    let again = files(d.path());
    for f in ["eval_report.json", "predictions.jsonl", "error_slices.json"] {
        assert!(after[f] == again[f], "{f} changed on rerun");
    }
}

/// One command per stage on the default corpus.
#[test]
fn default_pipeline_stage_by_stage_reaches_target_accuracy() {
    let d = tempfile::tempdir().unwrap();
    for cmd in ["synth", "analyze", "split", "train-encoder", "train-classifier", "evaluate", "report"] {
        let o = run(d.path(), &[cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let eval: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("eval_report.json")).unwrap()).unwrap();
    let rows = eval["rows"].as_array().unwrap();
    let acc = |m: &str| rows.iter().find(|r| r["model"] == m).unwrap()["accuracy"].as_f64().unwrap();
    assert!(acc("proposed") >= 0.90, "proposed accuracy {}", acc("proposed"));
    assert!(acc("proposed") > acc("proposed_without_fine_tuning"));

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("report.json")).unwrap()).unwrap();
    let ppd = |l: &str| report["classes"][l]["mean_posts_per_day"].as_f64().unwrap();
    assert!(ppd("zombie") > ppd("general"));
    assert!(report["t_tests"]["posts_per_day"]["p_value"].as_f64().unwrap() < 0.01);
}
