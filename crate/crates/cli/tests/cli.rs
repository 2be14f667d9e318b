use std::path::Path;
use std::process::{Command, Output};

fn matcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matcomp")).args(args).env_remove("MC_PROFILE").output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn synth_and_observe(dir: &Path, p: &str) {
    ok(&matcomp(&["synth", "--m", "64", "--n", "64", "--rstar", "2", "--seed", "3", "--out", path(&dir.join("inst"))]));
    ok(&matcomp(&[
        "observe",
        "--instance",
        path(&dir.join("inst")),
        "--p",
        p,
        "--seed",
        "4",
        "--out",
        path(&dir.join("obs.csv")),
    ]));
}

fn complete(dir: &Path, tag: &str) -> Output {
    matcomp(&[
        "complete",
        "--obs",
        path(&dir.join("obs.csv")),
        "--rstar",
        "2",
        "--alpha",
        "0.1",
        "--beta",
        "0.333",
        "--delta-noise",
        "1e-9",
        "--truth",
        path(&dir.join("inst")),
        "--seed",
        "5",
        "--out",
        path(&dir.join(format!("{tag}.fac"))),
        "--report",
        path(&dir.join(format!("{tag}.json"))),
    ])
}

#[test]
fn synth_observe_complete_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth_and_observe(dir.path(), "0.8");
    for f in ["truth.dmat", "truth.fac", "noise.dmat", "meta.json"] {
        assert!(dir.path().join("inst").join(f).exists(), "{f}");
    }
    ok(&complete(dir.path(), "a"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    let err = report["fro_error_vs_truth"].as_f64().unwrap();
    assert!(err <= 1e-6, "{err}");
    assert_eq!(report["output_rank"], 2);
}

#[test]
fn completion_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    synth_and_observe(dir.path(), "0.8");
    ok(&complete(dir.path(), "a"));
    ok(&complete(dir.path(), "b"));
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.fac"), read("b.fac"));
    assert_eq!(read("a.json"), read("b.json"));
}

#[test]
fn single_cell_bench_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("out").join("bench");
    ok(&matcomp(&["bench", "--n", "32", "--rstar", "1", "--p", "0.8", "--out", path(&prefix)]));
    let csv = std::fs::read_to_string(dir.path().join("out/bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("schema,cell,"));
    let jsonl = std::fs::read_to_string(dir.path().join("out/bench.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(jsonl.trim()).unwrap();
    assert_eq!(row["schema"], "mcbench-v1");
    assert_eq!(row["status"], "ok");
    assert!(row["runtime_ms"].is_null());
    assert!(dir.path().join("out/bench.config.json").exists());
}

#[test]
fn bench_without_timing_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let prefix = dir.path().join(name);
        ok(&matcomp(&["bench", "--n", "24", "--rstar", "1", "--p", "0.8", "--reps", "2", "--out", path(&prefix)]));
        std::fs::read(dir.path().join(format!("{name}.csv"))).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(matcomp(&["bogus"]).status.code(), Some(1));
}

#[test]
fn precondition_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    synth_and_observe(dir.path(), "0.8");
    let out = matcomp(&[
        "complete",
        "--obs",
        path(&dir.path().join("obs.csv")),
        "--rstar",
        "2",
        "--alpha",
        "1.5",
        "--beta",
        "0.333",
        "--delta-noise",
        "1e-9",
        "--out",
        path(&dir.path().join("x.fac")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_environment_variable_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("bench");
    let out = Command::new(env!("CARGO_BIN_EXE_matcomp"))
        .args(["bench", "--n", "16", "--rstar", "1", "--profile", "desk", "--out", path(&prefix)])
        .env("MC_PROFILE", "paper")
        .output()
        .unwrap();
    ok(&out);
    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.config.json")).unwrap()).unwrap();
    assert_eq!(config["constants"]["profile"], "paper");
}

#[test]
fn regularity_check_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&matcomp(&["synth", "--m", "32", "--n", "32", "--rstar", "2", "--seed", "1", "--out", path(&dir.path().join("inst"))]));
    let truth: matcomp::Factorization64 = matcomp::io::load_factorization(&dir.path().join("inst/truth.fac")).unwrap();
    matcomp::io::save_matrix(&dir.path().join("u.dmat"), &truth.u).unwrap();
    let out = matcomp(&[
        "check-regularity",
        "--basis",
        path(&dir.path().join("u.dmat")),
        "--orthonormalize",
        "--alpha",
        "0.1",
        "--beta",
        "0.1",
    ]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["verdict"].is_boolean());
}
