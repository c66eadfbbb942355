use std::path::Path;
use std::process::{Command, Output};

use tinyquant::pipeline::{PlanReport, RunReport};

fn tinyquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tinyquant")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth_bench(dir: &Path, seed: &str) {
    let o = Command::new(env!("CARGO_BIN_EXE_tinyquant"))
        .args(["synth", "--out", dir.to_str().unwrap()])
        .env("TINYQUANT_SEED", seed)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn compile(bench: &Path, out: &Path, extra: &[&str]) -> Output {
    let p = |f: &str| bench.join(f).to_str().unwrap().to_owned();
    let (model, weights, data) = (p("model.tq"), p("weights.json"), p("data.json"));
    let mut args =
        vec!["compile", "--model", &model, "--weights", &weights, "--data", &data, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tinyquant(&args)
}

#[test]
fn demo_prints_walkthrough() {
    let o = tinyquant(&["demo"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("promotion order: t2, t1, X1, B1, W1"));
    assert!(text.contains("RAM exact       3 bytes"));
}

#[test]
fn demo_over_budget_exits_two() {
    let o = tinyquant(&["demo", "--mem-limit", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn plan_fragmentation_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    std::fs::write(
        &trace,
        r#"{"ranges": [
            {"name": "A", "size": 64, "start": 0, "end": 2},
            {"name": "B", "size": 64, "start": 0, "end": 4},
            {"name": "C", "size": 64, "start": 0, "end": 2},
            {"name": "D", "size": 64, "start": 0, "end": 4},
            {"name": "E", "size": 128, "start": 3, "end": 4}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tinyquant(&["plan", trace.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report: PlanReport = serde_json::from_str(&std::fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    assert_eq!((report.first_fit_peak, report.peak, report.optimal), (384, 256, true));
}

#[test]
fn plan_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    std::fs::write(&trace, "[]").unwrap();
    let o = tinyquant(&["plan", trace.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("peak 0 bytes"));
}

#[test]
fn compile_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench");
    synth_bench(&bench, "11");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = compile(&bench, out, &["--rep", "fixed", "--mem-limit", "64"]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["report.json", "ledger.jsonl", "memory_map.json", "memory_map.txt", "model.c", "trace.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert!(report.exact_ram_bytes.unwrap() <= report.first_fit_ram_bytes);
    assert_eq!(report.c_scratch_bytes, Some(report.ram_bytes));
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("timings.json")).unwrap()).unwrap();
    assert!(timings.get("explore").is_some());
}

#[test]
fn soft_limit_bounds_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench");
    synth_bench(&bench, "23");
    let out = dir.path().join("out");
    let o = compile(&bench, &out, &["--mem-limit", "40", "--soft-limit", "1.1"]);
    let ledger = std::fs::read_to_string(out.join("ledger.jsonl")).unwrap();
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    if report.feasible {
        assert_eq!(o.status.code(), Some(0));
        for line in ledger.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["planned_ram_bytes"].as_f64().unwrap() <= 44.0, "{line}");
        }
    } else {
        assert_eq!(o.status.code(), Some(2));
    }
}

#[test]
fn missing_model_is_phase_tagged() {
    let o = tinyquant(&["compile", "--model", "/definitely/missing.tq", "--mem-limit", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("phase `load` failed"));
}

#[test]
fn seeded_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    synth_bench(&a, "99");
    synth_bench(&b, "99");
    synth_bench(&c, "100");
    let read = |d: &Path| {
        std::fs::read_to_string(d.join("model.tq")).unwrap() + &std::fs::read_to_string(d.join("weights.json")).unwrap()
    };
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn eval_reports_both_homogeneous_runs() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench");
    synth_bench(&bench, "5");
    let p = |f: &str| bench.join(f).to_str().unwrap().to_owned();
    let o = tinyquant(&[
        "eval",
        "--model",
        &p("model.tq"),
        "--weights",
        &p("weights.json"),
        "--data",
        &p("data.json"),
        "--rep",
        "fixed",
        "--integer",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("all-low") && text.contains("all-high"));
}
