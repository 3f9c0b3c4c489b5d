use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_spinsearch")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &str, cfg: &Path, out: &Path, env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(bin());
    c.args([cmd, "--config"]).arg(cfg).arg("--out").arg(out);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn search_example_recovers_marked_state() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run("search", &configs().join("search.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["payload"]["recovered_s"], 5);
    assert_eq!(r["oracle_calls"], 2);
    assert!(r["max_residual"].is_number());
    assert!(out.join("timing.json").exists());
}

#[test]
fn single_qubit_search() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"n": 1, "s": 0}"#);
    let out = tmp.path().join("o");
    assert_eq!(run("search", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(report(&out)["payload"]["recovered_s"], 0);
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [r#"{"n": 3"#, r#"{"n": 3, "s": 9}"#, r#"{"n": 9, "s": 0}"#, r#"{"n": 2, "s": 0, "bogus": 1}"#] {
        let cfg = write(tmp.path(), "bad.json", text);
        let o = run("search", &cfg, &tmp.path().join("o"), &[]);
        assert_eq!(o.status.code(), Some(2), "config {text}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn missing_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("search", &tmp.path().join("none.json"), &tmp.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_phase_readout_is_ambiguous() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"n": 2, "s": 1, "theta": 0.0}"#);
    assert_eq!(run("search", &cfg, &tmp.path().join("o"), &[]).status.code(), Some(3));
}

#[test]
fn nyquist_violation_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"mode": "pipeline", "n": 2, "excitation": {"kind": "identity"},
            "hamiltonian": {"kind": "uniform-fz", "omega": 1000.0}, "dt": 0.1, "points": 32}"#,
    );
    assert_eq!(run("spectrum", &cfg, &tmp.path().join("o"), &[]).status.code(), Some(4));
}

#[test]
fn identity_pipeline_has_single_zero_order_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"mode": "pipeline", "n": 2, "excitation": {"kind": "identity"},
            "hamiltonian": {"kind": "uniform-fz", "omega": 3.0}, "dt": 0.05, "points": 64}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(run("spectrum", &cfg, &out, &[]).status.code(), Some(0));
    let peaks = report(&out)["payload"]["peaks"].as_array().unwrap().clone();
    assert_eq!(peaks.len(), 1);
    assert_eq!(peaks[0]["frequency"].as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("frequency,re,im,order\n"));
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn grover_scan_rows_and_first_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"n_values": [2], "m_range": [0, 3]}"#);
    let out = tmp.path().join("o");
    assert_eq!(run("grover-scan", &cfg, &out, &[]).status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("grover_scan.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let f = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    assert!((f(&rows[0], 15) - 1.0).abs() < 1e-12);
    let alpha: Vec<f64> = (3..7).map(|i| f(&rows[1], i)).collect();
    for (a, e) in alpha.iter().zip([-2.0, -2.0, 0.0, 4.0]) {
        assert!((a - e).abs() < 1e-12);
    }
    // 17 significant digits
    assert!(rows[1][3].contains("e"));
    assert_eq!(rows[1][3].split('e').next().unwrap().trim_start_matches('-').len(), 18);
}

#[test]
fn compose_bench_commuting_pair_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"operators": {"kind": "commuting"}, "trotter": {"t": 1.0, "m": [1, 2]}}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(run("compose-bench", &cfg, &out, &[]).status.code(), Some(0));
    let r = report(&out);
    for row in r["payload"]["rows"].as_array().unwrap() {
        assert!(row["error_norm"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn selftest_passes_and_lists_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run("selftest", &configs().join("selftest.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(&out)["payload"]["groups"].as_array().unwrap().len() >= 12);
}

#[test]
fn selftest_fails_under_shrunken_tolerances() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        "selftest",
        &configs().join("selftest.json"),
        &tmp.path().join("o"),
        &[("SPINSEARCH_TOL_SCALE", "1e-30")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("selftest failed"));
}

#[test]
fn invalid_tolerance_scale_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("selftest", &configs().join("selftest.json"), &tmp.path().join("o"), &[("SPINSEARCH_TOL_SCALE", "abc")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("spectrum_cross_peak.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("spectrum", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run("spectrum", &cfg, &b, &[]).status.code(), Some(0));
    for f in ["report.json", "timeseries.csv", "spectrum.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn log_branch_cut_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"operators": {"kind": "commuting"}, "sandwich": {"t": [3.141592653589793]}}"#,
    );
    assert_eq!(run("compose-bench", &cfg, &tmp.path().join("o"), &[]).status.code(), Some(5));
}
