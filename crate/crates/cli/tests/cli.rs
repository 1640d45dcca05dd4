//! End-to-end tests of the batch front-end: output files, determinism, and
//! the exit-code contract (0 success, 2 config error, 3 infeasible,
//! 4 validation failure).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nanofringe")
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).current_dir(repo_root()).output().expect("spawn")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("nanofringe-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn strip_timestamp(json: &str) -> String {
    json.lines().filter(|l| !l.contains("timestamp_unix_s")).collect::<Vec<_>>().join("\n")
}

#[test]
fn case_study_outputs_and_determinism() {
    let out1 = tmp_dir("case1");
    let out2 = tmp_dir("case2");
    for out in [&out1, &out2] {
        let r = run(&[
            "case-study",
            "--config",
            "configs/case_study.conf",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    }
    let rec1 = std::fs::read_to_string(out1.join("record.json")).unwrap();
    let rec2 = std::fs::read_to_string(out2.join("record.json")).unwrap();
    // bit-identical records modulo the timestamp
    assert_eq!(strip_timestamp(&rec1), strip_timestamp(&rec2));

    let parsed: serde_json::Value = serde_json::from_str(&rec1).unwrap();
    let q = parsed["metrics"]["quality"].as_f64().unwrap();
    assert!((q - 0.005).abs() < 0.1 * 0.005, "v^2 p_r = {q}");
    // conditional flags present (black-body table in use)
    assert!(!parsed["conditional_flags"].as_array().unwrap().is_empty());

    // pattern CSVs are self-describing
    for name in ["pattern_unitary.csv", "pattern_decohered.csv"] {
        let csv = std::fs::read_to_string(out1.join(name)).unwrap();
        assert!(csv.starts_with('#'), "{name} lacks header comments");
        assert!(csv.contains("x [m]"));
        assert!(csv.lines().count() > 100);
    }
    // thermal history written when the table is configured
    assert!(out1.join("thermal_history.csv").exists());
    let _ = std::fs::remove_dir_all(&out1);
    let _ = std::fs::remove_dir_all(&out2);
}

#[test]
fn config_errors_exit_2_and_list_problems() {
    let dir = tmp_dir("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "radius_nm = -2\nbogus_key = 1\n").unwrap();
    let r = run(&["case-study", "--config", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bogus_key"), "stderr: {err}");
    assert!(err.contains("radius_nm"), "stderr: {err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn infeasible_quality_target_exits_3() {
    let dir = tmp_dir("infeasible");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("impossible.conf");
    // quality above anything a fringe pattern can reach
    std::fs::write(
        &cfg,
        "q_target = 0.5\ntau_f_ms = 350\ncontour_points = 10\nomega2_khz = 1.66\n\
         phi2_pi = 0.225\n",
    )
    .unwrap();
    let r = run(&[
        "optimize-splitting",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn undersized_oracle_grid_exits_2() {
    let dir = tmp_dir("grid");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("small_grid.conf");
    std::fs::write(&cfg, "oracle_grid_n = 1024\n").unwrap();
    let r = run(&[
        "oracle-validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("grid insufficient"), "stderr: {err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn corrupted_fringe_scale_fails_validation_with_exit_4() {
    let dir = tmp_dir("corrupt");
    let r = run(&[
        "oracle-validate",
        "--corrupt-delta-x",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(4), "stdout: {}", String::from_utf8_lossy(&r.stdout));
    let out = String::from_utf8_lossy(&r.stdout);
    assert!(out.contains("FAIL randomized-protocol-L1"), "stdout: {out}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn vacuous_sweep_yields_empty_table() {
    let dir = tmp_dir("vacuous");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("empty.conf");
    std::fs::write(&cfg, "sweep_radius_nm =\ncontour_points = 10\n").unwrap();
    let r = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    // header comments and column row only, no data rows
    let data_rows =
        csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("radius_nm")).count();
    assert_eq!(data_rows, 0, "csv: {csv}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn pressure_requirement_reproduces_reference() {
    let dir = tmp_dir("pressure");
    let r = run(&[
        "pressure-requirement",
        "--config",
        "configs/case_study.conf",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("pressure.json")).unwrap())
            .unwrap();
    let p = rec["required_pressure_mbar"].as_f64().unwrap();
    assert!((p - 1.4e-10).abs() / 1.4e-10 < 0.05, "P_0.9 = {p}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn thermal_requires_table() {
    let dir = tmp_dir("thermal");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("no_table.conf");
    std::fs::write(&cfg, "radius_nm = 50\n").unwrap();
    let r = run(&["thermal", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    // with the shipped table the reference steady states come out
    let r = run(&[
        "thermal",
        "--config",
        "configs/case_study.conf",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("thermal.json")).unwrap()).unwrap();
    assert!((rec["t_ss_full_power_k"].as_f64().unwrap() - 329.0).abs() < 1.0);
    assert!((rec["t_steady_k"].as_f64().unwrap() - 315.2).abs() < 1.0);
    assert!(Path::new(&dir.join("thermal_history.csv")).exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn splitting_command_reproduces_reference_point() {
    let dir = tmp_dir("split");
    let r = run(&[
        "optimize-splitting",
        "--config",
        "configs/splitting.conf",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("splitting.json")).unwrap())
            .unwrap();
    let tau1_ms = rec["result"]["tau1"].as_f64().unwrap() * 1e3;
    assert!((tau1_ms - 0.92).abs() / 0.92 < 0.15, "tau1 = {tau1_ms} ms");
    let g1 = rec["result"]["g1_peaks"].as_f64().unwrap();
    assert!(g1 >= 0.95);
    let _ = std::fs::remove_dir_all(&dir);
}
