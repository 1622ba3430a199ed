//! End-to-end checks of the binary surface: exit codes, config-file
//! merging, and output hygiene.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kme"))
}

fn write_sample_csv(path: &Path) {
    let mut body = String::new();
    for i in 0..20 {
        let x = (i as f64) * 0.37 - 3.0;
        body.push_str(&format!("{},{}\n", x.sin(), (x * 0.5).cos()));
    }
    std::fs::write(path, body).unwrap();
}

#[test]
fn successful_run_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .args([
            "synth-gauss",
            "--d",
            "2",
            "--n",
            "10",
            "--copies",
            "2",
            "--estimators",
            "kme",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("results.csv").exists());
    assert!(out.join("manifest.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "synth-gauss");
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_configuration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth-gauss", "--d", "2", "--n", "10", "--copies", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("copies"));

    // clap-level parse failures use the same code
    let out2 = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out2.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["estimate", "--input", "/nonexistent/data.csv", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn config_file_fills_gaps_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.conf");
    std::fs::write(
        &cfg_path,
        "# experiment defaults\nd = 2\nn = 12\ncopies = 2\nestimators = kme\nseed = 9\n",
    )
    .unwrap();

    let out_a = dir.path().join("a");
    let status = bin()
        .args(["synth-gauss", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(&out_a)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["n"], serde_json::json!([12]));

    // a flag beats the file value and changes the results
    let out_b = dir.path().join("b");
    let status = bin()
        .args(["synth-gauss", "--config"])
        .arg(&cfg_path)
        .args(["--n", "20", "--out"])
        .arg(&out_b)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest_b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_b.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest_b["config"]["n"], serde_json::json!([20]));
}

#[test]
fn inputs_are_never_modified_and_output_location_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_sample_csv(&input);
    let before = std::fs::read(&input).unwrap();

    let mut csvs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let status = bin()
            .args(["estimate", "--input"])
            .arg(&input)
            .args(["--estimators", "kme,mkme", "--seed", "3", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        csvs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "output path leaked into the results");
    assert_eq!(before, std::fs::read(&input).unwrap(), "input file changed");
}

#[test]
fn results_table_has_one_row_per_sweep_point_and_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "synth-gauss", "--d", "5", "--n", "50", "--copies", "3", "--estimators", "kme,mkme",
            "--seed", "7", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "header plus two rows:\n{csv}");
    assert!(lines[1].contains("kme"));
    assert!(lines[2].contains("mkme"));
}

#[test]
fn two_sample_manifest_carries_the_test_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let mut body_a = String::new();
    let mut body_b = String::new();
    for i in 0..15 {
        body_a.push_str(&format!("{}\n", (i as f64) * 0.1));
        body_b.push_str(&format!("{}\n", 5.0 + (i as f64) * 0.1));
    }
    std::fs::write(&a, body_a).unwrap();
    std::fs::write(&b, body_b).unwrap();

    let out = dir.path().join("out");
    let status = bin()
        .args(["two-sample", "--a"])
        .arg(&a)
        .arg("--b")
        .arg(&b)
        .args(["--perms", "100", "--alpha", "0.05", "--estimators", "kme", "--seed", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    let results = manifest["summary"]["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert!(results[0]["statistic"].as_f64().is_some());
    assert!(results[0]["p_value"].as_f64().is_some());
    assert_eq!(results[0]["rejected"], true);
}
