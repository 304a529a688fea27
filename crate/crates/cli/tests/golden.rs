//! Pins CSV schemas and deterministic outputs. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p tcbench --test golden`.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tcbench(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tcbench")).args(args).current_dir(root()).output().expect("spawn tcbench");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn check(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

fn head(text: &str, n: usize) -> String {
    text.lines().take(n).map(|l| format!("{l}\n")).collect()
}

#[test]
fn simulate_freeway_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = tcbench(&["simulate", "configs/alinea_step.toml", "--out", out]);
    assert_eq!(code, 0, "{err}");
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    check("alinea_step_metrics.csv", &read("metrics.csv"));
    check("alinea_step_rates_head.csv", &head(&read("rates.csv"), 20));
    check("alinea_step_detectors_head.csv", &head(&read("detectors.csv"), 10));
    for svg in ["occupancy", "queue", "rate"] {
        let s = read(&format!("plots/{svg}.svg"));
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn simulate_urban_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = tcbench(&["simulate", "configs/mp_fixed.toml", "--seed", "3", "--out", out]);
    assert_eq!(code, 0, "{err}");
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    check("mp_fixed_decisions_head.csv", &head(&read("decisions.csv"), 22));
    check("mp_fixed_spat_head.csv", &head(&read("spat.csv"), 22));
    for id in ["I1", "I2", "I3", "I4", "I5"] {
        assert!(dir.path().join(format!("plots/spat_{id}.svg")).exists());
    }
    assert!(dir.path().join("plots/cycle.svg").exists());
}

#[test]
fn calibration_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, table, err) = tcbench(&["calibrate", "configs/alinea_step.toml", "--grid", "K_P=10,30", "--seeds", "1,2", "--out", out]);
    assert_eq!(code, 0, "{err}");
    check("calibrate_table.txt", &table);
    check("calibrate.csv", &std::fs::read_to_string(dir.path().join("calibration.csv")).unwrap());
    let (code, report, _) = tcbench(&["report", dir.path().join("runs.csv").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(report.contains("Configuration (config)") && report.contains("K_P=10"));
}

#[test]
fn summary_stats_compare() {
    let (code, text, _) = tcbench(&["compare", "--summary-stats", "13.041,2.438,20", "12.481,2.278,20"]);
    assert_eq!(code, 0);
    check("compare_summary.txt", &text);
    let (code, csv, _) = tcbench(&["--format", "csv", "compare", "--summary-stats", "13.041,2.438,20", "12.481,2.278,20"]);
    assert_eq!(code, 0);
    check("compare_summary.csv", &csv);
}

#[test]
fn paired_compare_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = tcbench(&["compare", "configs/none_freeway.toml", "configs/alinea.toml", "--seeds", "20", "--out", out]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "seed,metric_A,metric_B,diff");
    assert_eq!(body.len(), 21);
    assert!(csv.contains("# seeds: 1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nfamily = \"freeway\"\n\n[controller]\nkind = \"mp_fixed\"\n").unwrap();
    let (code, _, err) = tcbench(&["simulate", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.toml:5:") && err.contains("mp_fixed") && err.contains("freeway"), "{err}");

    std::fs::write(&bad, "[scenario]\nfamily = \"freeway\"\n[controller]\nkind = \"alinea\"\n[controller.params]\nK_Q = 1\n").unwrap();
    let (code, _, err) = tcbench(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.toml:6:"), "{err}");

    let (code, _, _) = tcbench(&["--strict", "compare", "--summary-stats", "1,0,5", "1,0,5"]);
    assert_eq!(code, 3);
    let (code, _, _) = tcbench(&["compare", "--summary-stats", "1,0,5", "1,0,5"]);
    assert_eq!(code, 0);
    let (code, _, _) = tcbench(&["report", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn uncontrolled_freeway_keeps_meters_open() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = tcbench(&["simulate", "configs/none_freeway.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let rows: Vec<&str> = rates.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("100")));
}

#[test]
fn json_config_matches_toml() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("alinea_step.json");
    std::fs::write(
        &json,
        r#"{
  "scenario": { "family": "freeway", "preset": "single_ramp_step" },
  "controller": { "kind": "alinea", "params": { "target_occupancy": 10, "K_P": 30, "K_I": 0,
    "cycle_duration": 60, "measurement_period": 120, "min_rate": 5, "max_rate": 100 } },
  "seeds": { "list": [1] }
}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(tcbench(&["simulate", json.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(tcbench(&["simulate", "configs/alinea_step.toml", "--out", b.to_str().unwrap()]).0, 0);
    let m = |d: &Path| std::fs::read_to_string(d.join("metrics.csv")).unwrap();
    assert_eq!(m(&a), m(&b));
}
