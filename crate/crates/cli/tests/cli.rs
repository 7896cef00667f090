use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_collective-ramsey"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn couplings_kernel_values() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "[couplings]\nr = [0.3, 2.0]\n", &["couplings"]);
    assert!(out.status.success());
    let r = rows(&out);
    assert_eq!(r[0], ["3.00000000000e-1", "4.13361363609e-1", "2.89103368339e-1"]);
    assert!(num(&r[1][1]).abs() < 0.12 && num(&r[1][2]).abs() < 0.12);
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for (config, cmd) in [
        ("[couplings]\nr = []\n", "couplings"),
        ("[couplings]\nr = [0.3]\nunits = \"nm\"\n", "couplings"),
        (
            "[geometry]\nkind = \"chain\"\nn = 1\nspacing = 0.3\n[sensitivity]\nschemes = [1]\ntau = [1.0]\n",
            "sensitivity",
        ),
        (
            "[geometry]\nkind = \"dicke\"\nn = 2\n[sensitivity]\nschemes = [0]\ntau = [0.0, 1.0]\n",
            "sensitivity",
        ),
        ("[geometry]\nkind = \"dicke\"\nn = 2\n", "dicke-spectrum"),
    ] {
        let out = run(dir.path(), config, &[cmd]);
        assert_eq!(out.status.code(), Some(2), "{config}");
    }
}

#[test]
fn single_atom_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let config = "[geometry]\nkind = \"chain\"\nn = 1\nspacing = 0.3\n\
                  [sensitivity]\nschemes = [0]\ntau = { start = 0.5, stop = 4.0, points = 8 }\n";
    let out = run(dir.path(), config, &["sensitivity", "--threads", "1"]);
    assert!(out.status.success());
    let r = rows(&out);
    assert_eq!(r.len(), 8);
    for row in r {
        let tau = num(&row[0]);
        let expected = (tau / 2.0).exp() / tau;
        assert!((num(&row[2]) / expected - 1.0).abs() < 1e-9);
        assert!((num(&row[5]) / expected - 1.0).abs() < 1e-11);
    }
}

#[test]
fn output_is_deterministic_and_raw_scales() {
    let dir = TempDir::new().unwrap();
    let config = "[geometry]\nkind = \"chain\"\nn = 3\nspacing = 0.3\ngamma = 2.0\n\
                  [sensitivity]\nschemes = [1, 0]\ntau = [0.3, 0.6, 1.2]\n";
    let a = run(dir.path(), config, &["sensitivity"]);
    let b = run(dir.path(), config, &["sensitivity"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let raw = run(dir.path(), config, &["sensitivity", "--raw"]);
    let (norm, raw) = (rows(&a), rows(&raw));
    assert_eq!(norm.len(), 6);
    assert_eq!(norm[0][1], "1");
    assert_eq!(norm[1][1], "0");
    for (n, r) in norm.iter().zip(&raw) {
        assert!((num(&n[0]) - 2.0 * num(&r[0])).abs() < 1e-10);
        assert!((num(&n[2]) / (num(&r[2]) * 3f64.sqrt() / 2.0) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn numerical_failure_keeps_partial_rows() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("out.csv");
    let config = "[geometry]\nkind = \"chain\"\nn = 2\nspacing = 0.3\n\
                  [sensitivity]\nschemes = [0]\ntau = [1.0, 2.0, 400.0]\n";
    let out = run(
        dir.path(),
        config,
        &["sensitivity", "--out", out_path.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("FAILED,"));
}

#[test]
fn dicke_spectrum_rows() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        "[geometry]\nkind = \"dicke\"\nn = 2\n[spectrum]\n",
        &["dicke-spectrum"],
    );
    assert!(out.status.success());
    let rates: Vec<f64> = rows(&out).iter().map(|r| num(&r[2])).collect();
    assert_eq!(rates.len(), 4);
    for (got, want) in rates.iter().zip([0.0, 0.0, 2.0, 2.0]) {
        assert!((got - want).abs() < 1e-12);
    }

    let out = run(
        dir.path(),
        "[geometry]\nkind = \"dicke\"\nn = 5\n[spectrum]\nm = 1\n",
        &["dicke-spectrum"],
    );
    let r = rows(&out);
    assert_eq!(r.len(), 32);
    for col in [3, 4] {
        let total: f64 = r.iter().map(|row| num(&row[col])).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn json_output() {
    let dir = TempDir::new().unwrap();
    let config = "[two_atom]\nseparation = 0.3\ntau = [1.0, 3.0]\n";
    let out = run(dir.path(), config, &["two-atom", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[1]["numeric_a_sqrt_n_per_gamma"].as_f64().unwrap()
            < rows[1]["numeric_s_sqrt_n_per_gamma"].as_f64().unwrap()
    );
}
