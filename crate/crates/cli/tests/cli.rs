use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jetmech(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetmech")).current_dir(dir).args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[lagragian]\nkind = \"harmonic\"\n").unwrap();
    let out = jetmech(dir.path(), &["-c", "bad.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lagragian"));

    let out = jetmech(dir.path(), &["--set", "integrator.method=\"euler\"", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = jetmech(dir.path(), &["--set", "integrator.tspan=[0.0, 3.0]", "-o", "run", "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,"));
    let summary = json(&dir.path().join("run/summary.json"));
    assert_eq!(summary["t1"], 3.0);
    assert!(summary["maxElResidual"].as_f64().unwrap() < 1e-6);
    assert!(summary["drift"]["conserved"].as_bool().unwrap());
}

#[test]
fn nuclear_scale_table_ratio_is_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let out = jetmech(
        dir.path(),
        &["--set", "potential.k=1e-15", "--set", "potential.radii=[1e-16, 1e-15, 1e-14, 1e-10]", "potential-table"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("potential_table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r,phi_model,phi_newton,force_model,force_newton,ratio,regime");
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let r: f64 = cells[0].parse().unwrap();
        let ratio: f64 = cells[5].parse().unwrap();
        let expected = (1e-15 / r).exp();
        assert!((ratio - expected).abs() <= 1e-12 * expected, "r = {r}: {ratio} vs {expected}");
        rows += 1;
    }
    assert_eq!(rows, 4);
    assert!(dir.path().join("laplacian.json").exists());
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    for jobs in ["1", "4"] {
        let out = jetmech(dir.path(), &["-j", jobs, "-o", jobs, "potential-table"]);
        assert!(out.status.success());
        let out = jetmech(dir.path(), &["-j", jobs, "-o", jobs, "selftest"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["potential_table.csv", "selftest.json"] {
        let a = fs::read(dir.path().join("1").join(name)).unwrap();
        let b = fs::read(dir.path().join("4").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn series_model_writes_divergence_scan() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("series.toml"),
        "[potential]\nkind = \"series\"\nk = 1.0\ncoefficients = [1.0, 1.0, 1.0]\nradii = [0.5, 1.0, 2.0]\n",
    )
    .unwrap();
    let out = jetmech(dir.path(), &["-c", "series.toml", "potential-table"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scan = json(&dir.path().join("series_scan.json"));
    let flags: Vec<bool> =
        scan["records"].as_array().unwrap().iter().map(|r| r["divergent"].as_bool().unwrap()).collect();
    assert_eq!(flags, [true, true, false]);
}

#[test]
fn derive_eom_and_momenta_documents() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pu.toml"),
        "[lagrangian]\nkind = \"pais-uhlenbeck\"\nomega1 = 1.0\nomega2 = 2.0\n",
    )
    .unwrap();
    for cmd in ["derive-eom", "momenta", "energy", "action-check"] {
        let out = jetmech(dir.path(), &["-c", "pu.toml", cmd]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let eom = json(&dir.path().join("eom.json"));
    assert_eq!(eom["model"]["order"], 2);
    assert_eq!(eom["momenta"]["standard"].as_array().unwrap().len(), 2);
    let action = json(&dir.path().join("action.json"));
    let slope = action["slope"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "{slope}");
}
