use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gpbose(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpbose"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("GPBOSE_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_scatter_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpbose(&["scatter", "--potential", "hard-core", "--R", "0.5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let done = stdout_json(&out);
    assert_eq!(done["status"], "ok");
    let a = done["summary"]["scattering_length"].as_f64().unwrap();
    assert!((a - 0.5).abs() < 1e-6);
    let manifest = read_json(&tmp.path().join("manifest.json"));
    let mut names: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["profile.csv", "scatter.json"]);
    assert_eq!(manifest["config"]["grid"], 4096);
    assert!(manifest["config"].get("output_dir").is_none());
}

#[test]
fn validation_names_every_bad_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpbose(&["scatter", "--potential", "hard-core", "--R", "-1", "--foo", "3"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "validation");
    let keys: Vec<&str> = err["violations"].as_array().unwrap().iter().map(|v| v["key"].as_str().unwrap()).collect();
    assert!(keys.contains(&"R") && keys.contains(&"foo"), "{keys:?}");
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn free_dispersion_is_p_squared() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpbose(&["bogo", "dispersion", "--a", "0", "--shells", "3"], tmp.path());
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("dispersion.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!((r[1] - r[0] * r[0]).abs() <= 1e-12 * r[1]);
    }
}

#[test]
fn empty_table_leaves_manifest_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpbose(&["bogo", "dispersion", "--a", "0.1", "--shells", "0"], tmp.path());
    assert!(out.status.success());
    let manifest = read_json(&tmp.path().join("manifest.json"));
    assert!(manifest["files"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_matches_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("pair.conf");
    fs::write(&conf, "# one pair\ncommand = oracle\nmode = pair\nD = 5\nB = 1\nnmax = 40\n").unwrap();
    let by_file = gpbose(&["run", conf.to_str().unwrap()], &tmp.path().join("a"));
    let by_flags = gpbose(&["oracle", "pair", "--D", "5", "--B", "1", "--nmax", "40"], &tmp.path().join("b"));
    assert!(by_file.status.success() && by_flags.status.success());
    for name in ["manifest.json", "pair.json", "levels.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(name)).unwrap(),
            fs::read(tmp.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    let pair = read_json(&tmp.path().join("a/pair.json"));
    assert!(pair["gap_difference"].as_f64().unwrap().abs() < 1e-6);
    assert!((pair["symplectic_eps"].as_f64().unwrap() - 24f64.sqrt()).abs() < 1e-12);
}

#[test]
fn manifest_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert!(gpbose(&["ideal", "--beta", "1", "--rho", "0.117"], &first).status.success());
    let again = gpbose(&["run", first.join("manifest.json").to_str().unwrap()], &tmp.path().join("again"));
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(
        fs::read(first.join("manifest.json")).unwrap(),
        fs::read(tmp.path().join("again/manifest.json")).unwrap()
    );
}

#[test]
fn tdgp_manifest_lists_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "tdgp", "--geometry", "torus", "--dim", "2", "--n", "16", "--a", "0.2", "--dt", "0.01", "--steps", "20",
        "--stride", "10",
    ];
    assert!(gpbose(&args, tmp.path()).status.success());
    let manifest = read_json(&tmp.path().join("manifest.json"));
    let snaps: Vec<(u64, f64)> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["format"] == "complex128-le")
        .filter_map(|f| Some((f["step"].as_u64()?, f["time"].as_f64()?)))
        .collect();
    let steps: Vec<u64> = snaps.iter().map(|s| s.0).collect();
    assert_eq!(steps, [0, 10, 20]);
    assert!((snaps[2].1 - 0.2).abs() < 1e-12);
}

#[test]
fn env_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_gpbose"))
        .args(["bogo", "rate", "--zeta", "2", "--C", "1", "--output-dir"])
        .arg(tmp.path().join("ignored"))
        .env("GPBOSE_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("manifest.json").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = gpbose(&["run", tmp.path().join("nope.conf").to_str().unwrap()], tmp.path());
    assert_eq!(missing.status.code(), Some(4));

    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "command = scatter\nR = 1\nR = 2\n").unwrap();
    let out = gpbose(&["run", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["line"], 3);

    let args = ["gp-min", "--geometry", "harmonic", "--n", "32", "--a", "1", "--max-iter", "2"];
    let out = gpbose(&args, tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "non-convergence");

    let out = gpbose(&["oracle", "pair", "--D", "1", "--B", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
