use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wgspec::{execute, RunConfig, Task};

const SINE: &str = r#"{"kind":"periodic","L":1.0,"trig":[{"freq":1,"sin":1.0,"cos":0.0}]}"#;
const FLAT: &str = r#"{"kind":"periodic","L":1.0,"trig":[{"freq":0,"sin":0.0,"cos":0.2}]}"#;

fn wgspec(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wgspec"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.env("WAVEGUIDE_THREADS", "2").output().unwrap()
}

fn out(dir: &Path, file: &str) -> PathBuf {
    dir.join("out").join(file)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn modes_on_the_rectangle() {
    let dir = tempfile::tempdir().unwrap();
    let res = wgspec(dir.path(), &["modes", "--geometry", "rectangle", "--h", "0.01", "--cutoff", "3"], None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&out(dir.path(), "modes.csv"));
    assert_eq!(rows[0], ["n", "lambda", "degenerate"]);
    assert_eq!(rows.len(), 4);
    let l2: f64 = rows[2][1].parse().unwrap();
    assert!((l2 - 9.8696).abs() < 0.005 * 9.8696, "{l2}");
    // 17 significant digits
    assert_eq!(rows[2][1].split('e').next().unwrap().len(), 18);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out(dir.path(), "manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["task"], "modes");
    assert_eq!(manifest["config"]["M"], 3);
    assert_eq!(manifest["config"]["degeneracy_tol"], 1e-6);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["outputs"][0], "modes.csv");
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn validate_reports_small_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"geometry":"triangle","twist":{SINE},"params":{{"epsilon":0.1}}}}"#);
    let res = wgspec(dir.path(), &["validate"], Some(&cfg));
    assert!(res.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(out(dir.path(), "validate.json")).unwrap()).unwrap();
    for key in ["det_residual", "metric_residual", "inverse_residual"] {
        assert!(v[key].as_f64().unwrap() < 1e-12, "{key}: {}", v[key]);
    }
}

#[test]
fn untwisted_bands_have_no_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"geometry":"rectangle","twist":{FLAT},"params":{{"n":2,"h":0.04,"nodes":256,"theta_count":17,"jmax":5}}}}"#
    );
    let res = wgspec(dir.path(), &["bands"], Some(&cfg));
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read_to_string(out(dir.path(), "gaps.csv")).unwrap(), "j,lower,upper,width\n");
    let bands = csv_rows(&out(dir.path(), "bands.csv"));
    assert_eq!(bands[0], ["theta", "j", "k"]);
    assert_eq!(bands.len(), 1 + 17 * 5);
}

#[test]
fn json_format_mirrors_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let res = wgspec(dir.path(), &["modes", "--geometry", "disk", "--h", "0.05", "--cutoff", "4", "--format", "json"], None);
    assert!(res.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(out(dir.path(), "modes.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // the first nonconstant disk modes come in a pair
    assert_eq!(rows[1]["degenerate"], true);
    assert_eq!(rows[2]["degenerate"], true);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = format!(
        r#"{{"task":"gaps","geometry":"rectangle","twist":{SINE},"params":{{"n":2,"h":0.04,"nodes":256,"theta_count":17,"jmax":4,"gap_index":2}}}}"#
    );
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, threads) in dirs.iter().zip(["1", "3"]) {
        let path = d.path().join("run.json");
        fs::write(&path, &cfg).unwrap();
        let res = Command::new(env!("CARGO_BIN_EXE_wgspec"))
            .args(["run", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(d.path().join("out"))
            .env("WAVEGUIDE_THREADS", threads)
            .output()
            .unwrap();
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["gaps.csv", "scaled.csv", "borg.json"] {
        let a = fs::read(out(dirs[0].path(), file)).unwrap();
        let b = fs::read(out(dirs[1].path(), file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str], cfg: Option<&str>| wgspec(dir.path(), args, cfg).status.code();

    assert_eq!(code(&["modes", "--geometry", "hexagon"], None), Some(2));
    assert_eq!(code(&["modes"], Some(r#"{"geometry":"rectangle","extra":1}"#)), Some(2));
    assert_eq!(code(&["potential", "--geometry", "rectangle"], None), Some(2));
    let sine = format!(r#"{{"geometry":"rectangle","twist":{SINE}}}"#);
    assert_eq!(code(&["converge"], Some(&sine)), Some(2));
    assert_eq!(code(&["fiber-converge", "--epsilon", "0.1"], Some(&format!(
        r#"{{"geometry":"rectangle","twist":{SINE},"params":{{"epsilons":[0.9,0.5]}}}}"#
    ))), Some(2));
    assert_eq!(code(&["bands"], Some(&format!(r#"{{"task":"modes","geometry":"rectangle","twist":{SINE}}}"#))), Some(2));

    let disk = format!(r#"{{"geometry":"disk","twist":{SINE},"params":{{"n":2,"h":0.05,"nodes":128}}}}"#);
    assert_eq!(code(&["potential"], Some(&disk)), Some(3));
    assert_eq!(code(&["potential", "--allow-degenerate"], Some(&disk)), Some(0));
}

#[test]
fn defaults_are_resolved_per_task() {
    let parse = |task: &str| {
        let text = format!(r#"{{"task":"{task}","geometry":"rectangle","twist":{SINE},"params":{{"n":2}}}}"#);
        RunConfig::from_json(&text).unwrap().resolve().unwrap()
    };
    let p = parse("persistence");
    assert_eq!((p.task, p.cutoff, p.nodes, p.theta_count), (Task::Persistence, 8, 512, 9));
    let b = parse("bands");
    assert_eq!((b.nodes, b.theta_count, b.epsilons.len()), (1024, 65, 3));
    assert!(RunConfig::from_json(r#"{"task":"modes","geometry":"rectangle","params":{"betas":[]}}"#)
        .unwrap()
        .resolve()
        .is_err());
}

#[test]
fn library_entry_point_matches_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"task":"potential","geometry":"rectangle","twist":{SINE},"params":{{"n":2,"h":0.04,"nodes":64}}}}"#);
    assert!(wgspec(dir.path(), &["run"], Some(&cfg)).status.success());
    let artifacts = execute(&RunConfig::from_json(&cfg).unwrap().resolve().unwrap()).unwrap();
    assert_eq!(artifacts.len(), 1);
    assert_eq!(artifacts[0].file, "potential.csv");
    assert_eq!(artifacts[0].contents, fs::read_to_string(out(dir.path(), "potential.csv")).unwrap());
}
