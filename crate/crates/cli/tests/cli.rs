use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spde-frame"))
}

fn default_config(name: &str) -> String {
    let out = bin().args(["list", "--config", name]).output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

fn run_config(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.conf");
    fs::write(&cfg, text).unwrap();
    bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn replace(text: &str, key: &str, value: &str) -> String {
    let mut section = String::new();
    text.lines()
        .map(|line| {
            let t = line.trim();
            if t.starts_with('[') {
                section = t.trim_matches(['[', ']']).to_string() + ".";
            }
            match t.split_once('=') {
                Some((k, _)) if format!("{section}{}", k.trim()) == key => format!("{} = {value}", k.trim()),
                _ => line.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn list_names_every_experiment() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["dilation-check", "frame-roundtrip", "correspondence", "ito-approx", "tanaka", "monotone"] {
        assert!(text.contains(name), "{name} missing from list");
    }
}

#[test]
fn unknown_experiment_in_list_is_a_config_error() {
    let out = bin().args(["list", "--config", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dilation_check_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &default_config("dilation-check"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "dilation-check");
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn malformed_config_exits_3_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = replace(&default_config("frame-roundtrip"), "grid.t_end", "-1");
    let out = run_config(dir.path(), &text, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_end"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = default_config("monotone") + "\nbogus = 1\n";
    assert_eq!(run_config(dir.path(), &text, &[]).status.code(), Some(3));
}

#[test]
fn missing_config_file_exits_3() {
    let out = bin().args(["run", "/nonexistent/run.conf"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

fn small_tanaka() -> String {
    replace(&default_config("tanaka"), "grid.n_steps", "64")
}

#[test]
fn underpowered_tanaka_warns() {
    let dir = tempfile::tempdir().unwrap();
    let text = replace(&small_tanaka(), "tanaka.recon_paths", "20");
    let out = run_config(dir.path(), &text, &["--paths", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("out/paths_tanaka.csv").exists());
}

#[test]
fn seed_override_is_reproducible() {
    let text = replace(&small_tanaka(), "tanaka.recon_paths", "20");
    let report = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        run_config(dir.path(), &text, &["--paths", "10", "--seed", seed]);
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
        v["wall_time_s"] = serde_json::Value::Null;
        v
    };
    let a = report("99");
    assert_eq!(a["seed"], 99);
    assert_eq!(a, report("99"));
    assert_ne!(a["details"], report("100")["details"]);
}
