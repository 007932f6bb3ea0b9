use std::path::{Path, PathBuf};
use std::process::Command;

use dam::experiment::parse_config;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn damsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_damsim")).args(args).output().unwrap()
}

#[test]
fn shipped_configs_parse() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn doubleside_run_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds.csv");
    let cfg = configs().join("doubleside.toml");
    let o = damsim(&[
        "se-vs-power-doubleside",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--threads",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("sweep_value,scheme,mean,stderr,trials\n"));
    assert_eq!(csv.lines().count(), 1 + 7 * 4);
    assert_eq!(String::from_utf8_lossy(&o.stdout), csv);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["trials"], 2);
    assert_eq!(json["rows"][0]["samples"].as_array().unwrap().len(), 2);
}

#[test]
fn same_seed_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = damsim(&[
            "se-vs-power-doubleside",
            "--trials",
            "3",
            "--seed",
            "9",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read_to_string(out).unwrap()
    };
    assert_eq!(run("a.csv", "1"), run("b.csv", "2"));
}

#[test]
fn mismatched_kind_is_rejected() {
    let cfg = configs().join("papr.toml");
    let o = damsim(&["se-vs-power-bsside", "--config", cfg.to_str().unwrap(), "--trials", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("papr_ccdf"));
}

#[test]
fn bad_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "kind = \"se_vs_power_fractional\"\n[config]\nbeta = 1.5\n").unwrap();
    let o = damsim(&["se-vs-power-fractional", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("config.beta"));
}
