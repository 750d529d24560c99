//! End-to-end runs of the `ris-linksim` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ris-linksim"));
    c.env_remove("RIS_LINKSIM_WORKERS");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|it| it.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn validate_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["single_ris_ber.scn", "dual_ris_rate.scn", "double_ris_sep.scn"] {
        let out = bin().arg("validate").arg(scenario(name)).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
    }
    assert!(listing(dir.path()).is_empty());
}

#[test]
fn preset_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["preset", "table1", "--seed", "7", "--out", "./r"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = dir.path().join("r");
    assert_eq!(listing(&r), ["manifest.json", "table1.csv"]);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(r.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["preset"], "table1");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["scenario_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["files"][0], "table1.csv");
    let csv = fs::read_to_string(r.join("table1.csv")).unwrap();
    assert!(csv.starts_with("frequency_ghz,configuration,ple,pl0_db\r\n"));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = bin().arg("simulate").output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let out = bin().args(["preset", "fig11"]).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("fig11"));
}

#[test]
fn bad_scenario_lists_every_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("single_ris_ber.scn"))
        .unwrap()
        .replace("law = radar-range", "law = umi-street-canyon-los")
        .replace("elements = 64", "elements = 64\ncolour = blue");
    let path = dir.path().join("bad.scn");
    fs::write(&path, text).unwrap();
    for sub in ["validate", "run"] {
        let out = bin().arg(sub).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
        assert_eq!(code(&out), 2, "{sub}");
        let err = stderr(&out);
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("GHz band"), "{err}");
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_scenario_file_is_a_scenario_error() {
    let out = bin().args(["run", "no/such/file.scn"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = bin().args(["preset", "table1", "--out"]).arg(blocker.join("sub")).output().unwrap();
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn scenario_runs_write_one_table() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("single_ris_ber.scn", "single_ris_ber_ber.csv", "snr_db,trials,bits,errors,ber,ci95_low,ci95_high"),
        ("dual_ris_rate.scn", "dual_ris_rate_rate.csv", "parameter,rate_bps_hz,mean_snr_db"),
        ("double_ris_sep.scn", "double_ris_sep_sep.csv", "snr_db,sep"),
    ];
    for (name, table, header) in cases {
        let out_dir = dir.path().join(name);
        let out = bin().arg("run").arg(scenario(name)).arg("--out").arg(&out_dir).output().unwrap();
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        let mut expected = vec![table.to_string(), "manifest.json".to_string()];
        expected.sort();
        assert_eq!(listing(&out_dir), expected);
        let csv = fs::read_to_string(out_dir.join(table)).unwrap();
        assert_eq!(csv.lines().next().unwrap(), header);
    }
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .arg("run")
            .arg(scenario("single_ris_ber.scn"))
            .args(args)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        let manifest: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        (manifest["seed"].as_u64().unwrap(), fs::read(out_dir.join("single_ris_ber_ber.csv")).unwrap())
    };
    let (seed, a) = run(&[], "a");
    assert_eq!(seed, 3);
    let (seed, b) = run(&["--seed", "3", "--workers", "3"], "b");
    assert_eq!(seed, 3);
    assert_eq!(a, b);
    let (seed, c) = run(&["--seed", "4"], "c");
    assert_eq!(seed, 4);
    assert_ne!(a, c);
}

#[test]
fn workers_env_var_is_read() {
    let out = bin().env("RIS_LINKSIM_WORKERS", "0").arg("list-presets").output().unwrap();
    assert_eq!(code(&out), 1);
    let out = bin().env("RIS_LINKSIM_WORKERS", "2").arg("list-presets").output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 13);
}
