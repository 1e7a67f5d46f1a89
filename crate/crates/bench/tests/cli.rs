use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
ris_ny = 32
ris_nz = 2
user_ny = 4
user_nz = 2
bs_ny = 4
bs_nz = 4
subcarriers = 4
q = 24
n_x = 8
grid_ris_y = 32
grid_ris_z = 4
grid_user_y = 8
grid_user_z = 4
trials = 3
"#;

fn xlris(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlris"))
        .current_dir(dir)
        .env_remove("XLRIS_CACHE_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

fn config_line(shown: &str, key: &str) -> String {
    shown.lines().find(|l| l.starts_with(&format!("{key} = "))).unwrap_or_else(|| panic!("{key} missing")).to_string()
}

#[test]
fn flags_override_config_file() {
    let dir = workspace();
    let shown = ok(&xlris(dir.path(), &["--config", "small.toml", "show-config"]));
    assert_eq!(config_line(&shown, "q"), "q = 24");
    let shown = ok(&xlris(dir.path(), &["--config", "small.toml", "--q", "16", "--sigma-p2-dbm", "-3", "show-config"]));
    assert_eq!(config_line(&shown, "q"), "q = 16");
    assert_eq!(config_line(&shown, "sigma_p2_dbm"), "sigma_p2_dbm = -3.0");
    assert_eq!(config_line(&shown, "ris_ny"), "ris_ny = 32");
}

#[test]
fn json_config_is_accepted() {
    let dir = workspace();
    fs::write(dir.path().join("c.json"), r#"{"q": 20, "n_x": 4}"#).unwrap();
    let shown = ok(&xlris(dir.path(), &["--config", "c.json", "show-config"]));
    assert_eq!(config_line(&shown, "q"), "q = 20");
    assert_eq!(config_line(&shown, "n_x"), "n_x = 4");
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = workspace();
    let cases: [&[&str]; 5] = [
        &["--config", "missing.toml", "show-config"],
        &["--config", "small.toml", "--q", "0", "show-config"],
        &["run", "no_such_experiment"],
        &["--config", "small.toml", "run", "nmse_vs_Q", "--methods", "nope"],
        &["--config", "small.toml", "dict", "build"],
    ];
    for args in cases {
        let out = xlris(dir.path(), args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
    fs::write(dir.path().join("bad.toml"), "not_a_field = 3\n").unwrap();
    let out = xlris(dir.path(), &["--config", "bad.toml", "show-config"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("xlris: error"));
}

#[test]
fn dict_build_fills_env_cache() {
    let dir = workspace();
    let cache = dir.path().join("cache");
    let out = Command::new(env!("CARGO_BIN_EXE_xlris"))
        .current_dir(dir.path())
        .env("XLRIS_CACHE_DIR", &cache)
        .args(["--config", "small.toml", "dict", "build"])
        .output()
        .unwrap();
    ok(&out);
    let mut names: Vec<String> =
        fs::read_dir(&cache).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    assert!(names[0].starts_with("angular-") && names[0].ends_with(".json"));
    assert!(names[1].starts_with("spherical-") && names[1].ends_with(".json"));
    // Other keys land in other files.
    ok(&xlris(dir.path(), &["--config", "small.toml", "--cache-dir", "cache", "--mu-m", "0.7", "dict", "build"]));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 3);
}

#[test]
fn trajectory_csv_layout() {
    let dir = workspace();
    let text = ok(&xlris(
        dir.path(),
        &["--config", "small.toml", "trajectory", "--theta-deg", "60", "--phi-deg", "20", "--r", "15", "-o", "t.csv"],
    ));
    assert!(text.is_empty());
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,f_k,theta_deg,phi_deg,r,gain"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn gain_curve_rows() {
    let dir = workspace();
    let text = ok(&xlris(dir.path(), &["--config", "small.toml", "gain-curve", "--sizes", "16,32", "--distances", "5,50,100"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("distance,ris_ny,ris_nz,gain"));
    for line in lines.by_ref() {
        let gain: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&gain), "{line}");
    }
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn run_is_reproducible_and_writes_manifest() {
    let dir = workspace();
    let args = |out: &'static str| {
        vec![
            "--config",
            "small.toml",
            "--cache-dir",
            "cache",
            "run",
            "nmse_vs_Q",
            "--values",
            "16,24",
            "--methods",
            "cc-mmpsr,2d-ols",
            "-o",
            out,
        ]
    };
    ok(&xlris(dir.path(), &args("a")));
    ok(&xlris(dir.path(), &args("b")));
    let a = fs::read(dir.path().join("a/nmse_vs_Q.csv")).unwrap();
    let b = fs::read(dir.path().join("b/nmse_vs_Q.csv")).unwrap();
    assert_eq!(a, b);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/nmse_vs_Q.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["format"], "xlris-manifest");
    assert_eq!(manifest["experiment"], "nmse_vs_Q");
    assert_eq!(manifest["config"]["q"], 24);
    assert_eq!(manifest["csv"], "nmse_vs_Q.csv");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn least_squares_is_exact_at_full_training() {
    let dir = workspace();
    ok(&xlris(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "--q",
            "64",
            "--sigma-n2-dbm",
            "-300",
            "run",
            "nmse_vs_Q",
            "--values",
            "64",
            "--methods",
            "2d-ls,1d-ls",
            "-o",
            "out",
        ],
    ));
    let csv = fs::read_to_string(dir.path().join("out/nmse_vs_Q.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    let header = rows.headers().unwrap().clone();
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let mut seen = 0;
    for rec in rows.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[col("failures")], "0");
        let nmse: f64 = rec[col("median_nmse")].parse().unwrap();
        assert!(nmse < 1e-10, "{}: {nmse}", &rec[col("method")]);
        seen += 1;
    }
    assert_eq!(seen, 2);
}

#[test]
fn saved_trials_are_self_describing() {
    let dir = workspace();
    ok(&xlris(
        dir.path(),
        &["--config", "small.toml", "run", "nmse_vs_Q", "--values", "24", "--methods", "2d-ols", "--save-trials", "1", "-o", "out"],
    ));
    let trial = dir.path().join("out/nmse_vs_Q-trials/q-24");
    for name in ["channel-0000.json", "measurement-0000.json", "result-2d-ols-0000.json"] {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(trial.join(name)).unwrap()).unwrap();
        assert!(v["format"].as_str().unwrap().starts_with("xlris-"), "{name}");
        assert_eq!(v["version"], 1);
    }
    let result: serde_json::Value =
        serde_json::from_slice(&fs::read(trial.join("result-2d-ols-0000.json")).unwrap()).unwrap();
    assert!(result["timings"].as_array().is_some_and(|t| !t.is_empty()));
    assert!(result["seed"].is_u64());
}
