use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ahlap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahlap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &str = r#"
[model]
n_t = 64

[verify]
grid_ladder = [64, 128]
n_seeds = 2
energy_samples = 2

[quasimode]
lambdas = [0.5]
r_scales = [1.0, 2.0]
t_max = 20.0
n_t = 512

[spectrum]
m_max = 1
witness_tol = 0.1
"#;

fn small_config(dir: &Path, extra: &str) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p.display().to_string()
}

#[test]
fn verify_subset_writes_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/run");
    let o = ahlap(&["verify", "--only", "check_div_lring", "--grid-ladder", "128,256,512"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("div_lring") && stdout.contains("PASS"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("identities.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert!(out.join("config.toml").exists());
}

#[test]
fn full_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ahlap(&["verify"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = ahlap(&["report"], dir.path());
    assert_eq!(code(&r), 0);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["verify", "--grid-ladder", "-3"],
        &["verify", "--grid-ladder", "128"],
        &["verify", "--only", "check_nothing"],
        &["quasimode", "--lambdas", "0.2"],
        &["verify", "--config", "/nonexistent/ahlap.toml"],
    ];
    for args in cases {
        let o = ahlap(args, &dir.path().join("x"));
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let cfg = small_config(dir.path(), "");
    fs::write(&cfg, "[model]\nn_t = -3\n").unwrap();
    assert_eq!(code(&ahlap(&["verify", "--config", &cfg], dir.path())), 2);
}

#[test]
fn report_on_empty_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ahlap(&["report"], dir.path())), 2);
}

#[test]
fn report_exit_code_follows_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("identities.json"),
        r#"[{"name": "a", "pass": true}, {"name": "b", "pass": false}]"#,
    )
    .unwrap();
    let o = ahlap(&["report"], dir.path());
    assert_eq!(code(&o), 1);
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().count(), 2);
    fs::write(dir.path().join("identities.json"), r#"[{"name": "a", "pass": true}]"#).unwrap();
    assert_eq!(code(&ahlap(&["report"], dir.path())), 0);
}

#[test]
fn quasimode_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = ahlap(&["quasimode", "--config", &cfg, "--lambdas", "0.5,1.0"], &a);
    let ob = ahlap(&["quasimode", "--config", &cfg, "--lambdas", "0.5,1.0"], &b);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    let csv = fs::read(a.join("quasimode_scan.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("quasimode_scan.csv")).unwrap());
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 4);
    assert!(a.join("quasimode_ratio_lambda_0.5.dat").exists());
}

#[test]
fn perturbed_spectrum_reports_hypothesis_not_met() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    fs::write(&cfg, SMALL.replace("[model]\n", "[model]\nkind = \"perturbed_disk\"\n")).unwrap();
    let o = ahlap(&["spectrum", "--config", &cfg], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout.contains("HypothesisNotMet"), "{stdout}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "hypothesis-not-met");
    assert!(dir.path().join("eigenvalues.csv").exists());
    assert!(dir.path().join("eigenvalue_histogram.dat").exists());
}
