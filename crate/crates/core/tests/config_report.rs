use std::collections::BTreeMap;
use std::fs;

use ahlap::config::*;
use ahlap::geometry::build_hyperbolic_disk;
use ahlap::identities::{IdentityReport, Ladder};
use ahlap::quasimodes::quasimode_scan;
use ahlap::report::*;
use ahlap::spectral::{spectral_picture, QuasiScanConfig, SpectralConfig};
use ahlap::Error;

#[test]
fn empty_toml_gives_defaults() {
    let c = RunConfig::from_toml("").unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.model.bump(), None);
    assert_eq!(c.suite().seeds, (1..=8).collect::<Vec<u64>>());
    let s = c.spectral();
    assert_eq!(s.t_max, vec![12.0, 14.0]);
    assert_eq!(s.n_t, vec![512, 1024]);
}

#[test]
fn toml_round_trip() {
    let text = r#"
out = "runs/a"
seed = 7

[model]
kind = "perturbed_disk"
n_t = 256

[model.perturbation]
t_lo = 2.0
t_hi = 6.0
amplitude = 0.05

[verify]
grid_ladder = [64, 128]
n_seeds = 3

[quasimode]
lambdas = [0.5]
r_scales = [1.0, 2.0]
"#;
    let c = RunConfig::from_toml(text).unwrap();
    assert_eq!(c.model.kind, ModelKind::PerturbedDisk);
    let b = c.model.bump().unwrap();
    assert_eq!((b.t_lo, b.t_hi, b.amplitude), (2.0, 6.0, 0.05));
    assert_eq!(c.suite().seeds, vec![7, 8, 9]);
    assert_eq!(c.spectral().perturbation, Some(b));
    let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn invalid_configs_are_config_errors() {
    for text in [
        "[model]\nn_t = 4",
        "[model]\nn_t = -3",
        "[model]\nt_min = 5.0\nt_max = 2.0",
        "[model]\nmodes = []",
        "[verify]\ngrid_ladder = [128]",
        "[verify]\nn_seeds = 0",
        "[quasimode]\nlambdas = [0.2]",
        "[quasimode]\nr_scales = [2.0]",
        "[spectrum]\ntruncation_step = 0.0",
        "[model]\nunknown_key = 1",
        "bogus = true",
        "[model]\nkind = \"sphere\"",
    ] {
        assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(RunConfig::load(&dir.path().join("none.toml")), Err(Error::Config(_))));
    let p = dir.path().join("c.toml");
    fs::write(&p, "seed = 3\n").unwrap();
    assert_eq!(RunConfig::load(&p).unwrap().seed, 3);
}

fn report(name: &str, pass: bool) -> IdentityReport {
    IdentityReport {
        name: name.into(),
        residuals: vec![(0.1, 1e-2), (0.05, 2.5e-3)],
        fitted_order: 2.0,
        pass,
        details: BTreeMap::new(),
    }
}

#[test]
fn identity_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(summarize_dir(dir.path()).unwrap().is_empty());
    let paths = write_identities(dir.path(), &[report("a", true), report("b", false)]).unwrap();
    assert_eq!(paths.len(), 2);
    let csv = fs::read_to_string(dir.path().join(IDENTITIES_CSV)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "check,h,residual,fitted_order,pass");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("b,") && lines[3].ends_with("false"));
    let s = summarize_dir(dir.path()).unwrap();
    assert_eq!(s.len(), 2);
    assert!(s[0].pass && !s[1].pass);
    assert_eq!(s[1].item, "b");
}

#[test]
fn scan_artifacts_are_deterministic() {
    let m = build_hyperbolic_disk(0.5, 20.0, 512, &[0]).unwrap();
    let t = quasimode_scan(&[0.5, 1.0], &[1.0, 2.0], (1.0, 0.0), 2, &m).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let pa = write_scan(a.path(), &t).unwrap();
    write_scan(b.path(), &quasimode_scan(&[0.5, 1.0], &[1.0, 2.0], (1.0, 0.0), 2, &m).unwrap()).unwrap();
    assert_eq!(pa.len(), 4);
    for p in &pa {
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(p).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let csv = fs::read_to_string(a.path().join(SCAN_CSV)).unwrap();
    assert!(csv.starts_with("lambda,R,res_l2,norm_l2,ratio,slope_partial"));
    let s = summarize_dir(a.path()).unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.iter().all(|l| l.source == SCAN_JSON));
}

#[test]
fn spectrum_artifacts() {
    let cfg = SpectralConfig {
        t_max: vec![8.0],
        n_t: vec![64],
        m_max: 1,
        eigentensor_ladder: Ladder {
            n_t: vec![64, 128],
            ..Ladder::default()
        },
        tt_degrees: vec![2],
        witness_tol: 1e-1,
        floor_samples: 2,
        quasimodes: QuasiScanConfig {
            lambdas: vec![0.5],
            r_scales: vec![1.0, 2.0],
            t_max: 20.0,
            n_t: 512,
            ..QuasiScanConfig::default()
        },
        ..SpectralConfig::default()
    };
    let rep = spectral_picture(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_spectrum(dir.path(), &rep).unwrap();
    assert_eq!(paths.len(), 3);
    let csv = fs::read_to_string(dir.path().join(EIGENVALUES_CSV)).unwrap();
    assert!(csv.starts_with("t_max,n_t,m,index,eigenvalue"));
    let hist = fs::read_to_string(dir.path().join(HISTOGRAM_DAT)).unwrap();
    assert_eq!(hist.lines().count(), 70);
    let listed: usize = rep.blocks[0].iter().map(|b| b.low.iter().filter(|v| **v >= -2.5).count()).sum();
    let counted: f64 = hist.lines().map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert_eq!(counted as usize, listed);
    let s = summarize_dir(dir.path()).unwrap();
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|l| l.source == SPECTRUM_JSON));
}

#[test]
fn corrupt_json_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(IDENTITIES_JSON), "{ not json").unwrap();
    assert!(matches!(summarize_dir(dir.path()), Err(Error::Json(_))));
}
