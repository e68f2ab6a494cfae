use ahlap::fields::*;
use ahlap::geometry::*;
use ahlap::identities::{away_from_walls, fit_order};
use ahlap::operators::hessian;
use ahlap::quasimodes::*;
use ahlap::Error;
use proptest::prelude::*;

fn disk(t_max: f64, n: usize) -> SurfaceModel {
    build_hyperbolic_disk(0.5, t_max, n, &[0, 1, 2]).unwrap()
}

#[test]
fn cutoff_is_one_on_the_plateau_and_zero_outside() {
    for r in [1.0, 2.0, 4.0] {
        let c = CutoffProfile::new(r, 2).unwrap();
        assert!((c.value((-3.0 * r).exp()) - 1.0).abs() < 1e-14);
        for rho in [(-r).exp(), 0.5, 1.0, 3.0] {
            assert_eq!(c.value(rho), 0.0, "R = {r}, ρ = {rho}");
        }
        assert_eq!(c.value((-9.0 * r).exp()), 0.0);
        let (lo, hi) = c.support();
        assert!((hi - (-r).exp()).abs() < 1e-15 && (lo - (-8.0 * r).exp()).abs() < 1e-300);
    }
}

#[test]
fn cutoff_values_stay_in_unit_interval() {
    let c = CutoffProfile::new(2.0, 2).unwrap();
    for k in 0..=2000 {
        let x = 1.5 + 18.0 * k as f64 / 2000.0;
        let v = c.value((-x).exp());
        assert!((0.0..=1.0).contains(&v), "x = {x}: {v}");
    }
}

// scaled derivatives R ρ^k |Ψ^{(k)}| stay bounded uniformly in R; the
// second picks up a c/R term from χ'' that only decays
#[test]
fn cutoff_derivative_bounds_are_scale_free() {
    let b: Vec<[f64; 2]> = [2.0, 4.0, 8.0].iter().map(|&r| CutoffProfile::new(r, 2).unwrap().derivative_bounds).collect();
    for w in b.windows(2) {
        assert!((w[1][0] - w[0][0]).abs() <= 1e-6 * w[0][0], "{b:?}");
        assert!(w[1][1] <= w[0][1], "{b:?}");
    }
    // quintic smoothstep: max |χ'| = 15/8
    assert!((b[0][0] - 1.875).abs() < 1e-3, "{b:?}");
    assert!(b[2][1] >= b[2][0] && b[0][1] < 10.0, "{b:?}");
}

#[test]
fn cutoff_jet_matches_finite_differences() {
    let c = CutoffProfile::new(2.0, 2).unwrap();
    for x in [2.3f64, 3.1, 3.7, 8.5, 9.9, 12.0, 15.2] {
        let rho = (-x).exp();
        let e = 1e-5 * rho;
        let [_, d1, d2] = c.jet(rho);
        let fd1 = (c.value(rho + e) - c.value(rho - e)) / (2.0 * e);
        let fd2 = (c.jet(rho + e)[1] - c.jet(rho - e)[1]) / (2.0 * e);
        assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0 / rho), "x = {x}: {d1} vs {fd1}");
        assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(1.0 / (rho * rho)), "x = {x}: {d2} vs {fd2}");
    }
}

#[test]
fn cutoff_rejects_bad_parameters() {
    assert!(matches!(CutoffProfile::new(0.0, 2), Err(Error::Config(_))));
    assert!(matches!(CutoffProfile::new(2.0, 1), Err(Error::Config(_))));
    let m = disk(12.0, 128);
    match build_cutoff(2.0, 2, &m) {
        Err(Error::Config(msg)) => assert!(msg.contains("t_max"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(build_cutoff(1.0, 2, &m).is_ok());
}

#[test]
fn radial_profile_derivatives_match_finite_differences() {
    // five-point stencil keeps truncation below round-off
    let fd = |g: &dyn Fn(f64) -> f64, r: f64, e: f64| (-g(r + 2.0 * e) + 8.0 * g(r + e) - 8.0 * g(r - e) + g(r - 2.0 * e)) / (12.0 * e);
    for lambda in [0.25, 0.5, 1.0, 3.0] {
        let s = QuasiModeSpec::new(lambda, 0.7, -0.4, 2.0).unwrap();
        for r in [1e-4, 3e-3, 0.05, 0.4] {
            let e = 1e-3 * r;
            let [_, d1, d2] = radial_profile(&s, r).unwrap();
            let g0 = |x: f64| radial_profile(&s, x).unwrap()[0];
            let g1 = |x: f64| radial_profile(&s, x).unwrap()[1];
            let (f1, f2) = (fd(&g0, r, e), fd(&g1, r, e));
            assert!((f1 - d1).abs() <= 1e-8 * d1.abs(), "λ = {lambda}, r = {r}: {f1} vs {d1}");
            assert!((f2 - d2).abs() <= 1e-8 * d2.abs(), "λ = {lambda}, r = {r}: {f2} vs {d2}");
        }
    }
}

#[test]
fn radial_profile_needs_positive_radius() {
    let s = QuasiModeSpec::new(0.5, 1.0, 0.0, 2.0).unwrap();
    assert!(matches!(radial_profile(&s, 0.0), Err(Error::Domain(_))));
    assert!(matches!(radial_profile(&s, -1.0), Err(Error::Domain(_))));
}

#[test]
fn radial_profile_at_quarter_is_square_root() {
    let s = QuasiModeSpec::new(0.25, 1.0, 0.0, 2.0).unwrap();
    assert_eq!(s.mu, 0.0);
    for r in [1e-6, 0.01, 0.3] {
        let [f, d1, d2] = radial_profile(&s, r).unwrap();
        assert!((f - r.sqrt()).abs() <= 1e-15);
        assert!((d1 - 0.5 / r.sqrt()).abs() <= 1e-12 * d1);
        assert!((d2 + 0.25 * r.powf(-1.5)).abs() <= 1e-12 * d2.abs());
    }
}

// r ↦ e^{2π/μ} r multiplies f by e^{π/μ}
#[test]
fn radial_profile_is_log_periodic() {
    let s = QuasiModeSpec::new(1.0, 0.3, 0.8, 2.0).unwrap();
    let k = (2.0 * std::f64::consts::PI / s.mu).exp();
    for r in [1e-5, 1e-3] {
        let a = radial_profile(&s, r).unwrap()[0];
        let b = radial_profile(&s, r * k).unwrap()[0];
        assert!((b - k.sqrt() * a).abs() <= 1e-10 * b.abs().max(1e-12));
    }
}

// ĝ ≡ 1, f = √r: ½(-¼ r^{-3/2}) + ½ r^{-3/2} = ⅜ r^{-3/2}
#[test]
fn profile_f_on_flat_collar_is_three_eighths() {
    let s = QuasiModeSpec::new(0.25, 1.0, 0.0, 2.0).unwrap();
    for r in [1e-4, 0.01, 0.5] {
        let f = radial_profile(&s, r).unwrap();
        let v = profile_f(f, r, (1.0, 0.0));
        assert!((v - 0.375 * r.powf(-1.5)).abs() <= 1e-12 * v);
    }
}

#[test]
fn profile_f_envelope_has_expected_exponent_and_frequency() {
    for lambda in [0.5, 1.0, 2.0] {
        let s = QuasiModeSpec::new(lambda, 1.0, 0.5, 2.0).unwrap();
        let fit = fit_envelope(|r| profile_f(radial_profile(&s, r).unwrap(), r, (1.0, 0.0)), -12.0, -2.0);
        assert!((fit.exponent + 1.5).abs() <= 0.02 * 1.5, "λ = {lambda}: {fit:?}");
        assert!((fit.frequency - s.mu).abs() <= 0.02 * s.mu, "λ = {lambda}: {fit:?}");
        assert!(fit.residual < 1e-2, "{fit:?}");
    }
}

#[test]
fn quasimode_is_tracefree_and_compactly_supported() {
    let m = disk(20.0, 1024);
    let s = QuasiModeSpec::new(0.5, 1.0, 0.0, 2.0).unwrap();
    let c = build_cutoff(2.0, 2, &m).unwrap();
    let h = build_quasimode(&s, &c, &m).unwrap();
    assert!(h.tracefree);
    let tr = trace(&h, &m).unwrap();
    assert!(tr.max_abs() <= 1e-12 * h.max_abs());
    let (lo, hi) = c.support();
    let blk = &h.blocks().unwrap()[0];
    for j in 0..m.n_t() {
        let r = m.radius(j).unwrap();
        if r >= hi || r <= lo {
            assert_eq!(blk.comps[0][j].norm(), 0.0);
        }
    }
    assert!(l2_norm(&h, &m).unwrap() > 0.0);
}

// h_R is the trace-free Hessian of the cut profile f_R; a C⁶ cutoff keeps the
// second difference of f_R at order 2
#[test]
fn quasimode_agrees_with_tracefree_hessian_route() {
    let s = QuasiModeSpec::new(1.0, 1.0, 0.3, 1.0).unwrap();
    let mut res = Vec::new();
    for &n in &[512usize, 1024, 2048] {
        let m = disk(10.0, n);
        let c = build_cutoff(1.0, 6, &m).unwrap();
        let h = build_quasimode(&s, &c, &m).unwrap();
        let f = cut_profile_field(&s, &c, &m).unwrap();
        let hs = restrict_tracefree(&hessian(&f, &m).unwrap(), &m).unwrap();
        let keep = away_from_walls(&m, 2);
        let d = l2_norm_where(&hs.sub(&h).unwrap(), &m, &keep).unwrap() / l2_norm(&h, &m).unwrap();
        res.push((m.chart.spacing, d));
    }
    assert!(res[2].1 <= 1e-3, "{res:?}");
    assert!(fit_order(&res) > 1.7, "{res:?}");
}

#[test]
fn indicial_roots_closed_forms() {
    let (a, b) = indicial_roots(0.0);
    assert!((a.re + 1.0).abs() < 1e-14 && (b.re + 2.0).abs() < 1e-14);
    assert!(a.im == 0.0 && b.im == 0.0);
    let (a, b) = indicial_roots(0.25);
    assert!((a - b).norm() < 1e-12 && (a.re + 1.5).abs() < 1e-12);
    for lambda in [0.5, 1.0, 4.0] {
        let (a, b) = indicial_roots(lambda);
        for s in [a, b] {
            let p = s * s + s * 3.0 + 2.0 + lambda;
            assert!(p.norm() < 1e-12);
            assert!((s.re + 1.5).abs() < 1e-14);
        }
        assert!((a.im.abs() - (lambda - 0.25).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn spec_rejects_sub_quarter_and_null_profiles() {
    assert!(matches!(QuasiModeSpec::new(0.2, 1.0, 0.0, 2.0), Err(Error::Config(_))));
    assert!(matches!(QuasiModeSpec::new(0.5, 0.0, 0.0, 2.0), Err(Error::Config(_))));
    assert!(matches!(QuasiModeSpec::new(f64::NAN, 1.0, 0.0, 2.0), Err(Error::Config(_))));
}

#[test]
fn resolution_check_depends_on_lambda() {
    let coarse = disk(12.0, 32);
    assert!(check_resolution(0.25, &coarse).is_ok());
    assert!(matches!(check_resolution(100.0, &coarse), Err(Error::Config(_))));
    let fine = disk(12.0, 1024);
    assert!(check_resolution(100.0, &fine).is_ok());
}

#[test]
fn scan_needs_two_scales_and_valid_lambdas() {
    let m = disk(20.0, 512);
    assert!(matches!(quasimode_scan(&[0.5], &[2.0], (1.0, 0.0), 2, &m), Err(Error::Usage(_))));
    assert!(matches!(quasimode_scan(&[], &[1.0, 2.0], (1.0, 0.0), 2, &m), Err(Error::Usage(_))));
    assert!(matches!(quasimode_scan(&[0.2], &[1.0, 2.0], (1.0, 0.0), 2, &m), Err(Error::Config(_))));
}

#[test]
fn small_scan_has_decreasing_ratio() {
    let m = disk(20.0, 1024);
    let t = quasimode_scan(&[0.5], &[1.0, 2.0], (1.0, 0.0), 2, &m).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[0].slope_partial.is_none() && t.rows[1].slope_partial.is_some());
    assert!(t.rows[1].ratio < t.rows[0].ratio);
    assert!(t.slopes[0].ratio_monotone);
    assert_eq!(t.slope_threshold, -0.7);
}

#[test]
fn loglog_slope_recovers_power_laws() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.25)).collect();
    assert!((loglog_slope(&x, &y) + 1.25).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cutoff_is_bounded_and_supported(r in 0.5f64..6.0, x in 0.0f64..60.0) {
        let c = CutoffProfile::new(r, 2).unwrap();
        let v = c.value((-x).exp());
        prop_assert!((0.0..=1.0).contains(&v));
        if x <= r || x >= 8.0 * r {
            prop_assert_eq!(v, 0.0);
        }
        if x >= 2.0 * r && x <= 4.0 * r {
            prop_assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
