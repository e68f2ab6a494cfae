use ahlap::fields::*;
use ahlap::geometry::*;
use ahlap::identities::{away_from_walls, fit_order};
use ahlap::operators::*;
use ahlap::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn modes() -> Vec<u32> {
    (0..=6).collect()
}

fn disk(n: usize) -> SurfaceModel {
    build_hyperbolic_disk(0.5, 12.0, n, &modes()).unwrap()
}

fn ladder() -> Vec<SurfaceModel> {
    [128, 256, 512].iter().map(|&n| disk(n)).collect()
}

fn rel_where(a: &TensorField, b: &TensorField, m: &SurfaceModel, k: usize) -> f64 {
    let keep = away_from_walls(m, k);
    l2_norm_where(&a.sub(b).unwrap(), m, &keep).unwrap() / l2_norm_where(b, m, &keep).unwrap()
}

#[test]
fn gradient_of_constant_vanishes() {
    let m = disk(64);
    let f = TensorField::radial(Rank::Scalar, vec![vec![3.5; 64]]);
    assert_eq!(covariant_derivative(&f, &m).unwrap().max_abs(), 0.0);
    // wall rows carry the Dirichlet identity
    let lap = laplacian(LaplacianKind::Rough, &f, &m).unwrap();
    let c = &lap.blocks().unwrap()[0].comps[0];
    for j in m.chart.interior() {
        assert_eq!(c[j].norm(), 0.0);
    }
}

#[test]
fn metric_is_parallel_divergence_free_and_closed() {
    for m in ladder() {
        let g = metric_field(&m);
        let scale = l2_norm(&g, &m).unwrap();
        let nab = l2_norm(&covariant_derivative(&g, &m).unwrap(), &m).unwrap();
        let div = l2_norm(&divergence(&g, &m).unwrap(), &m).unwrap();
        let dn = l2_norm(&exterior_d_nabla(&g, &m).unwrap(), &m).unwrap();
        for (name, v) in [("nabla", nab), ("div", div), ("d_nabla", dn)] {
            assert!(v <= 1e-10 * scale, "{name}: {v:e}");
        }
    }
}

#[test]
fn covariant_derivative_of_three_tensor_is_unsupported() {
    let m = disk(64);
    let t = TensorField::zeros(Rank::ThreeTensor, 64, &[0]);
    assert!(matches!(covariant_derivative(&t, &m), Err(Error::Unsupported(_))));
}

// radial f(r) on a collar: Hess = (f'' + f'/r) dr² + (-ĝ/r + ½ĝ') f' dθ², dr = -r dt
#[test]
fn radial_hessian_matches_collar_formula() {
    let mut res = Vec::new();
    for &n in &[128usize, 256, 512] {
        let m = disk(n);
        let r: Vec<f64> = (0..n).map(|j| m.radius(j).unwrap()).collect();
        let f = TensorField::radial(Rank::Scalar, vec![r.iter().map(|r| r * r * r).collect()]);
        let hs = hessian(&f, &m).unwrap();
        let expect: Vec<Vec<f64>> = {
            let mut tt = Vec::new();
            let mut thth = Vec::new();
            for &r in &r {
                let (g, g1) = m.ghat(r).unwrap();
                let (f1, f2) = (3.0 * r * r, 6.0 * r);
                tt.push(r * r * (f2 + f1 / r));
                thth.push((-g / r + 0.5 * g1) * f1);
            }
            vec![tt, vec![0.0; n], thth]
        };
        let e = TensorField::radial(Rank::SymTwoTensor, expect);
        // d then ∇ leaves two one-sided layers at each wall
        res.push((m.chart.spacing, rel_where(&hs, &e, &m, 2)));
    }
    assert!(res[2].1 < 2e-3, "{res:?}");
    assert!(fit_order(&res) > 1.8, "{res:?}");
}

#[test]
fn rotation_field_is_killing() {
    let mut res = Vec::new();
    for m in ladder() {
        // ∂_θ lowered: g_θθ dθ
        let n = m.n_t();
        let w = TensorField::radial(Rank::OneForm, vec![vec![0.0; n], m.metric_thth.clone()]);
        let l = symmetrized_derivative(&w, &m).unwrap();
        let keep = away_from_walls(&m, 1);
        let scale = l2_norm_where(&covariant_derivative(&w, &m).unwrap(), &m, &keep).unwrap();
        res.push((m.chart.spacing, l2_norm_where(&l, &m, &keep).unwrap() / scale));
        let lr = conformal_killing(&w, &m).unwrap();
        assert!(l2_norm_where(&lr, &m, &keep).unwrap() <= l2_norm_where(&l, &m, &keep).unwrap() + 1e-12);
    }
    assert!(fit_order(&res) > 1.8, "{res:?}");
}

#[test]
fn conformal_killing_is_tracefree_part_of_symmetrized_derivative() {
    let m = disk(256);
    for seed in 0..3 {
        let w = random_bump_field(Rank::OneForm, (2.0, 8.0), seed, &m).unwrap();
        let l = symmetrized_derivative(&w, &m).unwrap();
        let lr = conformal_killing(&w, &m).unwrap();
        let direct = restrict_tracefree(&l, &m).unwrap();
        assert!(lr.sub(&direct).unwrap().max_abs() <= 1e-12 * lr.max_abs());
        assert!(lr.tracefree);
        assert!(trace(&lr, &m).unwrap().max_abs() <= 1e-12 * lr.max_abs().max(1.0));
        // tr_g Lω = -d*ω
        let tr = trace(&l, &m).unwrap();
        let co = codifferential_direct(&w, &m).unwrap();
        assert!(tr.add(&co).unwrap().max_abs() <= 1e-10 * co.max_abs());
    }
}

// on the flat fixture with ω = dt: S̊ = dt² - ½ g = (½, 0, -½)
#[test]
fn traceless_square_of_unit_covector() {
    let m = build_flat_cylinder(0.5, 6.0, 32, &[0]).unwrap();
    let w = TensorField::radial(Rank::OneForm, vec![vec![1.0; 32], vec![0.0; 32]]).to_nodal(4).unwrap();
    let s = traceless_square(&w, &m).unwrap();
    let nd = s.nodal().unwrap();
    for i in 0..32 * 4 {
        assert!((nd.values[0][i] - 0.5).abs() < 1e-15);
        assert_eq!(nd.values[1][i], 0.0);
        assert!((nd.values[2][i] + 0.5).abs() < 1e-15);
    }
    let z = TensorField::zeros(Rank::OneForm, 32, &[0]).to_nodal(4).unwrap();
    assert_eq!(traceless_square(&z, &m).unwrap().max_abs(), 0.0);
}

// at the disk center g = 4δ; for ω = dx the Euclidean frame gives (½, 0, -½)
#[test]
fn traceless_square_near_center_in_euclidean_frame() {
    let m = build_hyperbolic_disk_with_center(4.0, 4000, &[1]).unwrap();
    let w = harmonic_oneform(1, &m).unwrap();
    let s = traceless_square(&w.to_nodal(8).unwrap(), &m).unwrap();
    let nd = s.nodal().unwrap();
    // node 0, θ = 0: dt = 2 ds/(1-s²) ≈ 2 dx there, so S̊_tt = 4 S̊_xx
    let t0 = m.chart.t_nodes[0];
    let sq = (0.5 * t0).tanh();
    let dsdt = 0.5 * (1.0 - sq * sq);
    let sxx = nd.values[0][0] / (dsdt * dsdt);
    assert!((sxx - 0.5).abs() < 1e-5, "{sxx}");
    // θθ at θ = 0 equals s² S̊_yy
    let syy = nd.values[2][0] / (sq * sq);
    assert!((syy + 0.5).abs() < 1e-5, "{syy}");
}

#[test]
fn traceless_square_needs_nodal_input() {
    let m = disk(64);
    let w = harmonic_oneform(2, &m).unwrap();
    assert!(matches!(traceless_square(&w, &m), Err(Error::Representation(_))));
    let s = s_ring(&w, &m).unwrap();
    assert!(s.tracefree);
    assert!(trace(&s, &m).unwrap().max_abs() <= 1e-12 * s.max_abs());
}

#[test]
fn curvature_term_vanishes_on_constant_curvature() {
    let m = disk(256);
    let w = random_bump_field(Rank::OneForm, (2.0, 8.0), 3, &m).unwrap();
    let s = s_ring_gradient_r(&w, &m).unwrap();
    assert!(l2_norm(&s, &m).unwrap() <= 1e-10 * l2_norm(&w, &m).unwrap());
}

#[test]
fn curvature_term_lives_inside_the_bump() {
    let base = disk(256);
    let p = build_conformal_perturbation(&base, RadialBump::new(3.0, 7.0, 0.1)).unwrap();
    let w = random_bump_field(Rank::OneForm, (1.0, 11.0), 3, &p).unwrap();
    let s = s_ring_gradient_r(&w, &p).unwrap();
    assert!(s.tracefree);
    assert!(trace(&s, &p).unwrap().max_abs() <= 1e-12 * s.max_abs());
    let h = p.chart.spacing;
    let outside = |j: usize| {
        let t = p.chart.t_nodes[j];
        t < 3.0 - h - 1e-9 || t > 7.0 + h + 1e-9
    };
    assert!(l2_norm_where(&s, &p, outside).unwrap() <= 1e-9 * l2_norm(&s, &p).unwrap());
    assert!(l2_norm(&s, &p).unwrap() > 1e-4);
}

#[test]
fn d_nabla_is_antisymmetric_by_layout() {
    // only the (t,θ,k) slots are stored; (θ,t,k) is their negative and the
    // diagonal pairs vanish
    let m = disk(64);
    let u = random_bump_field(Rank::SymTwoTensor, (2.0, 8.0), 1, &m).unwrap();
    let d = exterior_d_nabla(&u, &m).unwrap();
    assert_eq!(d.rank, Rank::ThreeTensor);
    assert_eq!(d.rank.n_comps(), 2);
    assert_eq!(Rank::ThreeTensor.indices(), &[&[0u8, 1, 0][..], &[0, 1, 1]]);
}

#[test]
fn laplacian_rank_mismatch_is_a_usage_error() {
    let m = disk(64);
    let f = TensorField::zeros(Rank::Scalar, 64, &[0]);
    assert!(matches!(laplacian(LaplacianKind::Lichnerowicz, &f, &m), Err(Error::Usage(_))));
    let w = TensorField::zeros(Rank::OneForm, 64, &[0]);
    assert!(matches!(laplacian(LaplacianKind::Killing, &w, &m), Err(Error::Usage(_))));
    assert!(matches!(divergence(&w, &m), Err(Error::Usage(_))));
}

// ĝ ≡ 1, r = e^{-t}: Δ√r = -r²(√r)'' = ¼√r
#[test]
fn square_root_is_generalized_eigenfunction_on_cusp_collar() {
    let mut res = Vec::new();
    for &n in &[128usize, 256, 512] {
        let m = build_collar_metric(GhatProfile::new(vec![1.0]), 1.0, 0.5, 12.0, n, &[0]).unwrap();
        let f: Vec<f64> = (0..n).map(|j| m.radius(j).unwrap().sqrt()).collect();
        let ff = TensorField::radial(Rank::Scalar, vec![f]);
        let lap = laplacian(LaplacianKind::Rough, &ff, &m).unwrap();
        res.push((m.chart.spacing, rel_where(&lap, &ff.scale(0.25), &m, 1)));
    }
    assert!(res[2].1 < 1e-4, "{res:?}");
    assert!(fit_order(&res) > 1.8, "{res:?}");
}

// for radial f on a collar: Δf = -r²(f'' + ½ ĝ'/ĝ f')
#[test]
fn radial_laplacian_matches_collar_formula() {
    let mut res = Vec::new();
    for &n in &[128usize, 256, 512] {
        let m = disk(n);
        let r: Vec<f64> = (0..n).map(|j| m.radius(j).unwrap()).collect();
        let f = TensorField::radial(Rank::Scalar, vec![r.iter().map(|r| r * r).collect()]);
        let expect: Vec<f64> = r
            .iter()
            .map(|&r| {
                let (g, g1) = m.ghat(r).unwrap();
                -r * r * (2.0 + 0.5 * g1 / g * 2.0 * r)
            })
            .collect();
        let lap = laplacian(LaplacianKind::Rough, &f, &m).unwrap();
        res.push((m.chart.spacing, rel_where(&lap, &TensorField::radial(Rank::Scalar, vec![expect]), &m, 1)));
    }
    assert!(fit_order(&res) > 1.8, "{res:?}");
}

#[test]
fn killing_laplacian_is_lichnerowicz_minus_curvature() {
    let base = disk(256);
    let p = build_conformal_perturbation(&base, RadialBump::new(3.0, 7.0, 0.1)).unwrap();
    let h = random_tracefree_bump((2.0, 8.0), 9, &p).unwrap();
    let k = laplacian(LaplacianKind::Killing, &h, &p).unwrap();
    let l = laplacian(LaplacianKind::Lichnerowicz, &h, &p).unwrap();
    let rh = h.scale_radial(|j| p.scalar_curvature_values()[j]);
    assert!(l.sub(&rh).unwrap().sub(&k).unwrap().max_abs() <= 1e-10 * l.max_abs());
}

#[test]
fn adjointness_of_conformal_killing_and_divergence() {
    let mut res = Vec::new();
    for m in ladder() {
        let w = random_bump_field(Rank::OneForm, (2.0, 8.0), 21, &m).unwrap();
        let h = random_tracefree_bump((3.0, 9.0), 22, &m).unwrap();
        let a = l2_inner_product(&conformal_killing(&w, &m).unwrap(), &h, &m).unwrap();
        let b = l2_inner_product(&w, &divergence(&h, &m).unwrap(), &m).unwrap();
        res.push((m.chart.spacing, (a - b).abs() / a.abs().max(b.abs())));
    }
    assert!(res[2].1 < 1e-3, "{res:?}");
    assert!(fit_order(&res) > 1.7, "{res:?}");
}

fn single_mode(kind: OperatorKind, m: u32, model: &SurfaceModel, seed: u64) -> TensorField {
    let rank = match kind {
        OperatorKind::ScalarLaplacian | OperatorKind::Identity => Rank::Scalar,
        OperatorKind::Lichnerowicz | OperatorKind::KillingLaplacian => Rank::SymTwoTensor,
        _ => Rank::OneForm,
    };
    let f = random_bump_field(rank, (2.0, 8.0), seed, model).unwrap();
    // phase convention of the assembled unknowns: a component with k angular
    // indices is i^k times a real profile; θθ follows from trace-freeness
    let blk = f.mode(m).unwrap().clone();
    let ph = |k: u32| if m == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0).powu(k) };
    let mut comps: Vec<Vec<Complex64>> = blk.comps[..rank.n_comps().min(2)]
        .iter()
        .enumerate()
        .map(|(k, c)| c.iter().map(|v| ph(k as u32) * v.re).collect())
        .collect();
    if rank == Rank::SymTwoTensor {
        let thth = (0..model.n_t()).map(|j| -comps[0][j] * model.metric_thth[j] / model.metric_tt[j]).collect();
        comps.push(thth);
    }
    TensorField::from_mode(rank, m, comps).with_tracefree(rank == Rank::SymTwoTensor)
}

#[test]
fn assembled_matrix_matches_field_operator() {
    let model = disk(96);
    let cases = [
        (OperatorKind::ScalarLaplacian, LaplacianKind::Rough),
        (OperatorKind::RoughLaplacian, LaplacianKind::Rough),
        (OperatorKind::HodgeLaplacian, LaplacianKind::Hodge),
        (OperatorKind::DivLRing, LaplacianKind::DivLRing),
        (OperatorKind::Lichnerowicz, LaplacianKind::Lichnerowicz),
        (OperatorKind::KillingLaplacian, LaplacianKind::Killing),
    ];
    for (kind, lk) in cases {
        for m in 0..=3u32 {
            let f = single_mode(kind, m, &model, 7 + m as u64);
            let op = assemble(kind, m, &model).unwrap();
            let via_matrix = op.apply_to_comps(&model, &f.blocks().unwrap()[0].comps).unwrap();
            let direct = laplacian(lk, &f, &model).unwrap();
            let scale = direct.max_abs();
            for (c, col) in via_matrix.iter().enumerate() {
                for j in 0..model.n_t() {
                    if model.chart.is_wall(j) {
                        continue;
                    }
                    let d = (col[j] - direct.blocks().unwrap()[0].comps[c][j]).norm();
                    assert!(d <= 1e-12 * scale.max(1.0), "{kind:?} m={m} c={c} j={j}: {d:e}");
                }
            }
        }
    }
}

#[test]
fn assembled_lichnerowicz_is_weighted_symmetric_with_dirichlet_rows() {
    let model = disk(128);
    for m in [0u32, 2, 5] {
        let op = assemble(OperatorKind::Lichnerowicz, m, &model).unwrap();
        assert_eq!(op.dim(), 2 * 128);
        assert!(op.weighted_symmetry_defect() <= 1e-8, "m = {m}");
        for i in 0..op.dim() {
            if op.dirichlet[i] {
                for k in 0..op.dim() {
                    assert_eq!(op.matrix[(i, k)], if i == k { 1.0 } else { 0.0 });
                }
            }
        }
        assert_eq!(op.dirichlet.iter().filter(|&&d| d).count(), 4);
    }
}

#[test]
fn assembled_symmetry_defect_shrinks_on_center_chart() {
    for &n in &[128usize, 256] {
        let model = build_hyperbolic_disk_with_center(12.0, n, &modes()).unwrap();
        for kind in [OperatorKind::ScalarLaplacian, OperatorKind::HodgeLaplacian, OperatorKind::Lichnerowicz] {
            let op = assemble(kind, 3, &model).unwrap();
            assert!(op.weighted_symmetry_defect() <= 1e-8, "{kind:?} n={n}");
        }
    }
}

#[test]
fn coordinate_list_export() {
    let model = disk(16);
    let op = assemble(OperatorKind::ScalarLaplacian, 1, &model).unwrap();
    let mut buf = Vec::new();
    op.write_coo(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# kind=ScalarLaplacian mode=1 dim=16"));
    let mut count = 0;
    for l in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        assert_eq!(parts.len(), 3);
        let (r, c): (usize, usize) = (parts[0].parse().unwrap(), parts[1].parse().unwrap());
        let v: f64 = parts[2].parse().unwrap();
        assert_eq!(v, op.matrix[(r, c)]);
        count += 1;
    }
    assert_eq!(count, op.matrix.iter().filter(|v| **v != 0.0).count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // ∇ is linear and Δ is weighted-symmetric on compactly supported fields
    #[test]
    fn laplacian_is_symmetric_on_bumps(s1 in 0u64..1000, s2 in 0u64..1000) {
        let m = disk(128);
        let a = random_bump_field(Rank::OneForm, (2.0, 8.0), s1, &m).unwrap();
        let b = random_bump_field(Rank::OneForm, (2.5, 9.0), s2, &m).unwrap();
        for k in [LaplacianKind::Rough, LaplacianKind::Hodge] {
            let x = l2_inner_product(&laplacian(k, &a, &m).unwrap(), &b, &m).unwrap();
            let y = l2_inner_product(&a, &laplacian(k, &b, &m).unwrap(), &m).unwrap();
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn operators_are_linear(s1 in 0u64..1000, s2 in 0u64..1000, alpha in -3.0f64..3.0) {
        let m = disk(64);
        let a = random_bump_field(Rank::OneForm, (2.0, 8.0), s1, &m).unwrap();
        let b = random_bump_field(Rank::OneForm, (2.0, 8.0), s2, &m).unwrap();
        let lhs = conformal_killing(&a.axpy(alpha, &b).unwrap(), &m).unwrap();
        let rhs = conformal_killing(&a, &m).unwrap().axpy(alpha, &conformal_killing(&b, &m).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * lhs.max_abs().max(1.0));
    }
}

#[test]
fn single_mode_helper_builds_complex_blocks() {
    let m = disk(64);
    let f = single_mode(OperatorKind::HodgeLaplacian, 2, &m, 1);
    assert_eq!(f.modes(), vec![2]);
    assert!(f.blocks().unwrap()[0].comps[0].iter().any(|v| *v != Complex64::new(0.0, 0.0)));
}
