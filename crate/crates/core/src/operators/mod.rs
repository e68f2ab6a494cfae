//! Differential operators on tensor fields.
//!
//! First derivatives use the second-order stencil of [`stencil`]; the
//! Laplacians use a compact self-adjoint three-point form. Signs: `Δ` is
//! positive, `div u = -∇^j u_{ji}`, `d* = -∇^i ω_i`.

pub mod assemble;
pub(crate) mod dense;
pub mod laplacian;
pub mod stencil;

use crate::error::{Error, Result};
use crate::fields::{restrict_tracefree, FieldData, ModeBlock, NodalData, Rank, TensorField};
use crate::geometry::SurfaceModel;
use dense::{contract_first_two, from_dense, grad, to_dense, Dense, C};
pub use assemble::{assemble, AssembledOperator, OperatorKind};
pub use laplacian::LaplacianKind;

fn check(u: &TensorField, model: &SurfaceModel) -> Result<()> {
    if u.n_t != model.n_t() {
        return Err(Error::Usage(format!(
            "field has {} nodes but the chart has {}",
            u.n_t,
            model.n_t()
        )));
    }
    Ok(())
}

fn expect_rank(u: &TensorField, rank: Rank, op: &str) -> Result<()> {
    if u.rank != rank {
        return Err(Error::Usage(format!(
            "{op} needs a {} field, got {}",
            rank.name(),
            u.rank.name()
        )));
    }
    Ok(())
}

/// Apply a per-mode map to every block of a modal field.
fn map_blocks(
    u: &TensorField,
    model: &SurfaceModel,
    out_rank: Rank,
    f: impl Fn(u32, &[Vec<C>]) -> Result<Vec<Vec<C>>>,
) -> Result<TensorField> {
    check(u, model)?;
    let blocks = u
        .blocks()?
        .iter()
        .map(|b| {
            let mut comps = f(b.m, &b.comps)?;
            if b.m == 0 {
                for c in &mut comps {
                    for v in c {
                        v.im = 0.0;
                    }
                }
            }
            Ok(ModeBlock { m: b.m, comps })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorField {
        rank: out_rank,
        tracefree: false,
        n_t: u.n_t,
        data: FieldData::Modal(blocks),
    })
}

fn dense_grad(model: &SurfaceModel, rank: Rank, m: u32, comps: &[Vec<C>]) -> Result<Dense> {
    Ok(grad(model, m, &to_dense(rank, comps)?))
}

/// `∇u`: scalar → 1-form, 1-form → 2-tensor, 2-tensor → 3-tensor.
pub fn covariant_derivative(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    let out = match u.rank {
        Rank::Scalar => Rank::OneForm,
        Rank::OneForm => Rank::TwoTensor,
        Rank::SymTwoTensor | Rank::TwoTensor => Rank::Covariant3,
        r => {
            return Err(Error::Unsupported(format!(
                "covariant derivative of a {} field",
                r.name()
            )))
        }
    };
    map_blocks(u, model, out, |m, c| from_dense(out, &dense_grad(model, u.rank, m, c)?))
}

/// `(div u)_i = -∇^j u_{ji}`.
pub fn divergence(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(u, Rank::SymTwoTensor, "divergence")?;
    map_blocks(u, model, Rank::OneForm, |m, c| {
        let g = dense_grad(model, Rank::SymTwoTensor, m, c)?;
        let tr = contract_first_two(model, &g);
        Ok(tr.c.iter().map(|v| v.iter().map(|x| -x).collect()).collect())
    })
}

/// `d*ω = -∇^i ω_i` by direct contraction.
pub fn codifferential_direct(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "codifferential")?;
    map_blocks(w, model, Rank::Scalar, |m, c| {
        let g = dense_grad(model, Rank::OneForm, m, c)?;
        let tr = contract_first_two(model, &g);
        Ok(vec![tr.c[0].iter().map(|x| -x).collect()])
    })
}

/// `d*ω` as the weighted adjoint of the discrete `d` on functions.
pub fn codifferential(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "codifferential")?;
    let h = model.chart.spacing;
    map_blocks(w, model, Rank::Scalar, |m, c| {
        let n = c[0].len();
        let sq: Vec<f64> = (0..n).map(|j| model.jet(j).sqrt_det()).collect();
        let flux: Vec<C> = (0..n).map(|j| c[0][j] * (sq[j] / model.jet(j).p)).collect();
        let dt = stencil::d1_transpose(&flux, h);
        let im = C::new(0.0, m as f64);
        Ok(vec![(0..n)
            .map(|j| (dt[j] - im * c[1][j] * (sq[j] / model.jet(j).q)) / sq[j])
            .collect()])
    })
}

/// Exterior derivative: functions → 1-forms, 1-forms → `*dω` (a function).
pub fn exterior_d(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    let h = model.chart.spacing;
    match u.rank {
        Rank::Scalar => map_blocks(u, model, Rank::OneForm, |m, c| {
            let im = C::new(0.0, m as f64);
            Ok(vec![stencil::d1(&c[0], h), c[0].iter().map(|x| x * im).collect()])
        }),
        Rank::OneForm => map_blocks(u, model, Rank::Scalar, |m, c| {
            let im = C::new(0.0, m as f64);
            let dth = stencil::d1(&c[1], h);
            Ok(vec![(0..c[0].len())
                .map(|j| (dth[j] - im * c[0][j]) / model.jet(j).sqrt_det())
                .collect()])
        }),
        r => Err(Error::Unsupported(format!("exterior derivative of a {}", r.name()))),
    }
}

/// Hodge star on 1-forms, oriented by `dt ∧ dθ`.
pub fn hodge_star(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "hodge_star")?;
    let ratio: Vec<f64> = (0..model.n_t())
        .map(|j| (model.jet(j).p / model.jet(j).q).sqrt())
        .collect();
    check(w, model)?;
    let mut out = w.clone();
    out.tracefree = false;
    match &mut out.data {
        FieldData::Modal(blocks) => {
            for b in blocks {
                let (t, th) = (b.comps[0].clone(), b.comps[1].clone());
                b.comps[0] = th.iter().zip(&ratio).map(|(x, r)| -x * *r).collect();
                b.comps[1] = t.iter().zip(&ratio).map(|(x, r)| x / *r).collect();
            }
        }
        FieldData::Nodal(nd) => {
            let n = nd.n_theta;
            let (t, th) = (nd.values[0].clone(), nd.values[1].clone());
            nd.values[0] = th.iter().enumerate().map(|(i, x)| -x * ratio[i / n]).collect();
            nd.values[1] = t.iter().enumerate().map(|(i, x)| x / ratio[i / n]).collect();
        }
    }
    Ok(out)
}

/// `(Lω)_{ij} = ½(∇_iω_j + ∇_jω_i)`.
pub fn symmetrized_derivative(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "symmetrized_derivative")?;
    map_blocks(w, model, Rank::SymTwoTensor, |m, c| {
        from_dense(Rank::SymTwoTensor, &dense_grad(model, Rank::OneForm, m, c)?)
    })
}

/// Trace-free part of `Lω`.
pub fn conformal_killing(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    restrict_tracefree(&symmetrized_derivative(w, model)?, model)
}

/// Hessian of a function, as a symmetric 2-tensor.
pub fn hessian(f: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(f, Rank::Scalar, "hessian")?;
    symmetrized_derivative(&exterior_d(f, model)?, model)
}

/// `ω⊗ω - ½|ω|² g`, pointwise on nodal samples.
pub fn traceless_square(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "traceless_square")?;
    check(w, model)?;
    let nd = w.nodal()?;
    let n = nd.n_theta;
    let len = w.n_t * n;
    let mut vals = vec![vec![0.0; len]; 3];
    for i in 0..len {
        let (p, q) = (model.metric_tt[i / n], model.metric_thth[i / n]);
        let (a, b) = (nd.values[0][i], nd.values[1][i]);
        let half = 0.5 * (a * a / p + b * b / q);
        vals[0][i] = a * a - half * p;
        vals[1][i] = a * b;
        vals[2][i] = b * b - half * q;
    }
    Ok(TensorField {
        rank: Rank::SymTwoTensor,
        tracefree: true,
        n_t: w.n_t,
        data: FieldData::Nodal(NodalData { n_theta: n, values: vals }),
    })
}

/// `S̊(ω) = ω⊗ω - ½|ω|² g` of a modal 1-form, returned in modal form up to
/// twice the highest input mode.
pub fn s_ring(w: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(w, Rank::OneForm, "s_ring")?;
    let top = w.modes().into_iter().max().unwrap_or(0);
    let nodal = w.to_nodal(crate::fields::default_n_theta(w))?;
    let mut out = traceless_square(&nodal, model)?.to_modal(2 * top)?.pruned(1e-13);
    out.tracefree = true;
    Ok(out)
}

/// `½(∇_jR ξ_i + ∇_iR ξ_j - ⟨dR, ξ⟩ g_{ij})`.
pub fn s_ring_gradient_r(xi: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(xi, Rank::OneForm, "s_ring_gradient_r")?;
    let dr = model.curvature_gradient();
    let mut out = map_blocks(xi, model, Rank::SymTwoTensor, |_, c| {
        let n = c[0].len();
        let tt = (0..n).map(|j| c[0][j] * (0.5 * dr[j])).collect();
        let tth = (0..n).map(|j| c[1][j] * (0.5 * dr[j])).collect();
        let thth = (0..n)
            .map(|j| c[0][j] * (-0.5 * dr[j] * model.jet(j).q / model.jet(j).p))
            .collect();
        Ok(vec![tt, tth, thth])
    })?;
    out.tracefree = true;
    Ok(out)
}

/// `(d^∇u)_{ijk} = ∇_iu_{jk} - ∇_ju_{ik}`.
pub fn exterior_d_nabla(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(u, Rank::SymTwoTensor, "exterior_d_nabla")?;
    map_blocks(u, model, Rank::ThreeTensor, |m, c| {
        let g = dense_grad(model, Rank::SymTwoTensor, m, c)?;
        // ∇_t u_{θk} - ∇_θ u_{tk}: indices (t,θ,k) = 0b01k and (θ,t,k) = 0b10k
        let a = |k: usize| -> Vec<C> { g.c[0b010 | k].iter().zip(&g.c[0b100 | k]).map(|(x, y)| x - y).collect() };
        Ok(vec![a(0), a(1)])
    })
}

/// Formal adjoint of `d^∇` onto trace-free symmetric tensors:
/// `TF[-½(∇^iT_{ijk} + ∇^iT_{ikj})]`.
pub fn d_nabla_adjoint(t: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    expect_rank(t, Rank::ThreeTensor, "d_nabla_adjoint")?;
    let sym = map_blocks(t, model, Rank::SymTwoTensor, |m, c| {
        let g = dense_grad(model, Rank::ThreeTensor, m, c)?;
        let div = contract_first_two(model, &g);
        let d = Dense {
            rank: 2,
            c: div.c.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
        };
        from_dense(Rank::SymTwoTensor, &d)
    })?;
    restrict_tracefree(&sym, model)
}

/// Apply a Laplacian of the given kind (compact stencil, Dirichlet walls).
pub fn laplacian(kind: LaplacianKind, u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    let (scale, k_r) = kind.coefficients(u.rank)?;
    let mut out = map_blocks(u, model, u.rank, |m, c| {
        let d = to_dense(u.rank, c)?;
        from_dense(u.rank, &laplacian::apply_dense(model, m, &d, scale, k_r))
    })?;
    out.tracefree = u.tracefree;
    Ok(out)
}
