//! Discrete Hodge decomposition of 1-forms and the TT / `Im L̊` split of
//! trace-free symmetric tensors.
//!
//! Both are computed as weighted least-squares projections built from the
//! same discrete `d` and `L̊` used elsewhere, so the parts are orthogonal in
//! the discrete L² product up to solver rounding.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{comp_weight, l2_inner_product, l2_norm, FieldData, ModeBlock, Rank, TensorField};
use crate::geometry::SurfaceModel;
use crate::linalg::BandedHermitian;
use crate::operators::{codifferential_direct, conformal_killing, exterior_d, hodge_star};

type C = Complex64;

#[derive(Clone, Debug)]
pub struct OneFormDecomposition {
    /// Discrete harmonic remainder `ω - du - *dv`.
    pub eta: TensorField,
    pub u: TensorField,
    pub v: TensorField,
    pub exact: TensorField,
    pub coexact: TensorField,
    /// `‖dη‖ + ‖d*η‖`.
    pub residual: f64,
    pub summary: DecompositionSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionSummary {
    pub norm_input: f64,
    pub norm_eta: f64,
    pub norm_exact: f64,
    pub norm_coexact: f64,
    pub reconstruction_error: f64,
    pub harmonic_residual: f64,
    /// `|⟨du, *dv⟩|`, `|⟨η, du⟩|`, `|⟨η, *dv⟩|`.
    pub inner_exact_coexact: f64,
    pub inner_eta_exact: f64,
    pub inner_eta_coexact: f64,
}

#[derive(Clone, Debug)]
pub struct TTSplit {
    pub tt_part: TensorField,
    pub potential: TensorField,
    pub image_part: TensorField,
    /// `‖h - tt - L̊ξ‖ / ‖h‖`.
    pub residual: f64,
    pub summary: TTSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct TTSummary {
    pub norm_input: f64,
    pub norm_tt: f64,
    pub norm_image: f64,
    pub norm_div_tt: f64,
    pub inner_tt_image: f64,
}

/// A linear single-mode map as sparse columns over the interior unknowns,
/// ordered node-major, together with the output weights.
struct ModeMatrix {
    cols: Vec<Vec<(usize, C)>>,
    w: Vec<f64>,
    unknowns: Vec<(usize, usize)>,
    n_out: usize,
    n_t: usize,
}

fn mode_matrix(
    model: &SurfaceModel,
    m: u32,
    in_rank: Rank,
    out_rank: Rank,
    op: impl Fn(&TensorField) -> Result<TensorField>,
) -> Result<ModeMatrix> {
    let n = model.n_t();
    let unknowns: Vec<(usize, usize)> = model
        .chart
        .interior()
        .flat_map(|j| (0..in_rank.n_comps()).map(move |c| (c, j)))
        .collect();
    let mut cols = Vec::with_capacity(unknowns.len());
    for &(c, j) in &unknowns {
        let mut comps = vec![vec![C::new(0.0, 0.0); n]; in_rank.n_comps()];
        comps[c][j] = C::new(1.0, 0.0);
        let out = op(&TensorField::from_mode(in_rank, m, comps))?;
        let blk = &out.blocks()?[0];
        let mut col = Vec::new();
        for (oc, vals) in blk.comps.iter().enumerate() {
            for (jj, v) in vals.iter().enumerate() {
                if *v != C::new(0.0, 0.0) {
                    col.push((oc * n + jj, *v));
                }
            }
        }
        col.sort_by_key(|e| e.0);
        cols.push(col);
    }
    let q = &model.chart.quad_weights;
    let w = (0..out_rank.n_comps())
        .flat_map(|oc| (0..n).map(move |j| q[j] * comp_weight(out_rank, oc, model.metric_tt[j], model.metric_thth[j])))
        .collect();
    Ok(ModeMatrix {
        cols,
        w,
        unknowns,
        n_out: out_rank.n_comps() * n,
        n_t: n,
    })
}

impl ModeMatrix {
    /// `Σ_r conj(a_r) w_r b_r` over two sparse columns.
    fn dot(&self, a: &[(usize, C)], b: &[(usize, C)]) -> C {
        let (mut i, mut k) = (0, 0);
        let mut acc = C::new(0.0, 0.0);
        while i < a.len() && k < b.len() {
            match a[i].0.cmp(&b[k].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1.conj() * b[k].1 * self.w[a[i].0];
                    i += 1;
                    k += 1;
                }
            }
        }
        acc
    }

    /// Weighted least squares: minimise `‖A x - b‖_W`.
    fn project(&self, b: &[Vec<C>], what: &str) -> Result<Vec<C>> {
        let flat: Vec<C> = b.iter().flatten().copied().collect();
        debug_assert_eq!(flat.len(), self.n_out);
        let nu = self.cols.len();
        // columns only couple through shared output rows; find the band
        let span = |c: &Vec<(usize, C)>| -> (usize, usize) {
            let nodes = c.iter().map(|e| e.0 % self.n_t);
            (nodes.clone().min().unwrap_or(0), nodes.max().unwrap_or(0))
        };
        let spans: Vec<(usize, usize)> = self.cols.iter().map(span).collect();
        let mut bw = 0;
        for a in 0..nu {
            for b in (0..a).rev() {
                if spans[b].1 + 8 < spans[a].0 {
                    break;
                }
                if spans[b].1 >= spans[a].0 && spans[a].1 >= spans[b].0 {
                    bw = bw.max(a - b);
                }
            }
        }
        let mut k = BandedHermitian::zeros(nu, bw);
        for a in 0..nu {
            for b in a.saturating_sub(bw)..=a {
                k.set(a, b, self.dot(&self.cols[b], &self.cols[a]).conj());
            }
        }
        let rhs: Vec<C> = self
            .cols
            .iter()
            .map(|c| c.iter().map(|&(r, v)| v.conj() * self.w[r] * flat[r]).sum())
            .collect();
        let x = k.clone().factor()?.solve(&rhs);
        let kx = k.mul(&x);
        let resid: f64 = kx.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if resid > 1e-8 * scale {
            return Err(Error::Numerical {
                message: format!("{what}: solve residual {resid:e} too large"),
                log: vec![format!("dimension {nu}, bandwidth {bw}, rhs norm {scale:e}")],
            });
        }
        Ok(x)
    }

    fn to_comps(&self, x: &[C], n_comps: usize, n: usize, real: bool) -> Vec<Vec<C>> {
        let mut comps = vec![vec![C::new(0.0, 0.0); n]; n_comps];
        for (i, &(c, j)) in self.unknowns.iter().enumerate() {
            comps[c][j] = if real { C::new(x[i].re, 0.0) } else { x[i] };
        }
        comps
    }
}

fn modal(rank: Rank, n_t: usize, blocks: Vec<ModeBlock>) -> TensorField {
    TensorField {
        rank,
        tracefree: false,
        n_t,
        data: FieldData::Modal(blocks),
    }
}

/// `ω = η + du + *dv` with `u, v` vanishing on the walls.
pub fn hodge_decompose(omega: &TensorField, model: &SurfaceModel) -> Result<OneFormDecomposition> {
    if omega.rank != Rank::OneForm {
        return Err(Error::Usage("hodge_decompose needs a 1-form".into()));
    }
    let n = model.n_t();
    let star = hodge_star(omega, model)?;
    let mut ub = Vec::new();
    let mut vb = Vec::new();
    for blk in omega.blocks()? {
        let m = blk.m;
        let d = mode_matrix(model, m, Rank::Scalar, Rank::OneForm, |f| exterior_d(f, model))?;
        let u = d.project(&blk.comps, "exact part")?;
        // *: L²-isometry, so the co-exact potential solves the same normal
        // equations against *^{-1} ω = -*ω
        let neg_star: Vec<Vec<C>> = star
            .mode(m)
            .expect("mode present")
            .comps
            .iter()
            .map(|c| c.iter().map(|v| -v).collect())
            .collect();
        let v = d.project(&neg_star, "co-exact part")?;
        ub.push(ModeBlock { m, comps: d.to_comps(&u, 1, n, m == 0) });
        vb.push(ModeBlock { m, comps: d.to_comps(&v, 1, n, m == 0) });
    }
    let u = modal(Rank::Scalar, n, ub);
    let v = modal(Rank::Scalar, n, vb);
    let exact = exterior_d(&u, model)?;
    let coexact = hodge_star(&exterior_d(&v, model)?, model)?;
    let eta = omega.sub(&exact)?.sub(&coexact)?;
    let recon = omega.sub(&eta.add(&exact)?.add(&coexact)?)?;
    let residual = l2_norm(&exterior_d(&eta, model)?, model)? + l2_norm(&codifferential_direct(&eta, model)?, model)?;
    let summary = DecompositionSummary {
        norm_input: l2_norm(omega, model)?,
        norm_eta: l2_norm(&eta, model)?,
        norm_exact: l2_norm(&exact, model)?,
        norm_coexact: l2_norm(&coexact, model)?,
        reconstruction_error: l2_norm(&recon, model)?,
        harmonic_residual: residual,
        inner_exact_coexact: l2_inner_product(&exact, &coexact, model)?.abs(),
        inner_eta_exact: l2_inner_product(&eta, &exact, model)?.abs(),
        inner_eta_coexact: l2_inner_product(&eta, &coexact, model)?.abs(),
    };
    Ok(OneFormDecomposition {
        eta,
        u,
        v,
        exact,
        coexact,
        residual,
        summary,
    })
}

/// `h = tt + L̊ξ` with `ξ` vanishing on the walls and `tt` orthogonal to
/// the image of `L̊`.
pub fn tt_project(h: &TensorField, model: &SurfaceModel) -> Result<TTSplit> {
    if h.rank != Rank::SymTwoTensor {
        return Err(Error::Usage("tt_project needs a symmetric 2-tensor".into()));
    }
    let n = model.n_t();
    let mut xb = Vec::new();
    for blk in h.blocks()? {
        let m = blk.m;
        let l = mode_matrix(model, m, Rank::OneForm, Rank::SymTwoTensor, |w| conformal_killing(w, model))?;
        let x = l.project(&blk.comps, "TT projection")?;
        xb.push(ModeBlock { m, comps: l.to_comps(&x, 2, n, m == 0) });
    }
    let potential = modal(Rank::OneForm, n, xb);
    let image_part = conformal_killing(&potential, model)?;
    let tt_part = h.sub(&image_part)?.with_tracefree(true);
    let norm_input = l2_norm(h, model)?;
    let recon = l2_norm(&h.sub(&tt_part.add(&image_part)?)?, model)?;
    let summary = TTSummary {
        norm_input,
        norm_tt: l2_norm(&tt_part, model)?,
        norm_image: l2_norm(&image_part, model)?,
        norm_div_tt: l2_norm(&crate::operators::divergence(&tt_part, model)?, model)?,
        inner_tt_image: l2_inner_product(&tt_part, &image_part, model)?.abs(),
    };
    Ok(TTSplit {
        tt_part,
        potential,
        image_part,
        residual: recon / norm_input.max(f64::MIN_POSITIVE),
        summary,
    })
}
