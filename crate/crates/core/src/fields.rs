//! Rank-tagged tensor fields stored per Fourier mode in θ, or nodally.
//!
//! A modal field represents `Re Σ_m x_m(t) e^{imθ}` with `m ≥ 0`; the
//! `m = 0` amplitude is kept real. Components are coordinate components in
//! `(t, θ)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceModel;
use crate::smoothstep::Bump1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Scalar,
    OneForm,
    /// General covariant 2-tensor, components `tt, tθ, θt, θθ`.
    TwoTensor,
    /// Symmetric 2-tensor, components `tt, tθ, θθ`.
    SymTwoTensor,
    /// Output of `d^∇`: antisymmetric in the first pair, stored as
    /// `T_{tθt}, T_{tθθ}`.
    ThreeTensor,
    /// General covariant 3-tensor, 8 components, first slot most significant.
    Covariant3,
}

const T: u8 = 0;
const TH: u8 = 1;

impl Rank {
    pub fn n_comps(self) -> usize {
        self.indices().len()
    }

    /// Coordinate index tuple of every stored component (0 = t, 1 = θ).
    pub fn indices(self) -> &'static [&'static [u8]] {
        match self {
            Rank::Scalar => &[&[]],
            Rank::OneForm => &[&[T], &[TH]],
            Rank::TwoTensor => &[&[T, T], &[T, TH], &[TH, T], &[TH, TH]],
            Rank::SymTwoTensor => &[&[T, T], &[T, TH], &[TH, TH]],
            Rank::ThreeTensor => &[&[T, TH, T], &[T, TH, TH]],
            Rank::Covariant3 => &[
                &[T, T, T],
                &[T, T, TH],
                &[T, TH, T],
                &[T, TH, TH],
                &[TH, T, T],
                &[TH, T, TH],
                &[TH, TH, T],
                &[TH, TH, TH],
            ],
        }
    }

    /// How many full-tensor entries each stored component stands for in the
    /// pointwise inner product. `d^∇` outputs are paired over `i < j` only.
    pub fn multiplicity(self, c: usize) -> f64 {
        match (self, c) {
            (Rank::SymTwoTensor, 1) => 2.0,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::OneForm => "one_form",
            Rank::TwoTensor => "two_tensor",
            Rank::SymTwoTensor => "sym_two_tensor",
            Rank::ThreeTensor => "three_tensor",
            Rank::Covariant3 => "covariant3",
        }
    }
}

/// `mult · Π g^{ii}` for component `c` at a node with metric `(p, q)`.
pub(crate) fn comp_weight(rank: Rank, c: usize, p: f64, q: f64) -> f64 {
    rank.indices()[c]
        .iter()
        .fold(rank.multiplicity(c), |acc, &i| acc / if i == T { p } else { q })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeBlock {
    pub m: u32,
    /// `comps[c][j]`
    pub comps: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodalData {
    pub n_theta: usize,
    /// `values[c][j * n_theta + k]` at `θ_k = 2πk / n_theta`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Modal(Vec<ModeBlock>),
    Nodal(NodalData),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub rank: Rank,
    pub tracefree: bool,
    pub n_t: usize,
    pub data: FieldData,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub h1: f64,
    pub l4: f64,
}

fn angular_factor(m: u32) -> f64 {
    if m == 0 {
        2.0 * PI
    } else {
        PI
    }
}

impl TensorField {
    pub fn zeros(rank: Rank, n_t: usize, modes: &[u32]) -> Self {
        let blocks = modes
            .iter()
            .map(|&m| ModeBlock {
                m,
                comps: vec![vec![Complex64::new(0.0, 0.0); n_t]; rank.n_comps()],
            })
            .collect();
        TensorField {
            rank,
            tracefree: false,
            n_t,
            data: FieldData::Modal(blocks),
        }
    }

    /// A single-mode field from per-component amplitudes.
    pub fn from_mode(rank: Rank, m: u32, comps: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(comps.len(), rank.n_comps());
        let n_t = comps[0].len();
        TensorField {
            rank,
            tracefree: false,
            n_t,
            data: FieldData::Modal(vec![ModeBlock { m, comps }]),
        }
    }

    /// A rotationally invariant real field.
    pub fn radial(rank: Rank, comps: Vec<Vec<f64>>) -> Self {
        let comps = comps
            .into_iter()
            .map(|c| c.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
            .collect();
        TensorField::from_mode(rank, 0, comps)
    }

    pub fn with_tracefree(mut self, flag: bool) -> Self {
        self.tracefree = flag;
        self
    }

    pub fn is_modal(&self) -> bool {
        matches!(self.data, FieldData::Modal(_))
    }

    pub fn blocks(&self) -> Result<&[ModeBlock]> {
        match &self.data {
            FieldData::Modal(b) => Ok(b),
            FieldData::Nodal(_) => Err(Error::Representation(
                "operation needs a modal field".into(),
            )),
        }
    }

    pub fn blocks_mut(&mut self) -> Result<&mut Vec<ModeBlock>> {
        match &mut self.data {
            FieldData::Modal(b) => Ok(b),
            FieldData::Nodal(_) => Err(Error::Representation(
                "operation needs a modal field".into(),
            )),
        }
    }

    pub fn nodal(&self) -> Result<&NodalData> {
        match &self.data {
            FieldData::Nodal(n) => Ok(n),
            FieldData::Modal(_) => Err(Error::Representation(
                "operation needs nodal θ samples; convert with to_nodal".into(),
            )),
        }
    }

    pub fn mode(&self, m: u32) -> Option<&ModeBlock> {
        self.blocks().ok()?.iter().find(|b| b.m == m)
    }

    pub fn modes(&self) -> Vec<u32> {
        self.blocks().map(|b| b.iter().map(|b| b.m).collect()).unwrap_or_default()
    }

    fn check_compatible(&self, other: &TensorField) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::Usage(format!(
                "rank mismatch: {} vs {}",
                self.rank.name(),
                other.rank.name()
            )));
        }
        if self.n_t != other.n_t {
            return Err(Error::Usage(format!("grid mismatch: {} vs {}", self.n_t, other.n_t)));
        }
        Ok(())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &TensorField) -> Result<TensorField> {
        self.check_compatible(other)?;
        let tracefree = self.tracefree && other.tracefree;
        match (&self.data, &other.data) {
            (FieldData::Modal(a), FieldData::Modal(b)) => {
                let mut out = a.clone();
                for bb in b {
                    match out.iter_mut().find(|x| x.m == bb.m) {
                        Some(x) => {
                            for (xc, bc) in x.comps.iter_mut().zip(&bb.comps) {
                                for (xv, bv) in xc.iter_mut().zip(bc) {
                                    *xv += bv * alpha;
                                }
                            }
                        }
                        None => out.push(ModeBlock {
                            m: bb.m,
                            comps: bb
                                .comps
                                .iter()
                                .map(|c| c.iter().map(|v| v * alpha).collect())
                                .collect(),
                        }),
                    }
                }
                out.sort_by_key(|b| b.m);
                Ok(TensorField {
                    rank: self.rank,
                    tracefree,
                    n_t: self.n_t,
                    data: FieldData::Modal(out),
                })
            }
            (FieldData::Nodal(a), FieldData::Nodal(b)) if a.n_theta == b.n_theta => {
                let values = a
                    .values
                    .iter()
                    .zip(&b.values)
                    .map(|(x, y)| x.iter().zip(y).map(|(x, y)| x + alpha * y).collect())
                    .collect();
                Ok(TensorField {
                    rank: self.rank,
                    tracefree,
                    n_t: self.n_t,
                    data: FieldData::Nodal(NodalData {
                        n_theta: a.n_theta,
                        values,
                    }),
                })
            }
            _ => Err(Error::Representation(
                "cannot combine modal and nodal fields (or differing θ grids)".into(),
            )),
        }
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> TensorField {
        let mut out = self.clone();
        match &mut out.data {
            FieldData::Modal(b) => {
                for blk in b {
                    for c in &mut blk.comps {
                        for v in c {
                            *v *= alpha;
                        }
                    }
                }
            }
            FieldData::Nodal(n) => {
                for c in &mut n.values {
                    for v in c {
                        *v *= alpha;
                    }
                }
            }
        }
        out
    }

    /// Multiply every component by a real function of the node index.
    pub fn scale_radial(&self, f: impl Fn(usize) -> f64) -> TensorField {
        let mut out = self.clone();
        match &mut out.data {
            FieldData::Modal(b) => {
                for blk in b {
                    for c in &mut blk.comps {
                        for (j, v) in c.iter_mut().enumerate() {
                            *v *= f(j);
                        }
                    }
                }
            }
            FieldData::Nodal(n) => {
                let nt = n.n_theta;
                for c in &mut n.values {
                    for (i, v) in c.iter_mut().enumerate() {
                        *v *= f(i / nt);
                    }
                }
            }
        }
        out
    }

    /// Sample on `n_theta` equispaced angles.
    pub fn to_nodal(&self, n_theta: usize) -> Result<TensorField> {
        let blocks = self.blocks()?;
        if let Some(b) = blocks.iter().find(|b| 2 * b.m as usize >= n_theta) {
            return Err(Error::Representation(format!(
                "{n_theta} angles cannot resolve mode {}",
                b.m
            )));
        }
        let nc = self.rank.n_comps();
        let mut values = vec![vec![0.0; self.n_t * n_theta]; nc];
        for b in blocks {
            let phases: Vec<Complex64> = (0..n_theta)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * (b.m as usize * k % n_theta) as f64 / n_theta as f64))
                .collect();
            for c in 0..nc {
                for j in 0..self.n_t {
                    let x = b.comps[c][j];
                    for (k, ph) in phases.iter().enumerate() {
                        values[c][j * n_theta + k] += (x * ph).re;
                    }
                }
            }
        }
        Ok(TensorField {
            rank: self.rank,
            tracefree: self.tracefree,
            n_t: self.n_t,
            data: FieldData::Nodal(NodalData { n_theta, values }),
        })
    }

    /// Project nodal samples onto modes `0..=max_mode`.
    pub fn to_modal(&self, max_mode: u32) -> Result<TensorField> {
        let nd = self.nodal()?;
        let n = nd.n_theta;
        if 2 * max_mode as usize >= n {
            return Err(Error::Representation(format!(
                "{n} angles cannot resolve mode {max_mode}"
            )));
        }
        let nc = self.rank.n_comps();
        let mut blocks = Vec::new();
        for m in 0..=max_mode {
            let scale = if m == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
            let phases: Vec<Complex64> = (0..n)
                .map(|k| Complex64::from_polar(scale, -2.0 * PI * (m as usize * k % n) as f64 / n as f64))
                .collect();
            let comps = (0..nc)
                .map(|c| {
                    (0..self.n_t)
                        .map(|j| {
                            let s: Complex64 = (0..n).map(|k| phases[k] * nd.values[c][j * n + k]).sum();
                            if m == 0 {
                                Complex64::new(s.re, 0.0)
                            } else {
                                s
                            }
                        })
                        .collect()
                })
                .collect();
            blocks.push(ModeBlock { m, comps });
        }
        Ok(TensorField {
            rank: self.rank,
            tracefree: self.tracefree,
            n_t: self.n_t,
            data: FieldData::Modal(blocks),
        })
    }

    /// Drop Fourier blocks whose largest coefficient is below
    /// `rel_tol` times the largest coefficient of the field.
    pub fn pruned(&self, rel_tol: f64) -> TensorField {
        let mut out = self.clone();
        let cut = rel_tol * self.max_abs();
        if let FieldData::Modal(b) = &mut out.data {
            b.retain(|blk| blk.comps.iter().flatten().any(|v| v.norm() > cut));
        }
        out
    }

    /// Largest absolute coefficient, for smallness checks.
    pub fn max_abs(&self) -> f64 {
        match &self.data {
            FieldData::Modal(b) => b
                .iter()
                .flat_map(|b| b.comps.iter().flatten())
                .map(|v| v.norm())
                .fold(0.0, f64::max),
            FieldData::Nodal(n) => n.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }
}

fn check_model(a: &TensorField, model: &SurfaceModel) -> Result<()> {
    if a.n_t != model.n_t() {
        return Err(Error::Usage(format!(
            "field has {} nodes but the chart has {}",
            a.n_t,
            model.n_t()
        )));
    }
    Ok(())
}

/// `⟨a, b⟩_{L²}` restricted to the nodes selected by `keep`.
pub fn l2_inner_product_where(
    a: &TensorField,
    b: &TensorField,
    model: &SurfaceModel,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    a.check_compatible(b)?;
    check_model(a, model)?;
    let w = &model.chart.quad_weights;
    let nc = a.rank.n_comps();
    let cw = |c: usize, j: usize| comp_weight(a.rank, c, model.metric_tt[j], model.metric_thth[j]);
    match (&a.data, &b.data) {
        (FieldData::Modal(ab), FieldData::Modal(bb)) => {
            let mut acc = 0.0;
            for x in ab {
                let Some(y) = bb.iter().find(|y| y.m == x.m) else { continue };
                let f = angular_factor(x.m);
                for c in 0..nc {
                    for j in (0..a.n_t).filter(|&j| keep(j)) {
                        acc += f * w[j] * cw(c, j) * (x.comps[c][j] * y.comps[c][j].conj()).re;
                    }
                }
            }
            Ok(acc)
        }
        (FieldData::Nodal(x), FieldData::Nodal(y)) if x.n_theta == y.n_theta => {
            let n = x.n_theta;
            let dth = 2.0 * PI / n as f64;
            let mut acc = 0.0;
            for c in 0..nc {
                for j in (0..a.n_t).filter(|&j| keep(j)) {
                    let s: f64 = (0..n).map(|k| x.values[c][j * n + k] * y.values[c][j * n + k]).sum();
                    acc += dth * w[j] * cw(c, j) * s;
                }
            }
            Ok(acc)
        }
        _ => Err(Error::Representation(
            "inner product of modal with nodal field".into(),
        )),
    }
}

pub fn l2_inner_product(a: &TensorField, b: &TensorField, model: &SurfaceModel) -> Result<f64> {
    l2_inner_product_where(a, b, model, |_| true)
}

pub fn l2_norm(a: &TensorField, model: &SurfaceModel) -> Result<f64> {
    Ok(l2_inner_product(a, a, model)?.max(0.0).sqrt())
}

pub fn l2_norm_where(a: &TensorField, model: &SurfaceModel, keep: impl Fn(usize) -> bool) -> Result<f64> {
    Ok(l2_inner_product_where(a, a, model, keep)?.max(0.0).sqrt())
}

/// Pointwise `|a|_g²` on the nodal grid, `out[j * n_theta + k]`.
pub fn pointwise_norm_sq(a: &TensorField, model: &SurfaceModel) -> Result<Vec<f64>> {
    let nd = a.nodal()?;
    let n = nd.n_theta;
    let mut out = vec![0.0; a.n_t * n];
    for c in 0..a.rank.n_comps() {
        for j in 0..a.n_t {
            let cw = comp_weight(a.rank, c, model.metric_tt[j], model.metric_thth[j]);
            for k in 0..n {
                let v = nd.values[c][j * n + k];
                out[j * n + k] += cw * v * v;
            }
        }
    }
    Ok(out)
}

/// Angular resolution used when a modal field must be sampled nodally.
pub fn default_n_theta(a: &TensorField) -> usize {
    let mmax = a.modes().into_iter().max().unwrap_or(0) as usize;
    4 * mmax + 4
}

pub fn l4_norm(a: &TensorField, model: &SurfaceModel) -> Result<f64> {
    check_model(a, model)?;
    let nodal = if a.is_modal() {
        a.to_nodal(default_n_theta(a))?
    } else {
        a.clone()
    };
    let n = nodal.nodal()?.n_theta;
    let p = pointwise_norm_sq(&nodal, model)?;
    let dth = 2.0 * PI / n as f64;
    let mut acc = 0.0;
    for j in 0..a.n_t {
        let s: f64 = (0..n).map(|k| p[j * n + k] * p[j * n + k]).sum();
        acc += dth * model.chart.quad_weights[j] * s;
    }
    Ok(acc.sqrt().sqrt())
}

/// L², H¹ (value plus covariant derivative) and L⁴ norms of a modal field.
pub fn norms(a: &TensorField, model: &SurfaceModel) -> Result<NormReport> {
    let l2 = l2_norm(a, model)?;
    let grad = crate::operators::covariant_derivative(a, model)?;
    let g2 = l2_norm(&grad, model)?;
    let l4 = l4_norm(a, model)?;
    Ok(NormReport {
        l2,
        h1: (l2 * l2 + g2 * g2).sqrt(),
        l4,
    })
}

/// Pointwise `g^{ij} u_{ij}` of a symmetric 2-tensor, per mode.
pub fn trace(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    if u.rank != Rank::SymTwoTensor {
        return Err(Error::Usage("trace needs a symmetric 2-tensor".into()));
    }
    check_model(u, model)?;
    let (p, q) = (&model.metric_tt, &model.metric_thth);
    match &u.data {
        FieldData::Modal(b) => {
            let blocks = b
                .iter()
                .map(|b| ModeBlock {
                    m: b.m,
                    comps: vec![(0..u.n_t)
                        .map(|j| b.comps[0][j] / p[j] + b.comps[2][j] / q[j])
                        .collect()],
                })
                .collect();
            Ok(TensorField {
                rank: Rank::Scalar,
                tracefree: false,
                n_t: u.n_t,
                data: FieldData::Modal(blocks),
            })
        }
        FieldData::Nodal(nd) => {
            let n = nd.n_theta;
            let values = vec![(0..u.n_t * n)
                .map(|i| nd.values[0][i] / p[i / n] + nd.values[2][i] / q[i / n])
                .collect()];
            Ok(TensorField {
                rank: Rank::Scalar,
                tracefree: false,
                n_t: u.n_t,
                data: FieldData::Nodal(NodalData { n_theta: n, values }),
            })
        }
    }
}

/// `u - ½ (tr_g u) g`.
pub fn restrict_tracefree(u: &TensorField, model: &SurfaceModel) -> Result<TensorField> {
    let tr = trace(u, model)?;
    let (p, q) = (&model.metric_tt, &model.metric_thth);
    let mut out = u.clone();
    match (&mut out.data, &tr.data) {
        (FieldData::Modal(b), FieldData::Modal(tb)) => {
            for (blk, t) in b.iter_mut().zip(tb) {
                for j in 0..u.n_t {
                    let half = t.comps[0][j] * 0.5;
                    blk.comps[0][j] -= half * p[j];
                    blk.comps[2][j] -= half * q[j];
                }
            }
        }
        (FieldData::Nodal(nd), FieldData::Nodal(tn)) => {
            let n = nd.n_theta;
            for i in 0..u.n_t * n {
                let half = 0.5 * tn.values[0][i];
                nd.values[0][i] -= half * p[i / n];
                nd.values[2][i] -= half * q[i / n];
            }
        }
        _ => unreachable!(),
    }
    out.tracefree = true;
    Ok(out)
}

/// The metric as a rotationally invariant symmetric 2-tensor.
pub fn metric_field(model: &SurfaceModel) -> TensorField {
    TensorField::radial(
        Rank::SymTwoTensor,
        vec![model.metric_tt.clone(), vec![0.0; model.n_t()], model.metric_thth.clone()],
    )
}

/// `Re(z^n)` pulled back to the chart, `s = |z| = tanh(t/2)`.
pub fn harmonic_function(n: u32, model: &SurfaceModel) -> Result<TensorField> {
    check_disk(model)?;
    if n < 1 {
        return Err(Error::Usage("harmonic forms need n >= 1".into()));
    }
    let vals = model
        .chart
        .t_nodes
        .iter()
        .map(|&t| Complex64::new((0.5 * t).tanh().powi(n as i32), 0.0))
        .collect();
    Ok(TensorField::from_mode(Rank::Scalar, n, vec![vals]))
}

fn check_disk(model: &SurfaceModel) -> Result<()> {
    use crate::geometry::MetricProfile;
    let ok = match &model.profile {
        MetricProfile::HyperbolicDisk => true,
        MetricProfile::Conformal { base, .. } => matches!(**base, MetricProfile::HyperbolicDisk),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Usage("harmonic forms are defined on (perturbed) disk models only".into()))
    }
}

/// `d Re(z^n)` pulled back to the chart.
pub fn harmonic_oneform(n: u32, model: &SurfaceModel) -> Result<TensorField> {
    check_disk(model)?;
    if n < 1 {
        return Err(Error::Usage("harmonic forms need n >= 1".into()));
    }
    let nf = n as f64;
    let (xt, xth) = model
        .chart
        .t_nodes
        .iter()
        .map(|&t| {
            let s = (0.5 * t).tanh();
            let sn1 = s.powi(n as i32 - 1);
            (
                Complex64::new(nf * sn1 * (1.0 - s * s) * 0.5, 0.0),
                Complex64::new(0.0, nf * sn1 * s),
            )
        })
        .unzip();
    Ok(TensorField::from_mode(Rank::OneForm, n, vec![xt, xth]))
}

/// Closed form of `‖d Re(z^n)‖²` over the annulus `t ∈ [t_lo, t_hi]`.
pub fn harmonic_oneform_norm_sq(n: u32, t_lo: f64, t_hi: f64) -> f64 {
    let s = |t: f64| (0.5 * t).tanh().powi(2 * n as i32);
    PI * n as f64 * (s(t_hi) - s(t_lo))
}

/// Multiply a field by a radial plateau profile that is 1 on
/// `[t_lo + ramp, t_hi - ramp]` and vanishes outside `[t_lo, t_hi]`.
pub fn plateau_cut(a: &TensorField, model: &SurfaceModel, t_lo: f64, t_hi: f64, ramp: f64) -> TensorField {
    let step = crate::smoothstep::Smoothstep::new(6);
    let t = &model.chart.t_nodes;
    a.scale_radial(|j| step.value((t[j] - t_lo) / ramp) * step.value((t_hi - t[j]) / ramp))
}

/// Deterministic smooth field supported in `support`, built from a few low
/// Fourier modes of the chart with random frame amplitudes.
pub fn random_bump_field(rank: Rank, support: (f64, f64), seed: u64, model: &SurfaceModel) -> Result<TensorField> {
    let (lo, hi) = support;
    let c = &model.chart;
    if !(lo > c.t_min() && hi < c.t_max() && lo < hi) {
        return Err(Error::Usage(format!(
            "bump support [{lo}, {hi}] must lie strictly inside ({}, {})",
            c.t_min(),
            c.t_max()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump = Bump1d::new(lo, hi, 6);
    let modes: Vec<u32> = c.theta_modes.iter().copied().filter(|&m| m <= 3).collect();
    let modes = if modes.is_empty() { vec![c.theta_modes[0]] } else { modes };
    let idx = rank.indices();
    let mut blocks = Vec::new();
    for &m in &modes {
        let mut comps = Vec::with_capacity(idx.len());
        for ind in idx {
            let amp = if m == 0 {
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            let wobble = rng.gen_range(0.0..0.5);
            let freq = rng.gen_range(0.5..2.0) / (hi - lo) * 2.0 * PI;
            let phase = rng.gen_range(0.0..2.0 * PI);
            let vals = c
                .t_nodes
                .iter()
                .zip(&model.jets)
                .map(|(&t, jet)| {
                    // orthonormal-frame amplitude converted to coordinates
                    let frame = ind.iter().fold(1.0, |a, &i| a * if i == T { jet.p } else { jet.q }.sqrt());
                    amp * (bump.value(t) * (1.0 + wobble * (freq * (t - lo) + phase).sin()) * frame)
                })
                .collect();
            comps.push(vals);
        }
        blocks.push(ModeBlock { m, comps });
    }
    Ok(TensorField {
        rank,
        tracefree: false,
        n_t: c.len(),
        data: FieldData::Modal(blocks),
    })
}

/// Random trace-free symmetric bump.
pub fn random_tracefree_bump(support: (f64, f64), seed: u64, model: &SurfaceModel) -> Result<TensorField> {
    let h = random_bump_field(Rank::SymTwoTensor, support, seed, model)?;
    restrict_tracefree(&h, model)
}

/// Write a field as CSV. Modal columns: `t, mode, component, re, im`;
/// nodal columns: `t, theta, component, value`. Components are named by
/// their coordinate indices, e.g. `tth` for `u_{tθ}`.
pub fn write_csv<W: Write>(a: &TensorField, model: &SurfaceModel, out: W) -> Result<()> {
    check_model(a, model)?;
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<String> = a
        .rank
        .indices()
        .iter()
        .map(|ix| {
            if ix.is_empty() {
                "f".to_string()
            } else {
                ix.iter().map(|&i| if i == T { "t" } else { "th" }).collect()
            }
        })
        .collect();
    let t = &model.chart.t_nodes;
    match &a.data {
        FieldData::Modal(blocks) => {
            w.write_record(["t", "mode", "component", "re", "im"])?;
            for b in blocks {
                for (c, name) in names.iter().enumerate() {
                    for j in 0..a.n_t {
                        let v = b.comps[c][j];
                        w.write_record([
                            format!("{:.17e}", t[j]),
                            b.m.to_string(),
                            name.clone(),
                            format!("{:.17e}", v.re),
                            format!("{:.17e}", v.im),
                        ])?;
                    }
                }
            }
        }
        FieldData::Nodal(nd) => {
            w.write_record(["t", "theta", "component", "value"])?;
            let n = nd.n_theta;
            for (c, name) in names.iter().enumerate() {
                for j in 0..a.n_t {
                    for k in 0..n {
                        w.write_record([
                            format!("{:.17e}", t[j]),
                            format!("{:.17e}", 2.0 * PI * k as f64 / n as f64),
                            name.clone(),
                            format!("{:.17e}", nd.values[c][j * n + k]),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
