//! Per-mode matrices of the Laplacians in real stacked-component form.
//!
//! For `m > 0` the unknown for a component with `k` angular indices is the
//! real `y` in `x = i^k y`; with this phase choice the rotationally
//! symmetric operators have real matrices. Unknowns are ordered
//! component-major, `c * N_t + j`.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dense::{to_dense, Dense, C};
use super::laplacian::{apply_dense, LaplacianKind};
use crate::error::{Error, Result};
use crate::fields::{comp_weight, Rank};
use crate::geometry::SurfaceModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `Δ` on functions.
    ScalarLaplacian,
    /// `∇*∇` on 1-forms.
    RoughLaplacian,
    HodgeLaplacian,
    DivLRing,
    /// `Δ_L` on trace-free symmetric 2-tensors, unknowns `(h_tt, h_tθ)`.
    Lichnerowicz,
    /// `Δ_K` on trace-free symmetric 2-tensors.
    KillingLaplacian,
    /// The identity, as a solver fixture.
    Identity,
}

impl OperatorKind {
    fn rank(self) -> Rank {
        match self {
            OperatorKind::ScalarLaplacian | OperatorKind::Identity => Rank::Scalar,
            OperatorKind::RoughLaplacian | OperatorKind::HodgeLaplacian | OperatorKind::DivLRing => Rank::OneForm,
            OperatorKind::Lichnerowicz | OperatorKind::KillingLaplacian => Rank::SymTwoTensor,
        }
    }

    fn laplacian(self) -> Option<LaplacianKind> {
        match self {
            OperatorKind::ScalarLaplacian | OperatorKind::RoughLaplacian => Some(LaplacianKind::Rough),
            OperatorKind::HodgeLaplacian => Some(LaplacianKind::Hodge),
            OperatorKind::DivLRing => Some(LaplacianKind::DivLRing),
            OperatorKind::Lichnerowicz => Some(LaplacianKind::Lichnerowicz),
            OperatorKind::KillingLaplacian => Some(LaplacianKind::Killing),
            OperatorKind::Identity => None,
        }
    }

    /// Number of unknown components per node.
    pub fn n_comps(self) -> usize {
        match self.rank() {
            Rank::Scalar => 1,
            _ => 2,
        }
    }

    /// Angular index count of each unknown component.
    fn theta_counts(self) -> &'static [u32] {
        match self.rank() {
            Rank::Scalar => &[0],
            _ => &[0, 1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub mode: u32,
    pub n_t: usize,
    pub matrix: DMatrix<f64>,
    /// Diagonal of the discrete L² product on the unknowns.
    pub weight: Vec<f64>,
    /// Unknowns carrying Dirichlet identity rows.
    pub dirichlet: Vec<bool>,
}

/// Coordinate components of the single-mode field behind an unknown vector.
pub(crate) fn unknowns_to_comps(kind: OperatorKind, model: &SurfaceModel, m: u32, y: &[f64]) -> Vec<Vec<C>> {
    let n = model.n_t();
    let phase = |k: u32| if m == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 1.0).powu(k) };
    let mut comps: Vec<Vec<C>> = kind
        .theta_counts()
        .iter()
        .enumerate()
        .map(|(c, &k)| (0..n).map(|j| phase(k) * y[c * n + j]).collect())
        .collect();
    if kind.rank() == Rank::SymTwoTensor {
        let thth = (0..n).map(|j| -comps[0][j] * (model.jet(j).q / model.jet(j).p)).collect();
        comps.push(thth);
    }
    comps
}

/// Inverse of [`unknowns_to_comps`], returning the largest imaginary
/// remainder as well.
pub(crate) fn comps_to_unknowns(kind: OperatorKind, m: u32, comps: &[Vec<C>]) -> (Vec<f64>, f64) {
    let n = comps[0].len();
    let mut y = Vec::with_capacity(kind.n_comps() * n);
    let mut im_max: f64 = 0.0;
    for (c, &k) in kind.theta_counts().iter().enumerate() {
        let unphase = if m == 0 { C::new(1.0, 0.0) } else { C::new(0.0, -1.0).powu(k) };
        for j in 0..n {
            let v = comps[c][j] * unphase;
            im_max = im_max.max(v.im.abs());
            y.push(v.re);
        }
    }
    (y, im_max)
}

fn apply_comps(kind: OperatorKind, model: &SurfaceModel, m: u32, comps: &[Vec<C>]) -> Result<Vec<Vec<C>>> {
    let rank = kind.rank();
    match kind.laplacian() {
        None => Ok(comps.to_vec()),
        Some(lk) => {
            let (scale, k_r) = lk.coefficients(rank)?;
            let d: Dense = to_dense(rank, comps)?;
            let out = apply_dense(model, m, &d, scale, k_r);
            super::dense::from_dense(rank, &out)
        }
    }
}

/// Assemble the real matrix of `kind` on Fourier block `mode`.
pub fn assemble(kind: OperatorKind, mode: u32, model: &SurfaceModel) -> Result<AssembledOperator> {
    let n = model.n_t();
    let nc = kind.n_comps();
    let dim = nc * n;
    let mut matrix = DMatrix::<f64>::zeros(dim, dim);
    let mut y = vec![0.0; dim];
    for col in 0..dim {
        y[col] = 1.0;
        let comps = unknowns_to_comps(kind, model, mode, &y);
        let out = apply_comps(kind, model, mode, &comps)?;
        let (vals, im) = comps_to_unknowns(kind, mode, &out);
        if im > 1e-9 * vals.iter().fold(1.0f64, |a, v| a.max(v.abs())) {
            return Err(Error::numerical(format!(
                "block {mode} of {kind:?} is not real under the phase convention (imaginary part {im:e})"
            )));
        }
        // only the three neighbouring nodes can be nonzero
        let j = col % n;
        for c in 0..nc {
            for jj in j.saturating_sub(1)..(j + 2).min(n) {
                matrix[(c * n + jj, col)] = vals[c * n + jj];
            }
        }
        y[col] = 0.0;
    }
    let w = &model.chart.quad_weights;
    let mut weight = Vec::with_capacity(dim);
    for c in 0..nc {
        for j in 0..n {
            let (p, q) = (model.metric_tt[j], model.metric_thth[j]);
            let cw = match kind.rank() {
                Rank::SymTwoTensor if c == 0 => 2.0 / (p * p),
                Rank::SymTwoTensor => 2.0 / (p * q),
                r => comp_weight(r, c, p, q),
            };
            weight.push(w[j] * cw);
        }
    }
    let dirichlet = (0..dim)
        .map(|i| kind != OperatorKind::Identity && model.chart.is_wall(i % n))
        .collect();
    Ok(AssembledOperator {
        kind,
        mode,
        n_t: n,
        matrix,
        weight,
        dirichlet,
    })
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Indices of the non-Dirichlet unknowns.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.dirichlet[i]).collect()
    }

    /// `‖WA - (WA)ᵀ‖_F / ‖WA‖_F` on the interior block.
    pub fn weighted_symmetry_defect(&self) -> f64 {
        let idx = self.interior();
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &idx {
            for &k in &idx {
                let a = self.weight[i] * self.matrix[(i, k)];
                let b = self.weight[k] * self.matrix[(k, i)];
                num += (a - b) * (a - b);
                den += a * a;
            }
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    /// Apply to a single-mode field given by coordinate components.
    pub fn apply_to_comps(&self, model: &SurfaceModel, comps: &[Vec<C>]) -> Result<Vec<Vec<C>>> {
        let (y, _) = comps_to_unknowns(self.kind, self.mode, comps);
        let v = &self.matrix * nalgebra::DVector::from_vec(y);
        Ok(unknowns_to_comps(self.kind, model, self.mode, v.as_slice()))
    }

    /// Coordinate-list export: a header line, then `row col value` for every
    /// nonzero entry, zero-based.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# kind={:?} mode={} dim={} (row col value, zero-based, component-major)",
            self.kind,
            self.mode,
            self.dim()
        )?;
        for col in 0..self.dim() {
            for row in 0..self.dim() {
                let v = self.matrix[(row, col)];
                if v != 0.0 {
                    writeln!(out, "{row} {col} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}
