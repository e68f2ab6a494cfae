//! Compact (three-point, self-adjoint) rough Laplacian per Fourier mode.

use serde::{Deserialize, Serialize};

use super::dense::{frame_scale, Dense, C};
use crate::error::{Error, Result};
use crate::fields::Rank;
use crate::geometry::SurfaceModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `∇*∇` on any supported rank.
    Rough,
    /// `∇*∇ + R/2` on 1-forms (equal to `∇*∇` on functions).
    Hodge,
    /// `∇*∇ + 2R` on trace-free symmetric 2-tensors.
    Lichnerowicz,
    /// `∇*∇ + R` on trace-free symmetric 2-tensors.
    Killing,
    /// `½(∇*∇ - R/2)` on 1-forms.
    DivLRing,
}

impl LaplacianKind {
    /// `(scale, curvature multiple)` so that the operator is
    /// `scale · (∇*∇ + k R)`.
    pub(crate) fn coefficients(self, rank: Rank) -> Result<(f64, f64)> {
        use LaplacianKind::*;
        match (self, rank) {
            (Rough, Rank::Scalar | Rank::OneForm | Rank::SymTwoTensor | Rank::TwoTensor) => Ok((1.0, 0.0)),
            (Hodge, Rank::Scalar) => Ok((1.0, 0.0)),
            (Hodge, Rank::OneForm) => Ok((1.0, 0.5)),
            (Lichnerowicz, Rank::SymTwoTensor) => Ok((1.0, 2.0)),
            (Killing, Rank::SymTwoTensor) => Ok((1.0, 1.0)),
            (DivLRing, Rank::OneForm) => Ok((0.5, -0.5)),
            _ => Err(Error::Usage(format!(
                "{self:?} Laplacian is not defined on {}",
                rank.name()
            ))),
        }
    }
}

/// Frame version of `∇_θ` at one node: `i m x + κ G x`.
fn angular(m: u32, kappa: f64, rank: usize, x: &[C]) -> Vec<C> {
    let im = C::new(0.0, m as f64);
    (0..x.len())
        .map(|idx| {
            let mut v = x[idx] * im;
            for slot in 0..rank {
                let bit = 1usize << (rank - 1 - slot);
                if idx & bit != 0 {
                    v += x[idx ^ bit] * kappa;
                } else {
                    v -= x[idx ^ bit] * kappa;
                }
            }
            v
        })
        .collect()
}

/// `scale · (∇*∇ + k R) u` on interior nodes, identity on wall nodes.
pub(crate) fn apply_dense(model: &SurfaceModel, m: u32, u: &Dense, scale: f64, k_r: f64) -> Dense {
    let r = u.rank;
    let n = u.n();
    let nc = 1usize << r;
    let h = model.chart.spacing;
    let chart = &model.chart;
    let s: Vec<Vec<f64>> = (0..nc)
        .map(|idx| (0..n).map(|j| frame_scale(model, r, idx, j)).collect())
        .collect();
    let frame: Vec<Vec<C>> = (0..nc)
        .map(|idx| (0..n).map(|j| u.c[idx][j] * s[idx][j]).collect())
        .collect();
    let mut out = Dense::zeros(r, n);
    let curv = model.scalar_curvature_values();
    for j in 0..n {
        if chart.is_wall(j) {
            for idx in 0..nc {
                out.c[idx][j] = u.c[idx][j];
            }
            continue;
        }
        let jet = model.jet(j);
        let w = jet.sqrt_det();
        let a_hi = model.flux(Some(j));
        let a_lo = if j == 0 { 0.0 } else { model.flux(Some(j - 1)) };
        let kappa = jet.dq / (2.0 * w);
        let x: Vec<C> = (0..nc).map(|idx| frame[idx][j]).collect();
        let mx = angular(m, kappa, r, &x);
        let mmx = angular(m, kappa, r, &mx);
        for idx in 0..nc {
            let up = frame[idx][j + 1] - x[idx];
            let down = if j == 0 { C::new(0.0, 0.0) } else { x[idx] - frame[idx][j - 1] };
            let radial = -(up * a_hi - down * a_lo) / (w * h * h);
            let ang = -mmx[idx] / jet.q;
            let val = radial + ang + x[idx] * (k_r * curv[j]);
            out.c[idx][j] = val * scale / s[idx][j];
        }
    }
    out
}
