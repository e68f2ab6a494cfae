//! Single-mode tensors with all `2^rank` components, index bits ordered
//! with the first slot most significant (bit value 1 = θ).

use num_complex::Complex64;

use super::stencil::d1;
use crate::error::{Error, Result};
use crate::fields::Rank;
use crate::geometry::SurfaceModel;

pub(crate) type C = Complex64;

#[derive(Clone, Debug)]
pub(crate) struct Dense {
    pub rank: usize,
    pub c: Vec<Vec<C>>,
}

impl Dense {
    pub fn zeros(rank: usize, n: usize) -> Self {
        Dense {
            rank,
            c: vec![vec![C::new(0.0, 0.0); n]; 1 << rank],
        }
    }

    pub fn n(&self) -> usize {
        self.c[0].len()
    }
}

pub(crate) fn theta_count(idx: usize) -> i32 {
    idx.count_ones() as i32
}

/// Coordinate-to-frame scale `P^{-a/2} Q^{-b/2}` for a component with
/// `a` radial and `b` angular indices.
pub(crate) fn frame_scale(model: &SurfaceModel, rank: usize, idx: usize, j: usize) -> f64 {
    let nth = theta_count(idx);
    let nt = rank as i32 - nth;
    let m = model.jet(j);
    m.p.powf(-0.5 * nt as f64) * m.q.powf(-0.5 * nth as f64)
}

pub(crate) fn to_dense(rank: Rank, comps: &[Vec<C>]) -> Result<Dense> {
    let n = comps[0].len();
    let z = vec![C::new(0.0, 0.0); n];
    Ok(match rank {
        Rank::Scalar => Dense { rank: 0, c: comps.to_vec() },
        Rank::OneForm => Dense { rank: 1, c: comps.to_vec() },
        Rank::TwoTensor => Dense { rank: 2, c: comps.to_vec() },
        Rank::Covariant3 => Dense { rank: 3, c: comps.to_vec() },
        Rank::SymTwoTensor => Dense {
            rank: 2,
            c: vec![comps[0].clone(), comps[1].clone(), comps[1].clone(), comps[2].clone()],
        },
        Rank::ThreeTensor => {
            let neg = |v: &Vec<C>| v.iter().map(|x| -x).collect::<Vec<_>>();
            Dense {
                rank: 3,
                // ttk, tθk = A_k, θtk = -A_k, θθk
                c: vec![
                    z.clone(),
                    z.clone(),
                    comps[0].clone(),
                    comps[1].clone(),
                    neg(&comps[0]),
                    neg(&comps[1]),
                    z.clone(),
                    z,
                ],
            }
        }
    })
}

/// Pack into the storage of `rank`, symmetrizing / antisymmetrizing as the
/// storage requires.
pub(crate) fn from_dense(rank: Rank, d: &Dense) -> Result<Vec<Vec<C>>> {
    let need = match rank {
        Rank::Scalar => 0,
        Rank::OneForm => 1,
        Rank::TwoTensor | Rank::SymTwoTensor => 2,
        Rank::ThreeTensor | Rank::Covariant3 => 3,
    };
    if d.rank != need {
        return Err(Error::Usage(format!(
            "dense rank {} does not fit {}",
            d.rank,
            rank.name()
        )));
    }
    let avg = |a: &Vec<C>, b: &Vec<C>, s: f64| a.iter().zip(b).map(|(x, y)| (x + y * s) * 0.5).collect();
    Ok(match rank {
        Rank::SymTwoTensor => vec![d.c[0].clone(), avg(&d.c[1], &d.c[2], 1.0), d.c[3].clone()],
        Rank::ThreeTensor => vec![avg(&d.c[2], &d.c[4], -1.0), avg(&d.c[3], &d.c[5], -1.0)],
        _ => d.c.clone(),
    })
}

/// `∇u` for a single Fourier mode `m`; the new index is the first slot.
pub(crate) fn grad(model: &SurfaceModel, m: u32, u: &Dense) -> Dense {
    let r = u.rank;
    let n = u.n();
    let h = model.chart.spacing;
    let mut out = Dense::zeros(r + 1, n);
    let im = C::new(0.0, m as f64);
    for idx in 0..(1usize << r) {
        // radial derivative through the orthonormal frame
        let s: Vec<f64> = (0..n).map(|j| frame_scale(model, r, idx, j)).collect();
        let scaled: Vec<C> = (0..n).map(|j| u.c[idx][j] * s[j]).collect();
        let d = d1(&scaled, h);
        out.c[idx] = (0..n).map(|j| d[j] / s[j]).collect();

        // angular derivative
        let oidx = (1 << r) | idx;
        let mut v: Vec<C> = u.c[idx].iter().map(|x| x * im).collect();
        for slot in 0..r {
            let bit = 1usize << (r - 1 - slot);
            let other = idx ^ bit;
            for (j, vj) in v.iter_mut().enumerate() {
                let jet = model.jet(j);
                let coef = if idx & bit != 0 {
                    // -Γ^t_θθ
                    jet.dq / (2.0 * jet.p)
                } else {
                    // -Γ^θ_θt
                    -jet.dq / (2.0 * jet.q)
                };
                *vj += u.c[other][j] * coef;
            }
        }
        out.c[oidx] = v;
    }
    out
}

/// `g^{ii} T_{i i J}` contracted over the first two slots.
pub(crate) fn contract_first_two(model: &SurfaceModel, t: &Dense) -> Dense {
    let r = t.rank - 2;
    let n = t.n();
    let mut out = Dense::zeros(r, n);
    for idx in 0..(1usize << r) {
        out.c[idx] = (0..n)
            .map(|j| {
                let jet = model.jet(j);
                t.c[idx][j] / jet.p + t.c[(3 << r) | idx][j] / jet.q
            })
            .collect();
    }
    out
}
