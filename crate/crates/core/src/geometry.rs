//! Rotationally symmetric surface models in log-radial coordinates.
//!
//! Every model is a metric `P(t) dt² + Q(t) dθ²` on a truncated range of
//! `t = -ln r`, sampled on a uniform [`GridChart`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothstep::Bump1d;

/// How the inner end (smallest `t`) of the chart is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerEdge {
    /// Dirichlet wall at `t_min`.
    Wall,
    /// Regular center at `t = 0`; nodes are half-shifted so that no node
    /// sits on the axis. Only meaningful for disk-like profiles.
    Center,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridChart {
    pub t_nodes: Vec<f64>,
    pub spacing: f64,
    pub inner_edge: InnerEdge,
    pub theta_modes: Vec<u32>,
    /// One-dimensional rule times `sqrt(det g)`; the angular factor is
    /// applied per Fourier mode.
    pub quad_weights: Vec<f64>,
}

impl GridChart {
    fn uniform(t_min: f64, t_max: f64, n_t: usize, edge: InnerEdge, modes: &[u32]) -> Result<Self> {
        if n_t < 16 {
            return Err(Error::Config(format!("N_t = {n_t} must be at least 16")));
        }
        let (t_nodes, spacing) = match edge {
            InnerEdge::Wall => {
                if !(t_min > 0.0) || !(t_max - t_min >= 1.0) || !t_max.is_finite() {
                    return Err(Error::Config(format!(
                        "need 0 < t_min and t_max - t_min >= 1, got [{t_min}, {t_max}]"
                    )));
                }
                let h = (t_max - t_min) / (n_t - 1) as f64;
                ((0..n_t).map(|j| t_min + j as f64 * h).collect(), h)
            }
            InnerEdge::Center => {
                if !(t_max >= 1.0) || !t_max.is_finite() {
                    return Err(Error::Config(format!("need t_max >= 1, got {t_max}")));
                }
                let h = t_max / (n_t as f64 - 0.5);
                ((0..n_t).map(|j| (j as f64 + 0.5) * h).collect(), h)
            }
        };
        let mut theta_modes = modes.to_vec();
        theta_modes.sort_unstable();
        theta_modes.dedup();
        Ok(GridChart {
            t_nodes,
            spacing,
            inner_edge: edge,
            theta_modes,
            quad_weights: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_nodes.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.t_nodes[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    /// Whether node `j` carries a Dirichlet condition.
    pub fn is_wall(&self, j: usize) -> bool {
        j + 1 == self.len() || (j == 0 && self.inner_edge == InnerEdge::Wall)
    }

    /// Range of unknown (non-wall) node indices.
    pub fn interior(&self) -> std::ops::Range<usize> {
        match self.inner_edge {
            InnerEdge::Wall => 1..self.len() - 1,
            InnerEdge::Center => 0..self.len() - 1,
        }
    }

    /// One-dimensional quadrature rule in `t` (no metric factor).
    pub fn rule(&self) -> Vec<f64> {
        let n = self.len();
        let h = self.spacing;
        (0..n)
            .map(|j| match self.inner_edge {
                InnerEdge::Wall if j == 0 || j + 1 == n => 0.5 * h,
                InnerEdge::Center if j + 1 == n => 0.5 * h,
                _ => h,
            })
            .collect()
    }
}

/// Polynomial collar profile `ĝ(r) = Σ c_k r^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhatProfile {
    pub coeffs: Vec<f64>,
}

impl GhatProfile {
    pub fn new(coeffs: Vec<f64>) -> Self {
        GhatProfile { coeffs }
    }

    pub fn hyperbolic_disk() -> Self {
        GhatProfile::new(vec![1.0, 0.0, -0.5, 0.0, 1.0 / 16.0])
    }

    /// `(ĝ, ĝ', ĝ'')` at `r`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for &c in self.coeffs.iter().rev() {
            out[2] = out[2] * r + 2.0 * out[1];
            out[1] = out[1] * r + out[0];
            out[0] = out[0] * r + c;
        }
        out
    }
}

/// Radial bump `u(t)` for conformal perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub t_lo: f64,
    pub t_hi: f64,
    pub amplitude: f64,
    #[serde(default = "default_continuity")]
    pub continuity: usize,
}

fn default_continuity() -> usize {
    6
}

impl RadialBump {
    pub fn new(t_lo: f64, t_hi: f64, amplitude: f64) -> Self {
        RadialBump {
            t_lo,
            t_hi,
            amplitude,
            continuity: default_continuity(),
        }
    }

    pub fn jet(&self, t: f64) -> [f64; 4] {
        let b = Bump1d::new(self.t_lo, self.t_hi, self.continuity).jet(t);
        b.map(|v| self.amplitude * v)
    }
}

/// Values and first two `t`-derivatives of the metric functions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricJet {
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
    pub q: f64,
    pub dq: f64,
    pub ddq: f64,
}

impl MetricJet {
    pub fn sqrt_det(&self) -> f64 {
        (self.p * self.q).sqrt()
    }

    /// Scalar curvature `R = 2K`.
    pub fn scalar_curvature(&self) -> f64 {
        let pq = self.p * self.q;
        let s = pq.sqrt();
        let da = self.ddq / (2.0 * s) - self.dq * (self.dp * self.q + self.p * self.dq) / (4.0 * pq * s);
        -2.0 * da / s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricProfile {
    HyperbolicDisk,
    /// `r = radial_scale · e^{-t}`, metric `r^{-2}(dr² + ĝ(r) dθ²)`.
    Collar { ghat: GhatProfile, radial_scale: f64 },
    Conformal { base: Box<MetricProfile>, bump: RadialBump },
    RoundSphere,
    FlatCylinder,
}

impl MetricProfile {
    pub fn jet(&self, t: f64) -> MetricJet {
        match self {
            MetricProfile::HyperbolicDisk => {
                let s = t.sinh();
                MetricJet {
                    p: 1.0,
                    q: s * s,
                    dq: (2.0 * t).sinh(),
                    ddq: 2.0 * (2.0 * t).cosh(),
                    ..Default::default()
                }
            }
            MetricProfile::Collar { ghat, radial_scale } => {
                let r = radial_scale * (-t).exp();
                let [g, g1, g2] = ghat.eval(r);
                let e = 1.0 / (r * r);
                let gt = -r * g1;
                let gtt = g2 * r * r + g1 * r;
                MetricJet {
                    p: 1.0,
                    q: g * e,
                    dq: gt * e + 2.0 * g * e,
                    ddq: gtt * e + 4.0 * gt * e + 4.0 * g * e,
                    ..Default::default()
                }
            }
            MetricProfile::Conformal { base, bump } => {
                let b = base.jet(t);
                let [u, u1, u2, _] = bump.jet(t);
                let f = (2.0 * u).exp();
                let f1 = 2.0 * u1 * f;
                let f2 = (2.0 * u2 + 4.0 * u1 * u1) * f;
                MetricJet {
                    p: f * b.p,
                    dp: f1 * b.p + f * b.dp,
                    ddp: f2 * b.p + 2.0 * f1 * b.dp + f * b.ddp,
                    q: f * b.q,
                    dq: f1 * b.q + f * b.dq,
                    ddq: f2 * b.q + 2.0 * f1 * b.dq + f * b.ddq,
                }
            }
            MetricProfile::RoundSphere => {
                let s = t.sin();
                MetricJet {
                    p: 1.0,
                    q: s * s,
                    dq: (2.0 * t).sin(),
                    ddq: 2.0 * (2.0 * t).cos(),
                    ..Default::default()
                }
            }
            MetricProfile::FlatCylinder => MetricJet {
                p: 1.0,
                q: 1.0,
                ..Default::default()
            },
        }
    }

    /// Defining function `r(t)` when the profile is in collar normal form.
    pub fn radius(&self, t: f64) -> Option<f64> {
        match self {
            MetricProfile::HyperbolicDisk => Some(2.0 * (-t).exp()),
            MetricProfile::Collar { radial_scale, .. } => Some(radial_scale * (-t).exp()),
            MetricProfile::Conformal { base, .. } => base.radius(t),
            _ => None,
        }
    }

    /// `(ĝ(r), ĝ'(r))` for profiles in collar normal form. A conformal bump
    /// has compact support, so the base profile is the collar profile near
    /// the boundary.
    pub fn ghat(&self, r: f64) -> Option<(f64, f64)> {
        match self {
            MetricProfile::HyperbolicDisk => {
                let a = 1.0 - r * r / 4.0;
                Some((a * a, -r * a))
            }
            MetricProfile::Collar { ghat, .. } => {
                let [g, g1, _] = ghat.eval(r);
                Some((g, g1))
            }
            MetricProfile::Conformal { base, .. } => base.ghat(r),
            _ => None,
        }
    }

    fn is_disk_like(&self) -> bool {
        match self {
            MetricProfile::HyperbolicDisk => true,
            MetricProfile::Conformal { base, .. } => base.is_disk_like(),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    HyperbolicDisk,
    Collar,
    ConformalPerturbation,
    Fixture,
}

#[derive(Clone, Debug)]
pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub profile: MetricProfile,
    pub chart: GridChart,
    pub metric_tt: Vec<f64>,
    pub metric_thth: Vec<f64>,
    pub(crate) jets: Vec<MetricJet>,
    /// Metric at `t_{j+1/2}`, `j = 0..N-1`; for a center chart an extra
    /// leading entry sits at `t = 0`.
    pub(crate) half_jets: Vec<MetricJet>,
    pub(crate) curvature: Vec<f64>,
}

impl SurfaceModel {
    pub fn from_profile(
        kind: SurfaceKind,
        profile: MetricProfile,
        t_min: f64,
        t_max: f64,
        n_t: usize,
        edge: InnerEdge,
        modes: &[u32],
    ) -> Result<Self> {
        if edge == InnerEdge::Center && !profile.is_disk_like() {
            return Err(Error::Config(
                "a regular-center chart needs a disk-like profile".into(),
            ));
        }
        let mut chart = GridChart::uniform(t_min, t_max, n_t, edge, modes)?;
        let jets: Vec<MetricJet> = chart.t_nodes.iter().map(|&t| profile.jet(t)).collect();
        for (j, m) in jets.iter().enumerate() {
            if !(m.p > 0.0 && m.q > 0.0) || !m.p.is_finite() || !m.q.is_finite() {
                return Err(Error::Domain(format!(
                    "metric not positive at node {j} (t = {})",
                    chart.t_nodes[j]
                )));
            }
        }
        let h = chart.spacing;
        let mut half_jets = Vec::with_capacity(n_t);
        if edge == InnerEdge::Center {
            half_jets.push(MetricJet {
                p: 1.0,
                ..Default::default()
            });
        }
        for j in 0..n_t - 1 {
            half_jets.push(profile.jet(chart.t_nodes[j] + 0.5 * h));
        }
        let rule = chart.rule();
        chart.quad_weights = rule.iter().zip(&jets).map(|(w, m)| w * m.sqrt_det()).collect();
        let curvature = jets.iter().map(MetricJet::scalar_curvature).collect();
        Ok(SurfaceModel {
            kind,
            profile,
            metric_tt: jets.iter().map(|m| m.p).collect(),
            metric_thth: jets.iter().map(|m| m.q).collect(),
            chart,
            jets,
            half_jets,
            curvature,
        })
    }

    pub fn n_t(&self) -> usize {
        self.chart.len()
    }

    pub fn jet(&self, j: usize) -> &MetricJet {
        &self.jets[j]
    }

    /// Flux coefficient `sqrt(Q/P)` between nodes `j` and `j+1`; index `-1`
    /// (the axis of a center chart) is passed as `None`.
    pub(crate) fn flux(&self, j: Option<usize>) -> f64 {
        let off = usize::from(self.chart.inner_edge == InnerEdge::Center);
        let m = match j {
            Some(j) => &self.half_jets[j + off],
            None => return 0.0,
        };
        (m.q / m.p).sqrt()
    }

    pub fn radius(&self, j: usize) -> Option<f64> {
        self.profile.radius(self.chart.t_nodes[j])
    }

    pub fn ghat(&self, r: f64) -> Option<(f64, f64)> {
        self.profile.ghat(r)
    }

    pub fn scalar_curvature_values(&self) -> &[f64] {
        &self.curvature
    }

    /// Whether `R` is constant across the nodes within `tol`.
    pub fn has_constant_curvature(&self, tol: f64) -> bool {
        let r0 = self.curvature[0];
        self.curvature.iter().all(|r| (r - r0).abs() <= tol)
    }

    /// Same geometry on a different chart.
    pub fn rechart(&self, t_min: f64, t_max: f64, n_t: usize, edge: InnerEdge) -> Result<Self> {
        SurfaceModel::from_profile(
            self.kind,
            self.profile.clone(),
            t_min,
            t_max,
            n_t,
            edge,
            &self.chart.theta_modes,
        )
    }

    /// Radial derivative of `R` by the same first-derivative stencil used
    /// for fields.
    pub fn curvature_gradient(&self) -> Vec<f64> {
        crate::operators::stencil::d1_real(&self.curvature, self.chart.spacing)
    }
}

pub fn build_hyperbolic_disk(t_min: f64, t_max: f64, n_t: usize, modes: &[u32]) -> Result<SurfaceModel> {
    SurfaceModel::from_profile(
        SurfaceKind::HyperbolicDisk,
        MetricProfile::HyperbolicDisk,
        t_min,
        t_max,
        n_t,
        InnerEdge::Wall,
        modes,
    )
}

/// Disk including its center, with a single Dirichlet wall at `t_max`.
pub fn build_hyperbolic_disk_with_center(t_max: f64, n_t: usize, modes: &[u32]) -> Result<SurfaceModel> {
    SurfaceModel::from_profile(
        SurfaceKind::HyperbolicDisk,
        MetricProfile::HyperbolicDisk,
        0.0,
        t_max,
        n_t,
        InnerEdge::Center,
        modes,
    )
}

pub fn build_collar_metric(
    ghat: GhatProfile,
    radial_scale: f64,
    t_min: f64,
    t_max: f64,
    n_t: usize,
    modes: &[u32],
) -> Result<SurfaceModel> {
    if !(radial_scale > 0.0) {
        return Err(Error::Config(format!("radial scale {radial_scale} must be positive")));
    }
    if !ghat.eval(0.0)[0].is_finite() {
        return Err(Error::Domain("ĝ(0) is not finite".into()));
    }
    // sample the profile densely over the r-range covered by the chart
    let (r_lo, r_hi) = (radial_scale * (-t_max).exp(), radial_scale * (-t_min).exp());
    for k in 0..=1000 {
        let r = r_lo + (r_hi - r_lo) * k as f64 / 1000.0;
        let g = ghat.eval(r)[0];
        if !(g > 0.0) {
            return Err(Error::Domain(format!("ĝ({r}) = {g} is not positive")));
        }
    }
    SurfaceModel::from_profile(
        SurfaceKind::Collar,
        MetricProfile::Collar { ghat, radial_scale },
        t_min,
        t_max,
        n_t,
        InnerEdge::Wall,
        modes,
    )
}

/// `e^{2u} g_base` for a radial bump `u`.
pub fn build_conformal_perturbation(base: &SurfaceModel, bump: RadialBump) -> Result<SurfaceModel> {
    let c = &base.chart;
    let h = c.spacing;
    let lo_limit = match c.inner_edge {
        InnerEdge::Wall => c.t_min() + 2.0 * h,
        InnerEdge::Center => 0.0,
    };
    if !(bump.t_lo > lo_limit && bump.t_hi < c.t_max() - 2.0 * h && bump.t_lo < bump.t_hi) {
        return Err(Error::Domain(format!(
            "perturbation support [{}, {}] touches the truncation edges [{}, {}]",
            bump.t_lo,
            bump.t_hi,
            c.t_min(),
            c.t_max()
        )));
    }
    if bump.amplitude == 0.0 {
        return Ok(base.clone());
    }
    let t_lo = match c.inner_edge {
        InnerEdge::Wall => c.t_min(),
        InnerEdge::Center => 0.0,
    };
    SurfaceModel::from_profile(
        SurfaceKind::ConformalPerturbation,
        MetricProfile::Conformal {
            base: Box::new(base.profile.clone()),
            bump,
        },
        t_lo,
        c.t_max(),
        c.len(),
        c.inner_edge,
        &c.theta_modes,
    )
}

pub fn build_round_sphere(t_min: f64, t_max: f64, n_t: usize, modes: &[u32]) -> Result<SurfaceModel> {
    if t_max >= std::f64::consts::PI {
        return Err(Error::Config("sphere chart must stay below the south pole".into()));
    }
    SurfaceModel::from_profile(
        SurfaceKind::Fixture,
        MetricProfile::RoundSphere,
        t_min,
        t_max,
        n_t,
        InnerEdge::Wall,
        modes,
    )
}

pub fn build_flat_cylinder(t_min: f64, t_max: f64, n_t: usize, modes: &[u32]) -> Result<SurfaceModel> {
    SurfaceModel::from_profile(
        SurfaceKind::Fixture,
        MetricProfile::FlatCylinder,
        t_min,
        t_max,
        n_t,
        InnerEdge::Wall,
        modes,
    )
}

/// `Γ^k_{ij}` per node, indexed `[k][i][j]` with 0 = radial, 1 = θ.
#[derive(Clone, Debug)]
pub struct ChristoffelField {
    pub gamma: Vec<[[[f64; 2]; 2]; 2]>,
}

pub fn christoffel(model: &SurfaceModel) -> ChristoffelField {
    let gamma = model
        .jets
        .iter()
        .map(|m| {
            let mut g = [[[0.0; 2]; 2]; 2];
            g[0][0][0] = m.dp / (2.0 * m.p);
            g[0][1][1] = -m.dq / (2.0 * m.p);
            g[1][0][1] = m.dq / (2.0 * m.q);
            g[1][1][0] = g[1][0][1];
            g
        })
        .collect();
    ChristoffelField { gamma }
}

impl ChristoffelField {
    /// Re-express in the collar chart `(r, θ)`. Requires a profile in collar
    /// normal form.
    pub fn in_collar_chart(&self, model: &SurfaceModel) -> Result<ChristoffelField> {
        let mut gamma = Vec::with_capacity(self.gamma.len());
        for (j, g) in self.gamma.iter().enumerate() {
            let r = model
                .radius(j)
                .ok_or_else(|| Error::Unsupported("model has no collar chart".into()))?;
            // dr/dt, dt/dr and d²t/dr²; θ is unchanged
            let jac = [-r, 1.0];
            let inv = [-1.0 / r, 1.0];
            let hess = [1.0 / (r * r), 0.0];
            let mut out = [[[0.0; 2]; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let mut v = jac[a] * g[a][b][c] * inv[b] * inv[c];
                        if a == 0 && b == 0 && c == 0 {
                            v += jac[0] * hess[0];
                        }
                        out[a][b][c] = v;
                    }
                }
            }
            gamma.push(out);
        }
        Ok(ChristoffelField { gamma })
    }
}
