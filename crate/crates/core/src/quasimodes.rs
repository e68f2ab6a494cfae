//! Cut-off radial quasi-modes for `Δ_L` and the indicial exponents of its
//! radial part.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{l2_norm, l2_norm_where, plateau_cut, Rank, TensorField};
use crate::geometry::SurfaceModel;
use crate::operators::{laplacian, LaplacianKind};
use crate::smoothstep::Smoothstep;

/// `Ψ_R = χ_{4R} (1 - χ_R)` with `χ_R(ρ) = χ(-ln ρ / R)`; `χ` drops from 1
/// to 0 across `[1, 2]` through a polynomial smoothstep.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffProfile {
    pub r_scale: f64,
    pub chi_continuity: usize,
    /// Measured `sup_ρ |Ψ^{(k)}(ρ)| R ρ^k` for `k = 1, 2`.
    pub derivative_bounds: [f64; 2],
    #[serde(skip)]
    step: Smoothstep,
}

impl CutoffProfile {
    pub fn new(r_scale: f64, chi_continuity: usize) -> Result<Self> {
        if !(r_scale > 0.0) {
            return Err(Error::Config(format!("cutoff scale R = {r_scale} must be positive")));
        }
        if chi_continuity < 2 {
            return Err(Error::Config("cutoff base profile must be at least C²".into()));
        }
        let mut c = CutoffProfile {
            r_scale,
            chi_continuity,
            derivative_bounds: [0.0; 2],
            step: Smoothstep::new(chi_continuity),
        };
        let mut bounds = [0.0f64; 2];
        let samples = 8000;
        for k in 0..=samples {
            let x = r_scale * (1.0 + 7.0 * k as f64 / samples as f64);
            let rho = (-x).exp();
            let [_, d1, d2] = c.jet(rho);
            bounds[0] = bounds[0].max(d1.abs() * r_scale * rho);
            bounds[1] = bounds[1].max(d2.abs() * r_scale * rho * rho);
        }
        c.derivative_bounds = bounds;
        Ok(c)
    }

    /// `(χ_S, dχ_S/dρ, d²χ_S/dρ²)`.
    fn chi(&self, s: f64, rho: f64) -> [f64; 3] {
        let y = -rho.ln() / s;
        let [v, d1, d2] = self.step.derivatives::<3>(y - 1.0);
        let (c0, c1, c2) = (1.0 - v, -d1, -d2);
        [
            c0,
            -c1 / (s * rho),
            c2 / (s * s * rho * rho) + c1 / (s * rho * rho),
        ]
    }

    /// `(Ψ, Ψ', Ψ'')` in `ρ`.
    pub fn jet(&self, rho: f64) -> [f64; 3] {
        let a = self.chi(4.0 * self.r_scale, rho);
        let b = self.chi(self.r_scale, rho);
        let b = [1.0 - b[0], -b[1], -b[2]];
        [
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
        ]
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.jet(rho)[0]
    }

    /// Open support `(e^{-8R}, e^{-R})`.
    pub fn support(&self) -> (f64, f64) {
        ((-8.0 * self.r_scale).exp(), (-self.r_scale).exp())
    }
}

/// Check that the cutoff annulus fits strictly inside the chart.
pub fn build_cutoff(r_scale: f64, chi_continuity: usize, model: &SurfaceModel) -> Result<CutoffProfile> {
    let c = CutoffProfile::new(r_scale, chi_continuity)?;
    let n = model.n_t();
    let (lo, hi) = c.support();
    let r_in = model
        .radius(0)
        .ok_or_else(|| Error::Unsupported("cutoffs need a collar defining function".into()))?;
    let r_out = model.radius(n - 1).unwrap();
    if !(hi < r_in && lo > r_out) {
        let scale = r_in * model.chart.t_min().exp();
        let need = 8.0 * r_scale + scale.ln();
        return Err(Error::Config(format!(
            "cutoff annulus for R = {r_scale} does not fit the chart: need t_min < {:.4} and t_max > {need:.4} (have [{}, {}])",
            r_scale + scale.ln(),
            model.chart.t_min(),
            model.chart.t_max()
        )));
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiModeSpec {
    pub lambda: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub r_scale: f64,
}

impl QuasiModeSpec {
    pub fn new(lambda: f64, a: f64, b: f64, r_scale: f64) -> Result<Self> {
        if !(lambda >= 0.25) {
            return Err(Error::Config(format!(
                "λ = {lambda} is below 1/4: the radial profile is not oscillatory there"
            )));
        }
        if a == 0.0 && b == 0.0 {
            return Err(Error::Config("profile coefficients a, b are both zero".into()));
        }
        Ok(QuasiModeSpec {
            lambda,
            mu: (lambda - 0.25).sqrt(),
            a,
            b,
            r_scale,
        })
    }
}

/// `f = √r (a cos(μ ln r) + b sin(μ ln r))` and its first two derivatives.
pub fn radial_profile(spec: &QuasiModeSpec, r: f64) -> Result<[f64; 3]> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial profile needs r > 0, got {r}")));
    }
    let l = r.ln();
    let (s, c) = (spec.mu * l).sin_cos();
    let g = spec.a * c + spec.b * s;
    let gl = spec.mu * (-spec.a * s + spec.b * c);
    let sr = r.sqrt();
    Ok([sr * g, (0.5 * g + gl) / sr, -spec.lambda * g / (r * sr)])
}

/// `F_f = ½f'' + f'/r - ¼ ĝ'/ĝ f'`.
pub fn profile_f(f: [f64; 3], r: f64, ghat: (f64, f64)) -> f64 {
    0.5 * f[2] + f[1] / r - 0.25 * ghat.1 / ghat.0 * f[1]
}

fn cut_profile(spec: &QuasiModeSpec, cutoff: &CutoffProfile, r: f64) -> Result<[f64; 3]> {
    let f = radial_profile(spec, r)?;
    let p = cutoff.jet(r);
    Ok([
        p[0] * f[0],
        p[1] * f[0] + p[0] * f[1],
        p[2] * f[0] + 2.0 * p[1] * f[1] + p[0] * f[2],
    ])
}

fn collar_data(model: &SurfaceModel, j: usize) -> Result<(f64, (f64, f64))> {
    let r = model
        .radius(j)
        .ok_or_else(|| Error::Unsupported("quasi-modes need a collar defining function".into()))?;
    let g = model.ghat(r).unwrap();
    Ok((r, g))
}

/// `h_R = F_{f_R}(r) (dr² - ĝ dθ²)` in internal coordinates, mode 0.
pub fn build_quasimode(spec: &QuasiModeSpec, cutoff: &CutoffProfile, model: &SurfaceModel) -> Result<TensorField> {
    let n = model.n_t();
    let (mut tt, mut thth) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let (r, g) = collar_data(model, j)?;
        let fr = cut_profile(spec, cutoff, r)?;
        let f = profile_f(fr, r, g);
        // dr = -r dt
        tt[j] = f * r * r;
        thth[j] = -f * g.0;
    }
    if tt[0] != 0.0 || tt[n - 1] != 0.0 {
        return Err(Error::Config("quasi-mode support reaches the chart edge".into()));
    }
    Ok(TensorField::radial(Rank::SymTwoTensor, vec![tt, vec![0.0; n], thth]).with_tracefree(true))
}

/// The cut profile `f_R` as a scalar field, for the Hessian route.
pub fn cut_profile_field(spec: &QuasiModeSpec, cutoff: &CutoffProfile, model: &SurfaceModel) -> Result<TensorField> {
    let vals = (0..model.n_t())
        .map(|j| Ok(cut_profile(spec, cutoff, collar_data(model, j)?.0)?[0]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TensorField::radial(Rank::Scalar, vec![vals]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuasiModeResidual {
    pub res: f64,
    pub norm: f64,
    pub ratio: f64,
}

/// `‖(Δ_L - λ) h‖`, `‖h‖` and their ratio.
pub fn quasimode_residual(lambda: f64, h: &TensorField, model: &SurfaceModel) -> Result<QuasiModeResidual> {
    let r = laplacian(LaplacianKind::Lichnerowicz, h, model)?.axpy(-lambda, h)?;
    let res = l2_norm(&r, model)?;
    let norm = l2_norm(h, model)?;
    Ok(QuasiModeResidual {
        res,
        norm,
        ratio: res / norm,
    })
}

/// Grid spacing must resolve `λ`'s oscillation period `2π/μ` in `t` with 16
/// points.
pub fn check_resolution(lambda: f64, model: &SurfaceModel) -> Result<()> {
    let mu = (lambda - 0.25).max(0.0).sqrt();
    if mu > 0.0 && model.chart.spacing > 2.0 * PI / mu / 16.0 {
        return Err(Error::Config(format!(
            "grid spacing {} does not resolve λ = {lambda} (need ≤ {})",
            model.chart.spacing,
            2.0 * PI / mu / 16.0
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    #[serde(rename = "R")]
    pub r_scale: f64,
    pub res_l2: f64,
    pub norm_l2: f64,
    pub ratio: f64,
    /// Log-log slope of the ratio against the previous `R` of the same `λ`.
    pub slope_partial: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSlope {
    pub lambda: f64,
    pub ratio_slope: f64,
    pub residual_sq_slope: f64,
    pub norm_sq_slope: f64,
    /// Fitted `c` in `‖h_R‖² ≈ c R`.
    pub norm_sq_per_r: f64,
    pub ratio_monotone: bool,
    /// Ratio slope at or below the threshold.
    pub ratio_pass: bool,
    /// `‖h_R‖²` slope at or above [`NORM_GROWTH_THRESHOLD`].
    pub norm_growth_pass: bool,
}

/// Minimal fitted log-log slope of `‖h_R‖²` against `R`.
pub const NORM_GROWTH_THRESHOLD: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub slopes: Vec<ScanSlope>,
    pub slope_threshold: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Evaluate every `(λ, R)` cell with profile coefficients `(a, b)`.
pub fn quasimode_scan(
    lambdas: &[f64],
    r_scales: &[f64],
    ab: (f64, f64),
    chi_continuity: usize,
    model: &SurfaceModel,
) -> Result<ScanTable> {
    if lambdas.is_empty() || r_scales.len() < 2 {
        return Err(Error::Usage("scan needs at least one λ and two values of R".into()));
    }
    let mut specs = Vec::new();
    for &l in lambdas {
        check_resolution(l, model)?;
        for &r in r_scales {
            specs.push((QuasiModeSpec::new(l, ab.0, ab.1, r)?, build_cutoff(r, chi_continuity, model)?));
        }
    }
    use rayon::prelude::*;
    let cells: Vec<QuasiModeResidual> = specs
        .par_iter()
        .map(|(s, c)| quasimode_residual(s.lambda, &build_quasimode(s, c, model)?, model))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let threshold = -0.7;
    for (li, &l) in lambdas.iter().enumerate() {
        let cs = &cells[li * r_scales.len()..(li + 1) * r_scales.len()];
        for (k, c) in cs.iter().enumerate() {
            rows.push(ScanRow {
                lambda: l,
                r_scale: r_scales[k],
                res_l2: c.res,
                norm_l2: c.norm,
                ratio: c.ratio,
                slope_partial: (k > 0).then(|| loglog_slope(&r_scales[k - 1..=k], &[cs[k - 1].ratio, c.ratio])),
            });
        }
        let ratios: Vec<f64> = cs.iter().map(|c| c.ratio).collect();
        let res2: Vec<f64> = cs.iter().map(|c| c.res * c.res).collect();
        let norm2: Vec<f64> = cs.iter().map(|c| c.norm * c.norm).collect();
        let ratio_slope = loglog_slope(r_scales, &ratios);
        let norm_sq_slope = loglog_slope(r_scales, &norm2);
        let norm_sq_per_r = norm2.iter().zip(r_scales).map(|(a, r)| a * r).sum::<f64>()
            / r_scales.iter().map(|r| r * r).sum::<f64>();
        slopes.push(ScanSlope {
            lambda: l,
            ratio_slope,
            residual_sq_slope: loglog_slope(r_scales, &res2),
            norm_sq_slope,
            norm_sq_per_r,
            ratio_monotone: ratios.windows(2).all(|w| w[1] < w[0]),
            ratio_pass: ratio_slope <= threshold,
            norm_growth_pass: norm_sq_slope >= NORM_GROWTH_THRESHOLD,
        });
    }
    Ok(ScanTable {
        rows,
        slopes,
        slope_threshold: threshold,
    })
}

/// Closed-form roots of `s² + 3s + 2 + λ`.
pub fn indicial_roots(lambda: f64) -> (Complex64, Complex64) {
    let disc = Complex64::new(1.0 - 4.0 * lambda, 0.0).sqrt();
    (
        (Complex64::new(-3.0, 0.0) + disc) * 0.5,
        (Complex64::new(-3.0, 0.0) - disc) * 0.5,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndicialFit {
    pub lambda: f64,
    /// Fitted `Re s`, `|Im s|`.
    pub sigma: f64,
    pub nu: f64,
    /// Relative residual at the optimum.
    pub residual: f64,
    pub closed_form: (f64, f64),
    /// `|s_fit - s_closed| / |Re s_closed|`.
    pub relative_gap: f64,
    pub evaluations: usize,
}

/// Window and plateau (in `t`) used by the brute-force exponent fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicialWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub ramp: f64,
}

impl Default for IndicialWindow {
    fn default() -> Self {
        IndicialWindow {
            t_lo: 12.0,
            t_hi: 48.0,
            ramp: 8.0,
        }
    }
}

fn trial_residual(lambda: f64, sigma: f64, nu: f64, win: IndicialWindow, model: &SurfaceModel) -> Result<f64> {
    let n = model.n_t();
    let (mut tt, mut thth) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let (r, g) = collar_data(model, j)?;
        let l = r.ln();
        let f = (sigma * l).exp() * (nu * l).cos();
        tt[j] = f * r * r;
        thth[j] = -f * g.0;
    }
    let h = TensorField::radial(Rank::SymTwoTensor, vec![tt, vec![0.0; n], thth]);
    let h = plateau_cut(&h, model, win.t_lo, win.t_hi, win.ramp);
    let res = laplacian(LaplacianKind::Lichnerowicz, &h, model)?.axpy(-lambda, &h)?;
    let t = &model.chart.t_nodes;
    let plat = |j: usize| t[j] >= win.t_lo + win.ramp && t[j] <= win.t_hi - win.ramp;
    Ok(l2_norm_where(&res, model, plat)? / l2_norm_where(&h, model, plat)?)
}

/// Locate the exponent `s = σ ± iν` minimising the residual of
/// `(Δ_L - λ)(r^σ cos(ν ln r) q̄)` over a plateau, by grid search over
/// `σ ∈ [-3, 0]`, `ν ∈ [0, 2]` followed by two refinements.
pub fn fit_indicial_exponent(lambda: f64, win: IndicialWindow, model: &SurfaceModel) -> Result<IndicialFit> {
    let c = &model.chart;
    if !(win.t_lo > c.t_min() && win.t_hi < c.t_max() && win.t_hi - win.t_lo > 2.0 * win.ramp) {
        return Err(Error::Config("indicial window does not fit the chart".into()));
    }
    let mut evals = 0;
    let mut search = |best: (f64, f64, f64), s_range: (f64, f64), n_range: (f64, f64), steps: usize| -> Result<(f64, f64, f64)> {
        let mut local = best;
        for i in 0..=steps {
            let s = s_range.0 + (s_range.1 - s_range.0) * i as f64 / steps as f64;
            for k in 0..=steps {
                let nu = n_range.0 + (n_range.1 - n_range.0) * k as f64 / steps as f64;
                let r = trial_residual(lambda, s, nu.max(0.0), win, model)?;
                evals += 1;
                if r < local.0 {
                    local = (r, s, nu.max(0.0));
                }
            }
        }
        Ok(local)
    };
    let mut best = search((f64::INFINITY, -1.5, 0.0), (-3.0, 0.0), (0.0, 2.0), 60)?;
    for w in [0.1, 0.01] {
        best = search(best, (best.1 - w, best.1 + w), (best.2 - w, best.2 + w), 20)?;
    }
    let (res, sigma, nu) = best;
    let (s1, _) = indicial_roots(lambda);
    let closed = (s1.re, s1.im.abs());
    let gap = Complex64::new(sigma - closed.0, nu - closed.1).norm() / closed.0.abs();
    Ok(IndicialFit {
        lambda,
        sigma,
        nu,
        residual: res,
        closed_form: closed,
        relative_gap: gap,
        evaluations: evals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub exponent: f64,
    pub frequency: f64,
    pub residual: f64,
}

/// Fit `F(r) ≈ r^p (A cos(ν ln r) + B sin(ν ln r))` on samples with
/// `ln r ∈ [l_lo, l_hi]`.
pub fn fit_envelope(f: impl Fn(f64) -> f64, l_lo: f64, l_hi: f64) -> EnvelopeFit {
    let ls: Vec<f64> = (0..=400).map(|k| l_lo + (l_hi - l_lo) * k as f64 / 400.0).collect();
    let vals: Vec<f64> = ls.iter().map(|&l| f(l.exp())).collect();
    let eval = |p: f64, nu: f64| -> f64 {
        // linear least squares for (A, B) on the rescaled samples
        let (mut scc, mut sss, mut scs, mut syc, mut sys, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (&l, &v) in ls.iter().zip(&vals) {
            let y = v * (-p * l).exp();
            let (s, c) = (nu * l).sin_cos();
            scc += c * c;
            sss += s * s;
            scs += c * s;
            syc += y * c;
            sys += y * s;
            syy += y * y;
        }
        let det = scc * sss - scs * scs;
        let explained = if det.abs() > 1e-12 * scc * sss.max(1e-300) {
            let a = (syc * sss - sys * scs) / det;
            let b = (sys * scc - syc * scs) / det;
            a * syc + b * sys
        } else {
            syc * syc / scc
        };
        ((syy - explained).max(0.0) / syy).sqrt()
    };
    let grid = |best: (f64, f64, f64), pr: (f64, f64), nr: (f64, f64), steps: usize| {
        let mut local = best;
        for i in 0..=steps {
            let p = pr.0 + (pr.1 - pr.0) * i as f64 / steps as f64;
            for k in 0..=steps {
                let nu = (nr.0 + (nr.1 - nr.0) * k as f64 / steps as f64).max(0.0);
                let r = eval(p, nu);
                if r < local.0 {
                    local = (r, p, nu);
                }
            }
        }
        local
    };
    let mut best = grid((f64::INFINITY, 0.0, 0.0), (-3.0, 0.0), (0.0, 2.0), 60);
    for w in [0.1, 0.01, 0.001] {
        best = grid(best, (best.1 - w, best.1 + w), (best.2 - w, best.2 + w), 20);
    }
    EnvelopeFit {
        exponent: best.1,
        frequency: best.2,
        residual: best.0,
    }
}
