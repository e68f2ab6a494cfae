//! Per-mode eigenvalues of the assembled operators, the explicit `-2` and
//! `0` eigentensors, Rayleigh floors, and the persistence test for discrete
//! eigenvalues in the spectral gaps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{harmonic_oneform, l2_inner_product_where, l2_norm, l2_norm_where, plateau_cut, TensorField};
use crate::geometry::{build_conformal_perturbation, build_hyperbolic_disk_with_center, RadialBump, SurfaceModel};
use crate::identities::{away_from_walls, energy_sample, energy_supports, fit_order, tt_residuals, Ladder};
use crate::operators::{assemble, conformal_killing, laplacian, s_ring, AssembledOperator, LaplacianKind, OperatorKind};
use crate::quasimodes::{quasimode_scan, ScanTable};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Full unknown vector; zero on Dirichlet rows.
    pub vector: Vec<f64>,
    /// `‖WAv - λWv‖ / ‖Wv‖` over the non-Dirichlet rows.
    pub residual: f64,
}

const RESIDUAL_BOUND: f64 = 1e-8;

/// `W^{1/2} A W^{-1/2}` on the interior rows, symmetrised.
fn symmetric_form(op: &AssembledOperator) -> (Vec<usize>, DMatrix<f64>) {
    let idx = op.interior();
    let k = idx.len();
    let sw: Vec<f64> = op.weight.iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(k, k, |a, b| {
        let (i, j) = (idx[a], idx[b]);
        0.5 * (sw[i] * op.matrix[(i, j)] / sw[j] + sw[j] * op.matrix[(j, i)] / sw[i])
    });
    (idx, s)
}

fn check_symmetric(op: &AssembledOperator) -> Result<()> {
    let defect = op.weighted_symmetry_defect();
    if defect > 1e-10 {
        return Err(Error::numerical(format!(
            "block {} of {:?} is not weighted-symmetric (defect {defect:e})",
            op.mode, op.kind
        )));
    }
    Ok(())
}

/// Lowest `count` eigenpairs of the weighted-symmetric block problem.
pub fn eigensolve_block(op: &AssembledOperator, count: usize) -> Result<Vec<EigenPair>> {
    check_symmetric(op)?;
    let (idx, s) = symmetric_form(op);
    if count > idx.len() {
        return Err(Error::Usage(format!(
            "asked for {count} eigenpairs of a block with {} unknowns",
            idx.len()
        )));
    }
    let eig = s.try_symmetric_eigen(1e-14, 10_000).ok_or_else(|| Error::Numerical {
        message: format!("eigensolver did not converge on block {} of {:?}", op.mode, op.kind),
        log: vec![format!("dimension {}, max 10000 sweeps, tolerance 1e-14", idx.len())],
    })?;
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(count);
    let mut log = Vec::new();
    for &k in order.iter().take(count) {
        let lambda = eig.eigenvalues[k];
        let z = eig.eigenvectors.column(k);
        let mut v = vec![0.0; op.dim()];
        for (a, &i) in idx.iter().enumerate() {
            v[i] = z[a] / op.weight[i].sqrt();
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &idx {
            let av: f64 = idx.iter().map(|&j| op.matrix[(i, j)] * v[j]).sum();
            let r = op.weight[i] * (av - lambda * v[i]);
            num += r * r;
            den += (op.weight[i] * v[i]).powi(2);
        }
        let residual = (num / den).sqrt() / lambda.abs().max(1.0);
        if residual > RESIDUAL_BOUND {
            log.push(format!("λ = {lambda:.12e}: residual {residual:e}"));
        }
        out.push(EigenPair {
            value: lambda,
            vector: v,
            residual,
        });
    }
    if !log.is_empty() {
        return Err(Error::Numerical {
            message: format!("eigenpairs of block {} exceed the residual bound", op.mode),
            log,
        });
    }
    Ok(out)
}

/// All eigenvalues of a block, ascending.
pub fn block_eigenvalues(op: &AssembledOperator) -> Result<Vec<f64>> {
    check_symmetric(op)?;
    let (_, s) = symmetric_form(op);
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!("non-finite eigenvalue in block {}", op.mode)));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigentensorRow {
    pub n: u32,
    pub n_t: usize,
    pub h: f64,
    /// `‖Δ_L S̊(ω_n) + 2S̊(ω_n)‖ / ‖S̊(ω_n)‖` (general form `Δ_L h - Rh`).
    pub r_minus2: f64,
    /// `‖Δ_L L̊η_n‖ / ‖L̊η_n‖` over the plateau of the cut.
    pub r0: f64,
    /// Same ratio over the cutoff ramp.
    pub r0_leak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigentensorTable {
    pub rows: Vec<EigentensorRow>,
    /// `(n, order of r_minus2, order of r0)`.
    pub orders: Vec<(u32, f64, f64)>,
}

impl EigentensorTable {
    pub fn finest(&self) -> impl Iterator<Item = &EigentensorRow> {
        let n_t = self.rows.iter().map(|r| r.n_t).max().unwrap_or(0);
        self.rows.iter().filter(move |r| r.n_t == n_t)
    }
}

/// Outer cutoff of the kernel witnesses: `η_n = ω_n` up to `t_max - 2.5`,
/// ramping to zero at `t_max - 0.5`.
pub const KERNEL_CUT: (f64, f64) = (2.5, 0.5);

/// `L̊η_n` with `η_n` the outer-cut harmonic 1-form, and the plateau end.
pub fn kernel_witness(n: u32, model: &SurfaceModel) -> Result<(TensorField, f64)> {
    let t1 = model.chart.t_max();
    let ramp = KERNEL_CUT.0 - KERNEL_CUT.1;
    let eta = plateau_cut(&harmonic_oneform(n, model)?, model, f64::NEG_INFINITY, t1 - KERNEL_CUT.1, ramp);
    Ok((conformal_killing(&eta, model)?, t1 - KERNEL_CUT.0))
}

/// `(plateau, leak)` ratios of `‖Δ_L L̊η_n‖ / ‖L̊η_n‖`.
pub fn kernel_residual(n: u32, model: &SurfaceModel) -> Result<(f64, f64)> {
    let (h, t_plat) = kernel_witness(n, model)?;
    let r = laplacian(LaplacianKind::Lichnerowicz, &h, model)?;
    let t = &model.chart.t_nodes;
    let keep = away_from_walls(model, 2);
    let nh = l2_norm(&h, model)?;
    let plat = l2_norm_where(&r, model, |j| keep(j) && t[j] <= t_plat)? / nh;
    let leak = l2_norm_where(&r, model, |j| keep(j) && t[j] > t_plat)? / nh;
    Ok((plat, leak))
}

/// Residuals of the explicit `-2` and `0` eigentensors on each rung.
pub fn known_eigentensor_check(n_range: &[u32], models: &[SurfaceModel]) -> Result<EigentensorTable> {
    if n_range.is_empty() || models.is_empty() {
        return Err(Error::Usage("eigentensor check needs degrees and at least one grid".into()));
    }
    let mut rows = Vec::new();
    for m in models {
        for &n in n_range {
            let r = tt_residuals(&harmonic_oneform(n, m)?, m)?;
            let (r0, leak) = kernel_residual(n, m)?;
            rows.push(EigentensorRow {
                n,
                n_t: m.n_t(),
                h: m.chart.spacing,
                r_minus2: r[2],
                r0,
                r0_leak: leak,
            });
        }
    }
    let orders = n_range
        .iter()
        .map(|&n| {
            let a: Vec<(f64, f64)> = rows.iter().filter(|r| r.n == n).map(|r| (r.h, r.r_minus2)).collect();
            let b: Vec<(f64, f64)> = rows.iter().filter(|r| r.n == n).map(|r| (r.h, r.r0)).collect();
            (n, fit_order(&a), fit_order(&b))
        })
        .collect();
    Ok(EigentensorTable { rows, orders })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorKind {
    /// `⟨Δu, u⟩ / ‖u‖²`.
    Scalar,
    /// `⟨Δ_H du, du⟩ / ‖du‖²`.
    HodgeExact,
    /// `⟨Δ_L L̊du, L̊du⟩ / ‖L̊du‖²`.
    LichnerowiczExact,
    /// `⟨Δ_L L̊*du, L̊*du⟩ / ‖L̊*du‖²`.
    LichnerowiczCoexact,
}

/// Minimum Rayleigh quotient over seeded compactly supported samples.
pub fn rayleigh_floor(kind: FloorKind, seeds: &[u64], model: &SurfaceModel) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::Usage("Rayleigh floor needs at least one sample".into()));
    }
    let sup = energy_supports(model);
    seeds.iter().enumerate().try_fold(f64::INFINITY, |acc, (i, &s)| {
        let e = energy_sample(s, sup[i % 2], model)?;
        Ok(acc.min(match kind {
            FloorKind::Scalar => e.scalar,
            FloorKind::HodgeExact => e.hodge_exact,
            FloorKind::LichnerowiczExact => e.lich_exact,
            FloorKind::LichnerowiczCoexact => e.lich_coexact,
        }))
    })
}

/// Rayleigh quotient of `Δ_L` on `S̊(ω_n)`, away from the walls.
pub fn tt_rayleigh(n: u32, model: &SurfaceModel) -> Result<f64> {
    let h = s_ring(&harmonic_oneform(n, model)?, model)?;
    let lh = laplacian(LaplacianKind::Lichnerowicz, &h, model)?;
    let keep = away_from_walls(model, 3);
    Ok(l2_inner_product_where(&lh, &h, model, &keep)? / l2_inner_product_where(&h, &h, model, &keep)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiScanConfig {
    pub lambdas: Vec<f64>,
    pub r_scales: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub chi_continuity: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for QuasiScanConfig {
    fn default() -> Self {
        QuasiScanConfig {
            lambdas: vec![0.25, 0.5, 1.0],
            r_scales: vec![2.0, 4.0, 8.0, 16.0],
            a: 1.0,
            b: 0.0,
            chi_continuity: 2,
            t_min: 0.5,
            t_max: 130.0,
            n_t: 4096,
        }
    }
}

impl QuasiScanConfig {
    pub fn run(&self, perturbation: Option<RadialBump>) -> Result<ScanTable> {
        let mut model = crate::geometry::build_hyperbolic_disk(self.t_min, self.t_max, self.n_t, &[0])?;
        if let Some(b) = perturbation {
            model = build_conformal_perturbation(&model, b)?;
        }
        quasimode_scan(&self.lambdas, &self.r_scales, (self.a, self.b), self.chi_continuity, &model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Truncations (center charts `[0, t_max]`) for the persistence test.
    pub t_max: Vec<f64>,
    pub n_t: Vec<usize>,
    pub m_max: u32,
    /// Gap windows where persistent eigenvalues would contradict the picture.
    pub windows: Vec<(f64, f64)>,
    /// Relative move under which an eigenvalue counts as persistent.
    pub persistence_tol: f64,
    /// Half-width of the clusters counted around `-2` and `0`.
    pub cluster_tol: f64,
    pub eigentensor_ladder: Ladder,
    pub tt_degrees: Vec<u32>,
    pub witness_tol: f64,
    pub floor_samples: usize,
    pub floor_eps: f64,
    pub perturbation: Option<RadialBump>,
    pub quasimodes: QuasiScanConfig,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            t_max: vec![12.0, 14.0],
            n_t: vec![512, 1024],
            m_max: 8,
            windows: vec![(-1.9, -0.1), (0.05, 0.2)],
            persistence_tol: 0.1,
            cluster_tol: 1e-2,
            eigentensor_ladder: Ladder::default(),
            tt_degrees: (2..=6).collect(),
            witness_tol: 1e-3,
            floor_samples: 64,
            floor_eps: 0.01,
            perturbation: None,
            quasimodes: QuasiScanConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSpectrum {
    pub t_max: f64,
    pub n_t: usize,
    pub m: u32,
    /// Eigenvalues below `list_below`, ascending.
    pub low: Vec<f64>,
    pub near_minus2: usize,
    pub near_zero: usize,
    /// Smallest eigenvalue above the zero cluster.
    pub lowest_above_zero: Option<f64>,
    /// Eigenvalues inside the gap windows.
    pub in_windows: Vec<f64>,
    /// Number of unknowns after removing Dirichlet rows.
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersistenceCandidate {
    pub m: u32,
    pub value: f64,
    /// Closest match in each other configuration, `None` if too far.
    pub matches: Vec<Option<f64>>,
    pub persistent: bool,
}

/// Eigenvalues listed per block are those below this value.
pub const LIST_BELOW: f64 = 1.0;

/// Solve the Lichnerowicz blocks `m = 0..=m_max` on one truncation.
pub fn spectrum_blocks(model: &SurfaceModel, m_max: u32, cfg: &SpectralConfig) -> Result<Vec<BlockSpectrum>> {
    (0..=m_max)
        .map(|m| {
            let op = assemble(OperatorKind::Lichnerowicz, m, model)?;
            let ev = block_eigenvalues(&op)?;
            let near = |c: f64| ev.iter().filter(|v| (*v - c).abs() <= cfg.cluster_tol).count();
            let in_windows = ev
                .iter()
                .copied()
                .filter(|v| cfg.windows.iter().any(|w| *v > w.0 && *v < w.1))
                .collect();
            Ok(BlockSpectrum {
                t_max: model.chart.t_max(),
                n_t: model.n_t(),
                m,
                low: ev.iter().copied().filter(|v| *v < LIST_BELOW).collect(),
                near_minus2: near(-2.0),
                near_zero: near(0.0),
                lowest_above_zero: ev.iter().copied().find(|v| *v > cfg.cluster_tol),
                in_windows,
                dim: ev.len(),
            })
        })
        .collect()
}

/// Eigenvalues in the gap windows of the first configuration, matched
/// against every other configuration.
pub fn persistence(configs: &[Vec<BlockSpectrum>], tol: f64) -> Vec<PersistenceCandidate> {
    let mut out = Vec::new();
    let Some((base, others)) = configs.split_first() else {
        return out;
    };
    for blk in base {
        for &v in &blk.in_windows {
            let matches: Vec<Option<f64>> = others
                .iter()
                .map(|cfg| {
                    cfg.iter()
                        .find(|b| b.m == blk.m)
                        .and_then(|b| {
                            b.low
                                .iter()
                                .copied()
                                .min_by(|a, c| (a - v).abs().total_cmp(&(c - v).abs()))
                        })
                        .filter(|u| (u - v).abs() < tol * v.abs())
                })
                .collect();
            out.push(PersistenceCandidate {
                m: blk.m,
                value: v,
                persistent: matches.iter().all(Option::is_some),
                matches,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub status: VerdictStatus,
    /// Which rows of the report support the verdict.
    pub evidence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloorSummary {
    pub scalar: f64,
    pub lichnerowicz_exact: f64,
    pub lichnerowicz_coexact: f64,
    pub tt_quotients: Vec<(u32, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub model: String,
    pub constant_curvature: bool,
    pub configs: Vec<(f64, usize)>,
    pub blocks: Vec<Vec<BlockSpectrum>>,
    pub eigentensors: EigentensorTable,
    pub floors: FloorSummary,
    pub quasimodes: ScanTable,
    pub persistence: Vec<PersistenceCandidate>,
    pub verdicts: Vec<Verdict>,
}

impl SpectrumReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status != VerdictStatus::Fail)
    }
}

fn spectral_model(t_max: f64, n_t: usize, modes: &[u32], bump: Option<RadialBump>) -> Result<SurfaceModel> {
    let m = build_hyperbolic_disk_with_center(t_max, n_t, modes)?;
    match bump {
        Some(b) => build_conformal_perturbation(&m, b),
        None => Ok(m),
    }
}

/// Aggregate block spectra, eigentensor witnesses, Rayleigh floors and the
/// quasi-mode scan into verdicts on the three parts of the spectrum.
pub fn spectral_picture(cfg: &SpectralConfig) -> Result<SpectrumReport> {
    if cfg.t_max.is_empty() || cfg.n_t.is_empty() {
        return Err(Error::Usage("spectral picture needs at least one truncation and one grid".into()));
    }
    if cfg.tt_degrees.is_empty() {
        return Err(Error::Usage("spectral picture needs a non-empty list of harmonic degrees".into()));
    }
    let modes: Vec<u32> = (0..=cfg.m_max.max(13)).collect();
    let mut configs = Vec::new();
    for &n in &cfg.n_t {
        for &t in &cfg.t_max {
            configs.push((t, n));
        }
    }
    let blocks = configs
        .iter()
        .map(|&(t, n)| spectrum_blocks(&spectral_model(t, n, &modes, cfg.perturbation)?, cfg.m_max, cfg))
        .collect::<Result<Vec<_>>>()?;
    let persistence = persistence(&blocks, cfg.persistence_tol);

    let mut ladder_models = cfg.eigentensor_ladder.build()?;
    if let Some(b) = cfg.perturbation {
        ladder_models = ladder_models
            .iter()
            .map(|m| build_conformal_perturbation(m, b))
            .collect::<Result<_>>()?;
    }
    let eigentensors = known_eigentensor_check(&cfg.tt_degrees, &ladder_models)?;
    let finest = ladder_models.last().unwrap();
    let constant_curvature = finest.has_constant_curvature(1e-8);

    let seeds: Vec<u64> = (0..cfg.floor_samples as u64).map(|k| 1000 + k).collect();
    let floors = FloorSummary {
        scalar: rayleigh_floor(FloorKind::Scalar, &seeds, finest)?,
        lichnerowicz_exact: rayleigh_floor(FloorKind::LichnerowiczExact, &seeds, finest)?,
        lichnerowicz_coexact: rayleigh_floor(FloorKind::LichnerowiczCoexact, &seeds, finest)?,
        tt_quotients: cfg
            .tt_degrees
            .iter()
            .map(|&n| Ok((n, tt_rayleigh(n, finest)?)))
            .collect::<Result<_>>()?,
    };
    let quasimodes = cfg.quasimodes.run(cfg.perturbation)?;

    let mut verdicts = Vec::new();
    // (a) point eigenvalues -2 and 0
    let worst_m2 = eigentensors.finest().map(|r| r.r_minus2).fold(0.0, f64::max);
    let worst_0 = eigentensors.finest().map(|r| r.r0).fold(0.0, f64::max);
    let cluster_modes: Vec<u32> = blocks[0].iter().filter(|b| b.near_minus2 > 0).map(|b| b.m).collect();
    let zero_modes: Vec<u32> = blocks[0].iter().filter(|b| b.near_zero > 0).map(|b| b.m).collect();
    let witnessed = worst_m2 <= cfg.witness_tol
        && worst_0 <= cfg.witness_tol
        && !cluster_modes.is_empty()
        && !zero_modes.is_empty()
        && floors.tt_quotients.iter().all(|q| (q.1 + 2.0).abs() <= cfg.witness_tol);
    verdicts.push(Verdict {
        claim: "(a) -2 and 0 are eigenvalues witnessed by explicit tensors".into(),
        status: if !constant_curvature {
            VerdictStatus::HypothesisNotMet
        } else if witnessed {
            VerdictStatus::Pass
        } else {
            VerdictStatus::Fail
        },
        evidence: format!(
            "eigentensors finest rung: max r_minus2 {worst_m2:.3e}, max r0 {worst_0:.3e}; blocks with -2 cluster {cluster_modes:?}, with 0 cluster {zero_modes:?}; tt quotients {:?}",
            floors.tt_quotients
        ),
    });
    // (b) quasi-modes for sampled λ ≥ 1/4
    let ok_b = quasimodes.slopes.iter().all(|s| s.ratio_slope <= quasimodes.slope_threshold);
    verdicts.push(Verdict {
        claim: "(b) sampled λ ≥ 1/4 admit quasi-modes with ratio → 0".into(),
        status: if ok_b { VerdictStatus::Pass } else { VerdictStatus::Fail },
        evidence: format!(
            "quasimodes.slopes ratio_slope {:?} (threshold {})",
            quasimodes.slopes.iter().map(|s| (s.lambda, s.ratio_slope)).collect::<Vec<_>>(),
            quasimodes.slope_threshold
        ),
    });
    // (c) nothing persistent in the gaps
    let persistent: Vec<&PersistenceCandidate> = persistence.iter().filter(|p| p.persistent).collect();
    verdicts.push(Verdict {
        claim: "(c) no persistent discrete eigenvalue in the gap windows".into(),
        status: if persistent.is_empty() { VerdictStatus::Pass } else { VerdictStatus::Fail },
        evidence: format!(
            "persistence: {} candidates in {:?} on config {:?}, {} persistent",
            persistence.len(),
            cfg.windows,
            configs[0],
            persistent.len()
        ),
    });

    Ok(SpectrumReport {
        model: match cfg.perturbation {
            Some(b) => format!(
                "hyperbolic disk, conformal bump amplitude {} on [{}, {}]",
                b.amplitude, b.t_lo, b.t_hi
            ),
            None => "hyperbolic disk".into(),
        },
        constant_curvature,
        configs,
        blocks,
        eigentensors,
        floors,
        quasimodes,
        persistence,
        verdicts,
    })
}
