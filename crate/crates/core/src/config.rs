//! Run configuration: one TOML file, every key optional.
//!
//! ```toml
//! out = "out"
//! seed = 1
//!
//! [model]
//! kind = "hyperbolic_disk"      # or "perturbed_disk"
//! t_min = 0.5
//! t_max = 12.0
//! n_t = 512
//! modes = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13]
//!
//! [model.perturbation]          # used when kind = "perturbed_disk"
//! t_lo = 3.0
//! t_hi = 7.0
//! amplitude = 0.1
//!
//! [verify]
//! grid_ladder = [128, 256, 512]
//! n_seeds = 8
//! tt_degrees = [2, 3, 4, 5, 6]
//! energy_samples = 64
//! energy_eps = 0.01
//!
//! [quasimode]
//! lambdas = [0.25, 0.5, 1.0]
//! r_scales = [2.0, 4.0, 8.0, 16.0]
//!
//! [spectrum]
//! m_max = 8
//! truncation_step = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RadialBump;
use crate::identities::{Ladder, SuiteConfig};
use crate::spectral::{QuasiScanConfig, SpectralConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HyperbolicDisk,
    PerturbedDisk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelRecipe {
    pub kind: ModelKind,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub modes: Vec<u32>,
    pub perturbation: RadialBump,
}

impl Default for ModelRecipe {
    fn default() -> Self {
        ModelRecipe {
            kind: ModelKind::HyperbolicDisk,
            t_min: 0.5,
            t_max: 12.0,
            n_t: 512,
            modes: (0..=13).collect(),
            perturbation: RadialBump::new(3.0, 7.0, 0.1),
        }
    }
}

impl ModelRecipe {
    pub fn bump(&self) -> Option<RadialBump> {
        (self.kind == ModelKind::PerturbedDisk).then_some(self.perturbation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub grid_ladder: Vec<usize>,
    pub n_seeds: usize,
    pub tt_degrees: Vec<u32>,
    pub energy_samples: usize,
    pub energy_eps: f64,
    pub propagation_lambda: f64,
    pub only: Vec<String>,
}

impl Default for VerifySection {
    fn default() -> Self {
        let s = SuiteConfig::default();
        VerifySection {
            grid_ladder: s.ladder.n_t,
            n_seeds: s.seeds.len(),
            tt_degrees: s.tt_degrees,
            energy_samples: s.energy_samples,
            energy_eps: s.energy_eps,
            propagation_lambda: s.propagation_lambda,
            only: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub m_max: u32,
    /// The second truncation is `t_max + truncation_step`; the second grid
    /// doubles `n_t`.
    pub truncation_step: f64,
    pub windows: Vec<(f64, f64)>,
    pub persistence_tol: f64,
    pub cluster_tol: f64,
    pub witness_tol: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let s = SpectralConfig::default();
        SpectrumSection {
            m_max: s.m_max,
            truncation_step: 2.0,
            windows: s.windows,
            persistence_tol: s.persistence_tol,
            cluster_tol: s.cluster_tol,
            witness_tol: s.witness_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub model: ModelRecipe,
    pub verify: VerifySection,
    pub quasimode: QuasiScanConfig,
    pub spectrum: SpectrumSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: PathBuf::from("out"),
            seed: 1,
            model: ModelRecipe::default(),
            verify: VerifySection::default(),
            quasimode: QuasiScanConfig::default(),
            spectrum: SpectrumSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(m.t_min.is_finite() && m.t_max.is_finite() && m.t_min >= 0.0 && m.t_min < m.t_max) {
            return bad(format!("model needs 0 ≤ t_min < t_max, got [{}, {}]", m.t_min, m.t_max));
        }
        if m.n_t < 8 {
            return bad(format!("model.n_t = {} is too small (need ≥ 8)", m.n_t));
        }
        if m.modes.is_empty() {
            return bad("model.modes is empty".into());
        }
        if self.verify.grid_ladder.len() < 2 || self.verify.grid_ladder.iter().any(|&n| n < 8) {
            return bad("verify.grid_ladder needs at least two grids of ≥ 8 nodes".into());
        }
        if self.verify.n_seeds == 0 {
            return bad("verify.n_seeds must be positive".into());
        }
        if let Some(l) = self.quasimode.lambdas.iter().find(|l| !(**l >= 0.25)) {
            return bad(format!("quasimode λ = {l} is below 1/4"));
        }
        if self.quasimode.r_scales.len() < 2 || self.quasimode.r_scales.iter().any(|r| !(*r > 0.0)) {
            return bad("quasimode.r_scales needs at least two positive values".into());
        }
        if !(self.spectrum.truncation_step > 0.0) {
            return bad("spectrum.truncation_step must be positive".into());
        }
        Ok(())
    }

    pub fn suite(&self) -> SuiteConfig {
        let v = &self.verify;
        SuiteConfig {
            ladder: Ladder {
                t_min: self.model.t_min,
                t_max: self.model.t_max,
                n_t: v.grid_ladder.clone(),
                modes: self.model.modes.clone(),
            },
            seeds: (0..v.n_seeds as u64).map(|k| self.seed + k).collect(),
            perturbation: self.model.perturbation,
            tt_degrees: v.tt_degrees.clone(),
            energy_samples: v.energy_samples,
            energy_eps: v.energy_eps,
            propagation_lambda: v.propagation_lambda,
        }
    }

    pub fn spectral(&self) -> SpectralConfig {
        let s = &self.spectrum;
        let m = &self.model;
        SpectralConfig {
            t_max: vec![m.t_max, m.t_max + s.truncation_step],
            n_t: vec![m.n_t, 2 * m.n_t],
            m_max: s.m_max,
            windows: s.windows.clone(),
            persistence_tol: s.persistence_tol,
            cluster_tol: s.cluster_tol,
            eigentensor_ladder: self.suite().ladder,
            tt_degrees: self.verify.tt_degrees.clone(),
            witness_tol: s.witness_tol,
            floor_samples: self.verify.energy_samples,
            floor_eps: self.verify.energy_eps,
            perturbation: m.bump(),
            quasimodes: self.quasimode.clone(),
        }
    }
}
