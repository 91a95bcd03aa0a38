//! Run configuration.
//!
//! The dialect is TOML, versioned by the top-level `schema` key. Energies are
//! given in cm⁻¹, times in fs (decay timescales in ps). Every bath needs an
//! explicit `beta_fs` or `temperature_k`; there is no default temperature.
//!
//! ```toml
//! schema = "pathlind-config/1"
//! initial = "1"
//!
//! [model]
//! kind = "frenkel"
//! site_energies_cm = [200.0, 320.0, 0.0]
//! couplings_cm = [[0.0, -87.7, 5.5], [-87.7, 0.0, 30.8], [5.5, 30.8, 0.0]]
//! bath = { kind = "drude_lorentz", lambda_cm = 35.0, gamma_cm = 300.0, temperature_k = 300.0 }
//!
//! [numerics]
//! dt_fs = 5.0
//! n_map_steps = 8
//! mem_len = 4
//! propagate_to_fs = 5000.0
//!
//! [[jump_sets]]
//! name = "tau_2p5ps"
//! jumps = [{ site = 3, timescale_ps = 2.5 }]
//!
//! [output]
//! dir = "out"
//! observables = ["populations"]
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SpectralDensity};
use crate::error::{Error, Result};
use crate::export::Observable;
use crate::lindblad::JumpOperator;
use crate::models::{extraction_jump, frenkel_with_ground, spin_boson, Extraction, SystemModel};
use crate::quad::QuadSettings;
use crate::quapi::{QuapiSettings, DEFAULT_BUDGET};
use crate::ttm::KernelKind;
use crate::units::{beta_from_temperature, cm_inv_to_fs_inv};
use crate::{CMatrix, C64};

pub const SCHEMA: &str = "pathlind-config/1";

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    DrudeLorentz { lambda_cm: f64, gamma_cm: f64 },
    OhmicExponential { xi: f64, omega_c_cm: f64 },
    /// Two-column file (ω, J) in cm⁻¹, relative to the config file.
    Tabulated { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    #[serde(flatten)]
    pub density: DensityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_fs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
}

impl BathConfig {
    fn build(&self, base_dir: &Path) -> Result<BathSpec> {
        let beta = match (self.beta_fs, self.temperature_k) {
            (Some(b), None) => b,
            (None, Some(0.0)) => f64::INFINITY,
            (None, Some(t)) => beta_from_temperature(t),
            _ => return Err(config_err("each bath needs exactly one of beta_fs and temperature_k")),
        };
        let density = match &self.density {
            DensityConfig::DrudeLorentz { lambda_cm, gamma_cm } => SpectralDensity::DrudeLorentz {
                lambda: cm_inv_to_fs_inv(*lambda_cm),
                gamma: cm_inv_to_fs_inv(*gamma_cm),
            },
            DensityConfig::OhmicExponential { xi, omega_c_cm } => {
                SpectralDensity::OhmicExponential { xi: *xi, omega_c: cm_inv_to_fs_inv(*omega_c_cm) }
            }
            DensityConfig::Tabulated { file } => SpectralDensity::from_table_file(&base_dir.join(file))?,
        };
        let spec = BathSpec::new(density, beta);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Frenkel {
        site_energies_cm: Vec<f64>,
        couplings_cm: Vec<Vec<f64>>,
        /// Shared by every site.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bath: Option<BathConfig>,
        /// One per site.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baths: Option<Vec<BathConfig>>,
    },
    SpinBoson {
        eps_cm: f64,
        delta_cm: f64,
        bath: BathConfig,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub dt_fs: f64,
    pub n_map_steps: usize,
    pub mem_len: usize,
    /// Number of transfer tensors kept; defaults to `n_map_steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ttm_len: Option<usize>,
    pub propagate_to_fs: f64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_kernel() -> KernelKind {
    KernelKind::InteractionPicture
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JumpConfig {
    /// γ|g⟩⟨site| with γ² = 1/τ (Frenkel models only).
    Extraction { site: usize, timescale_ps: f64 },
    /// Explicit matrix, rows of real and (optionally) imaginary parts.
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSetConfig {
    pub name: String,
    #[serde(default)]
    pub jumps: Vec<JumpConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub observables: Vec<Observable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Basis label of the pure initial state.
    pub initial: String,
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub quadrature: QuadSettings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jump_sets: Vec<JumpSetConfig>,
    pub output: OutputConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<RunConfig> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(config_err(format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema)));
        }
        let n = &self.numerics;
        if !(n.dt_fs > 0.0) || !n.dt_fs.is_finite() {
            return Err(config_err(format!("dt_fs must be positive, got {}", n.dt_fs)));
        }
        if n.mem_len == 0 {
            return Err(config_err("mem_len must be at least 1"));
        }
        if n.mem_len > n.n_map_steps {
            return Err(config_err(format!("mem_len = {} exceeds n_map_steps = {}", n.mem_len, n.n_map_steps)));
        }
        if let Some(k) = n.ttm_len {
            if k == 0 || k > n.n_map_steps {
                return Err(config_err(format!("ttm_len must be in 1..={}", n.n_map_steps)));
            }
        }
        let window = n.n_map_steps as f64 * n.dt_fs;
        if !(n.propagate_to_fs >= window * (1.0 - 1e-12)) {
            return Err(config_err(format!(
                "propagate_to_fs = {} is shorter than the map window n_map_steps·dt = {window}",
                n.propagate_to_fs
            )));
        }
        if self.output.observables.is_empty() {
            return Err(config_err("output.observables must not be empty"));
        }
        let mut names = HashSet::new();
        for set in &self.jump_sets {
            let ok = !set.name.is_empty()
                && set.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(config_err(format!("jump set name {:?} must be non-empty [A-Za-z0-9_-]", set.name)));
            }
            if !names.insert(set.name.as_str()) {
                return Err(config_err(format!("duplicate jump set name {:?}", set.name)));
            }
        }
        Ok(())
    }

    /// Steps needed to reach `propagate_to_fs`.
    pub fn propagation_steps(&self) -> usize {
        (self.numerics.propagate_to_fs / self.numerics.dt_fs - 1e-9).ceil() as usize
    }

    pub fn ttm_len(&self) -> usize {
        self.numerics.ttm_len.unwrap_or(self.numerics.n_map_steps)
    }

    pub fn quapi_settings(&self) -> QuapiSettings {
        let n = &self.numerics;
        QuapiSettings { dt: n.dt_fs, n_max: n.n_map_steps, mem_len: n.mem_len, budget: n.budget, quad: self.quadrature }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output.dir)
    }

    /// The system model without jump operators.
    pub fn build_model(&self) -> Result<SystemModel> {
        let model = match &self.model {
            ModelConfig::SpinBoson { eps_cm, delta_cm, bath } => {
                spin_boson(cm_inv_to_fs_inv(*eps_cm), cm_inv_to_fs_inv(*delta_cm), bath.build(&self.base_dir)?)
            }
            ModelConfig::Frenkel { site_energies_cm, couplings_cm, bath, baths } => {
                let n = site_energies_cm.len();
                if couplings_cm.len() != n || couplings_cm.iter().any(|r| r.len() != n) {
                    return Err(config_err(format!("couplings_cm must be {n}x{n}")));
                }
                let energies: Vec<f64> = site_energies_cm.iter().map(|&e| cm_inv_to_fs_inv(e)).collect();
                let couplings = DMatrix::from_fn(n, n, |i, j| cm_inv_to_fs_inv(couplings_cm[i][j]));
                let site_baths = match (bath, baths) {
                    (Some(b), None) => vec![b.build(&self.base_dir)?; n],
                    (None, Some(bs)) => bs.iter().map(|b| b.build(&self.base_dir)).collect::<Result<_>>()?,
                    _ => return Err(config_err("frenkel model needs exactly one of bath and baths")),
                };
                frenkel_with_ground(&energies, &couplings, site_baths, None)?
            }
        };
        model.validate()?;
        if model.basis_index(&self.initial).is_none() {
            return Err(config_err(format!(
                "initial state {:?} is not a basis label ({})",
                self.initial,
                model.basis_labels.join(", ")
            )));
        }
        Ok(model)
    }

    /// Named jump sets; an empty configuration list yields one empty set
    /// called `no_jumps`.
    pub fn build_jump_sets(&self, model: &SystemModel) -> Result<Vec<(String, Vec<JumpOperator>)>> {
        if self.jump_sets.is_empty() {
            return Ok(vec![("no_jumps".to_string(), Vec::new())]);
        }
        self.jump_sets
            .iter()
            .map(|set| {
                let jumps = set.jumps.iter().map(|j| self.build_jump(model, j)).collect::<Result<Vec<_>>>()?;
                Ok((set.name.clone(), jumps))
            })
            .collect()
    }

    fn build_jump(&self, model: &SystemModel, jump: &JumpConfig) -> Result<JumpOperator> {
        let d = model.dim();
        let op = match jump {
            JumpConfig::Extraction { site, timescale_ps } => {
                if !matches!(self.model, ModelConfig::Frenkel { .. }) {
                    return Err(config_err("site extraction jumps need a frenkel model"));
                }
                extraction_jump(d - 1, Extraction { site: *site, timescale_ps: *timescale_ps })?
            }
            JumpConfig::Matrix { re, im, label } => {
                let shape_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
                if !shape_ok(re) || im.as_ref().is_some_and(|m| !shape_ok(m)) {
                    return Err(config_err(format!("jump matrices must be {d}x{d}")));
                }
                let m = CMatrix::from_fn(d, d, |i, j| {
                    C64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
                });
                JumpOperator::new(m, label.clone().unwrap_or_else(|| "explicit".into()))
            }
        };
        op.validate(d)?;
        Ok(op)
    }
}
