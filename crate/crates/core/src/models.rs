//! System models: the spin-boson test system and Frenkel exciton chains with
//! an appended global ground state.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::hermiticity_defect;
use crate::bath::BathSpec;
use crate::error::{invalid, Result};
use crate::lindblad::JumpOperator;
use crate::units::decay_amplitude;
use crate::{CMatrix, C64};

/// System Hamiltonian, site-local harmonic baths and empirical jump operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub h0: CMatrix,
    pub baths: Vec<BathSpec>,
    pub jumps: Vec<JumpOperator>,
    pub basis_labels: Vec<String>,
}

impl SystemModel {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || !self.h0.is_square() {
            return Err(invalid("system Hamiltonian must be a non-empty square matrix"));
        }
        let defect = hermiticity_defect(&self.h0);
        if defect > 1e-12 {
            return Err(invalid(format!("system Hamiltonian is not Hermitian (defect {defect:.3e})")));
        }
        for (k, bath) in self.baths.iter().enumerate() {
            bath.validate()?;
            if bath.coupling_diag.len() != d {
                return Err(invalid(format!(
                    "bath {k} couples through {} eigenvalues, system has d = {d}",
                    bath.coupling_diag.len()
                )));
            }
        }
        for jump in &self.jumps {
            jump.validate(d)?;
        }
        if self.basis_labels.len() != d {
            return Err(invalid("one basis label per basis state is required"));
        }
        Ok(())
    }

    pub fn with_jumps(&self, jumps: Vec<JumpOperator>) -> SystemModel {
        SystemModel { jumps, ..self.clone() }
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis_labels.iter().position(|l| l == label)
    }
}

/// H₀ = ε σ_z + Δ σ_x with one bath coupled through σ_z.
///
/// The bath's coupling eigenvalues are set to (+1, −1).
pub fn spin_boson(eps: f64, delta: f64, bath: BathSpec) -> SystemModel {
    let h0 = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(eps, 0.0), C64::new(delta, 0.0), C64::new(delta, 0.0), C64::new(-eps, 0.0)],
    );
    SystemModel {
        h0,
        baths: vec![bath.with_coupling(vec![1.0, -1.0])],
        jumps: Vec::new(),
        basis_labels: vec!["up".into(), "down".into()],
    }
}

/// Excitation drain from one site into the ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    /// 1-based site number.
    pub site: usize,
    /// Decay timescale 1/γ² in ps.
    pub timescale_ps: f64,
}

/// γ|g⟩⟨m| with γ² = 1/τ, for a Frenkel model of `n_sites` sites plus ground.
pub fn extraction_jump(n_sites: usize, extraction: Extraction) -> Result<JumpOperator> {
    let Extraction { site, timescale_ps } = extraction;
    if site == 0 || site > n_sites {
        return Err(invalid(format!("extraction site {site} is not in 1..={n_sites}")));
    }
    if !(timescale_ps > 0.0) || !timescale_ps.is_finite() {
        return Err(invalid(format!("decay timescale must be positive, got {timescale_ps} ps")));
    }
    let d = n_sites + 1;
    let mut m = CMatrix::zeros(d, d);
    m[(n_sites, site - 1)] = C64::new(decay_amplitude(timescale_ps), 0.0);
    Ok(JumpOperator::new(m, format!("{timescale_ps} ps decay of site {site}")))
}

/// Frenkel exciton Hamiltonian on `N` sites with the global ground state |g⟩
/// appended as the last basis state.
///
/// Bath `k` couples through |k⟩⟨k|; the ground state is uncoupled, carries
/// zero energy and has no electronic coupling to the sites.
pub fn frenkel_with_ground(
    site_energies: &[f64],
    couplings: &DMatrix<f64>,
    site_baths: Vec<BathSpec>,
    extraction: Option<Extraction>,
) -> Result<SystemModel> {
    let n = site_energies.len();
    if n == 0 {
        return Err(invalid("Frenkel model needs at least one site"));
    }
    if couplings.nrows() != n || couplings.ncols() != n {
        return Err(invalid(format!("coupling matrix must be {n}x{n}")));
    }
    for i in 0..n {
        if couplings[(i, i)] != 0.0 {
            return Err(invalid("coupling matrix must have a zero diagonal"));
        }
        for j in 0..i {
            if couplings[(i, j)] != couplings[(j, i)] {
                return Err(invalid(format!("coupling matrix is not symmetric at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    if site_baths.len() != n {
        return Err(invalid(format!("expected {n} site baths, got {}", site_baths.len())));
    }
    let d = n + 1;
    let mut h0 = CMatrix::zeros(d, d);
    for i in 0..n {
        h0[(i, i)] = C64::new(site_energies[i], 0.0);
        for j in 0..n {
            if i != j {
                h0[(i, j)] = C64::new(couplings[(i, j)], 0.0);
            }
        }
    }
    let baths = site_baths
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            let mut c = vec![0.0; d];
            c[k] = 1.0;
            b.with_coupling(c)
        })
        .collect();
    let jumps = extraction.map(|e| extraction_jump(n, e)).transpose()?.into_iter().collect();
    let mut basis_labels: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    basis_labels.push("g".into());
    let model = SystemModel { h0, baths, jumps, basis_labels };
    model.validate()?;
    Ok(model)
}
