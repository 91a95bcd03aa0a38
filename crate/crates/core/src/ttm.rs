//! Transfer tensors and memory kernels extracted from dynamical maps.
//!
//! With `E(t_0) = I`, the transfer tensors satisfy
//! `E(t_n) = Σ_{k=1}^{min(n,L)} T_k E(t_{n−k})` and the discrete memory
//! kernel is `K_k = (T_k − δ_{k1} E₀(Δt)) / Δt²`.

use serde::{Deserialize, Serialize};

use crate::algebra::{reshape_square, vectorize, CVector, Superoperator};
use crate::error::{invalid, Result};
use crate::{DensityMatrix, Trajectory};

/// Threshold on ‖T_L‖_F / ‖T_1‖_F above which the memory is reported as not
/// converged.
pub const MEMORY_CONVERGENCE_RATIO: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferTensors {
    pub dt: f64,
    pub tensors: Vec<Superoperator>,
}

impl TransferTensors {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tensors[0].dim()
    }

    /// Keeps the first `len` tensors.
    pub fn truncated(&self, len: usize) -> TransferTensors {
        TransferTensors { dt: self.dt, tensors: self.tensors[..len.min(self.len())].to_vec() }
    }

    /// ‖T_L‖_F / ‖T_1‖_F
    pub fn tail_ratio(&self) -> f64 {
        let first = self.tensors[0].frobenius_norm();
        self.tensors[self.len() - 1].frobenius_norm() / first
    }

    pub fn memory_converged(&self) -> bool {
        self.len() < 2 || self.tail_ratio() <= MEMORY_CONVERGENCE_RATIO
    }

    /// `E(t_1) .. E(t_n)` rebuilt from the tensors.
    pub fn reconstruct(&self, n: usize) -> Vec<Superoperator> {
        let d = self.dim();
        let mut maps: Vec<Superoperator> = Vec::with_capacity(n + 1);
        maps.push(Superoperator::identity(d));
        for step in 1..=n {
            let mut acc = Superoperator::zeros(d).into_matrix();
            for k in 1..=step.min(self.len()) {
                acc += self.tensors[k - 1].matrix() * maps[step - k].matrix();
            }
            maps.push(Superoperator::from_matrix(d, acc).expect("dimensions agree"));
        }
        maps.remove(0);
        maps
    }

    /// Largest entrywise error of the reconstruction against `maps`.
    pub fn reconstruction_error(&self, maps: &[Superoperator]) -> f64 {
        self.reconstruct(maps.len())
            .iter()
            .zip(maps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, crate::algebra::nan_max)
    }
}

/// T_1 = E(t_1); T_n = E(t_n) − Σ_{k=1}^{n−1} T_k E(t_{n−k}).
pub fn extract_transfer_tensors(maps: &[Superoperator], dt: f64, len: usize) -> Result<TransferTensors> {
    if len == 0 {
        return Err(invalid("at least one transfer tensor is required"));
    }
    if maps.len() < len {
        return Err(invalid(format!("{len} transfer tensors need {len} maps, got {}", maps.len())));
    }
    let d = maps[0].dim();
    if maps.iter().any(|m| m.dim() != d) {
        return Err(invalid("all dynamical maps must share one dimension"));
    }
    let mut tensors: Vec<Superoperator> = Vec::with_capacity(len);
    for n in 1..=len {
        let mut t = maps[n - 1].matrix().clone();
        for k in 1..n {
            t -= tensors[k - 1].matrix() * maps[n - k - 1].matrix();
        }
        tensors.push(Superoperator::from_matrix(d, t)?);
    }
    let tt = TransferTensors { dt, tensors };
    if !tt.memory_converged() {
        log::warn!(
            "memory not converged: ‖T_{}‖/‖T_1‖ = {:.3e} exceeds {:.0e}",
            tt.len(),
            tt.tail_ratio(),
            MEMORY_CONVERGENCE_RATIO
        );
    }
    Ok(tt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    InteractionPicture,
    ShortTime,
}

/// How the Markovian part of `T_1` is removed.
pub enum KernelMode {
    /// Subtract the bare propagator E₀(Δt).
    InteractionPicture,
    /// Subtract `I − iL₀Δt`; carries the commutator superoperator L₀.
    ShortTime(Superoperator),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryKernel {
    pub dt: f64,
    pub kind: KernelKind,
    /// K_1 .. K_L, in fs⁻².
    pub kernels: Vec<Superoperator>,
}

impl MemoryKernel {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernels[0].dim()
    }
}

pub fn memory_kernel(tt: &TransferTensors, e0dt: &Superoperator, mode: KernelMode) -> Result<MemoryKernel> {
    let d = tt.dim();
    if e0dt.dim() != d {
        return Err(invalid("bare map and transfer tensors differ in dimension"));
    }
    let dt = tt.dt;
    let (reference, kind) = match mode {
        KernelMode::InteractionPicture => (e0dt.matrix().clone(), KernelKind::InteractionPicture),
        KernelMode::ShortTime(l0) => {
            if l0.dim() != d {
                return Err(invalid("Liouvillian and transfer tensors differ in dimension"));
            }
            let id = Superoperator::identity(d).into_matrix();
            (id - l0.matrix() * crate::C64::new(0.0, dt), KernelKind::ShortTime)
        }
    };
    let inv_dt2 = 1.0 / (dt * dt);
    let kernels = tt
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let shifted = if i == 0 { t.matrix() - &reference } else { t.matrix().clone() };
            Superoperator::from_matrix(d, shifted * crate::C64::new(inv_dt2, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MemoryKernel { dt, kind, kernels })
}

/// ρ(t_n) = Σ_{k=1}^{min(n,L)} T_k ρ(t_{n−k}).
pub fn ttm_propagate(tt: &TransferTensors, rho0: &DensityMatrix, n_steps: usize) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    let d = tt.dim();
    if rho0.dim() != d {
        return Err(invalid(format!("initial state has d = {}, tensors have d = {d}", rho0.dim())));
    }
    let mut history: Vec<CVector> = vec![vectorize(rho0.matrix())];
    let mut traj = Trajectory::new(tt.dt, rho0.clone(), "ttm");
    for n in 1..=n_steps {
        let mut acc = CVector::zeros(d * d);
        for k in 1..=n.min(tt.len()) {
            acc += tt.tensors[k - 1].apply_vec(&history[n - k]);
        }
        traj.push(reshape_square(&acc, d));
        history.push(acc);
    }
    Ok(traj)
}
