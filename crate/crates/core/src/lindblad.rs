//! Lindblad jump operators, the memory-kernel + dissipator difference
//! equation, and a Runge–Kutta reference integrator for the memoryless limit.
//!
//! The hybrid recurrence is
//!
//! ```text
//! ρ_n = E₀(Δt) ρ_{n−1} + Δt² Σ_{j=1}^{min(n,L)} K_j ρ_{n−j} + Δt D(ρ_{n−1})
//! D(ρ) = Σ_j L_j ρ L_j† − ½ {L_j† L_j, ρ}
//! ```
//!
//! The dissipator enters at first order in Δt; the kernel term is exact
//! whenever the kernel came from the same maps.

use serde::{Deserialize, Serialize};

use crate::algebra::{reshape_square, vectorize, CVector, Superoperator};
use crate::error::{invalid, Error, Result};
use crate::ttm::MemoryKernel;
use crate::{CMatrix, DensityMatrix, Trajectory, C64};

/// Step-halving tolerance for [`lindblad_reference`].
pub const REFERENCE_TOL: f64 = 1e-10;

pub const MAX_SUBSTEPS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpOperator {
    /// Units of fs^-1/2; no Hermiticity requirement.
    pub matrix: CMatrix,
    pub label: String,
}

impl JumpOperator {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Self {
        Self { matrix, label: label.into() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return Err(invalid(format!(
                "jump operator '{}' is {}x{}, system has d = {dim}",
                self.label,
                self.matrix.nrows(),
                self.matrix.ncols()
            )));
        }
        if self.matrix.iter().any(|z| !z.is_finite()) {
            return Err(invalid(format!("jump operator '{}' has non-finite entries", self.label)));
        }
        Ok(())
    }
}

fn check_jumps(jumps: &[JumpOperator], dim: usize) -> Result<()> {
    jumps.iter().try_for_each(|j| j.validate(dim))
}

/// Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ}).
pub fn dissipator(jumps: &[JumpOperator], rho: &CMatrix) -> Result<CMatrix> {
    let d = rho.nrows();
    if !rho.is_square() {
        return Err(invalid("dissipator needs a square matrix"));
    }
    check_jumps(jumps, d)?;
    let mut out = CMatrix::zeros(d, d);
    for jump in jumps {
        let l = &jump.matrix;
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
    }
    Ok(out)
}

/// The dissipator as a superoperator on vectorized matrices.
pub fn dissipator_superoperator(jumps: &[JumpOperator], dim: usize) -> Result<Superoperator> {
    check_jumps(jumps, dim)?;
    let id = CMatrix::identity(dim, dim);
    let mut acc = Superoperator::zeros(dim).into_matrix();
    for jump in jumps {
        let l = &jump.matrix;
        let ldl = l.adjoint() * l;
        acc += Superoperator::from_sides(l, &l.map(|z| z.conj()))?.into_matrix();
        acc -= Superoperator::from_sides(&ldl, &id)?.into_matrix() * C64::new(0.5, 0.0);
        acc -= Superoperator::from_sides(&id, &ldl.transpose())?.into_matrix() * C64::new(0.5, 0.0);
    }
    Superoperator::from_matrix(dim, acc)
}

/// Propagates the memory-kernel master equation with the jump operators
/// added as an explicit first-order dissipator.
pub fn hybrid_propagate(
    kernel: &MemoryKernel,
    e0dt: &Superoperator,
    jumps: &[JumpOperator],
    rho0: &DensityMatrix,
    n_steps: usize,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    let d = kernel.dim();
    if rho0.dim() != d || e0dt.dim() != d {
        return Err(invalid(format!(
            "dimension mismatch: kernel d = {d}, bare map d = {}, initial state d = {}",
            e0dt.dim(),
            rho0.dim()
        )));
    }
    let dt = kernel.dt;
    let dt2 = C64::new(dt * dt, 0.0);
    let dis = if jumps.is_empty() { None } else { Some(dissipator_superoperator(jumps, d)?) };

    let mut history: Vec<CVector> = vec![vectorize(rho0.matrix())];
    let label = if jumps.is_empty() {
        "memory kernel".to_string()
    } else {
        let names: Vec<&str> = jumps.iter().map(|j| j.label.as_str()).collect();
        format!("memory kernel + {}", names.join(", "))
    };
    let mut traj = Trajectory::new(dt, rho0.clone(), label);
    for n in 1..=n_steps {
        let prev = &history[n - 1];
        let mut acc = e0dt.apply_vec(prev);
        for j in 1..=n.min(kernel.len()) {
            acc += kernel.kernels[j - 1].apply_vec(&history[n - j]) * dt2;
        }
        if let Some(dis) = &dis {
            acc += dis.apply_vec(prev) * C64::new(dt, 0.0);
        }
        traj.push(reshape_square(&acc, d));
        history.push(acc);
    }
    Ok(traj)
}

fn lindblad_rhs(h0: &CMatrix, jumps: &[JumpOperator], rho: &CMatrix) -> CMatrix {
    let comm = h0 * rho - rho * h0;
    let mut out = comm * C64::new(0.0, -1.0);
    if !jumps.is_empty() {
        out += dissipator(jumps, rho).expect("jumps validated by caller");
    }
    out
}

fn rk4_step(h0: &CMatrix, jumps: &[JumpOperator], rho: &CMatrix, h: f64) -> CMatrix {
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    let k1 = lindblad_rhs(h0, jumps, rho);
    let k2 = lindblad_rhs(h0, jumps, &(rho + &k1 * half));
    let k3 = lindblad_rhs(h0, jumps, &(rho + &k2 * half));
    let k4 = lindblad_rhs(h0, jumps, &(rho + &k3 * full));
    rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

/// Classic RK4 integration of dρ/dt = −i[H₀, ρ] + D(ρ), sampled every `dt`.
///
/// Each output step is split into `m` substeps, with `m` doubled until the
/// `m` and `2m` results agree to [`REFERENCE_TOL`] divided by the number of
/// output steps; the finer one is kept.
/// Fails if that needs more than [`MAX_SUBSTEPS`] substeps.
pub fn lindblad_reference(
    h0: &CMatrix,
    jumps: &[JumpOperator],
    rho0: &DensityMatrix,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    let d = rho0.dim();
    if h0.nrows() != d || h0.ncols() != d {
        return Err(invalid("Hamiltonian and initial state differ in dimension"));
    }
    if crate::algebra::hermiticity_defect(h0) > 1e-10 {
        return Err(invalid("Hamiltonian is not Hermitian"));
    }
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    check_jumps(jumps, d)?;
    let mut rho = rho0.matrix().clone();
    let mut traj = Trajectory::new(dt, rho0.clone(), "lindblad reference");
    let local_tol = REFERENCE_TOL / n_steps as f64;
    let mut m = 1;
    for n in 1..=n_steps {
        let advance = |m: usize| {
            let h = dt / m as f64;
            (0..m).fold(rho.clone(), |r, _| rk4_step(h0, jumps, &r, h))
        };
        let mut coarse = advance(m);
        loop {
            let fine = advance(2 * m);
            let gap = crate::algebra::max_abs(&(&coarse - &fine));
            let finite = fine.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if finite && gap <= local_tol {
                rho = fine;
                break;
            }
            m *= 2;
            if m > MAX_SUBSTEPS {
                return Err(Error::Numerical(format!(
                    "RK4 reference did not reach {local_tol:.1e} at step {n} (gap {gap:.3e})"
                )));
            }
            coarse = fine;
        }
        traj.push(rho.clone());
    }
    Ok(traj)
}
