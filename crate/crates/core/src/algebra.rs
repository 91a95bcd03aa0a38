//! Dense complex linear algebra shared by every stage: density matrices,
//! superoperators on column-major vectorized density matrices, trajectories
//! and the bare forward-backward propagator.
//!
//! Vectorization stacks columns: entry `(r, c)` of a `d×d` matrix lands at
//! index `c·d + r`. Every producer and consumer of a [`Superoperator`] uses
//! this convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Largest entrywise modulus; NaN if any entry is NaN.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, nan_max)
}

/// `f64::max` that propagates NaN instead of discarding it.
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn vectorize(m: &CMatrix) -> CVector {
    // nalgebra storage is column-major already
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, dim: usize) -> Result<CMatrix> {
    if v.len() != dim * dim {
        return Err(invalid(format!(
            "vector of length {} cannot be reshaped to {dim}x{dim}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

pub(crate) fn reshape_square(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// exp(−i H t) for Hermitian `H`, via eigendecomposition.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    check_hermitian(h, 1e-10, "Hamiltonian")?;
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::new(0.0, -e * t).exp()),
    );
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}

fn check_hermitian(h: &CMatrix, tol: f64, what: &str) -> Result<()> {
    if !h.is_square() {
        return Err(invalid(format!("{what} must be square, got {}x{}", h.nrows(), h.ncols())));
    }
    let defect = hermiticity_defect(h);
    if defect > tol {
        return Err(invalid(format!("{what} is not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

/// A validated reduced density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(data: CMatrix) -> Result<Self> {
        check_hermitian(&data, HERMITIAN_TOL, "density matrix")?;
        if data.nrows() == 0 {
            return Err(invalid("density matrix must have positive dimension"));
        }
        let tr = data.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let eig = nalgebra::SymmetricEigen::new(data.clone());
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(invalid(format!(
                "density matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { data })
    }

    /// |i⟩⟨i|
    pub fn pure(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for d = {dim}")));
        }
        let mut data = CMatrix::zeros(dim, dim);
        data[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { data })
    }

    /// Wraps a propagated state. Propagation does not renormalize, so the
    /// construction-time invariants are not re-checked here.
    pub(crate) fn from_propagated(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.data[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }
}

/// Linear map on vectorized `d×d` matrices, stored as a `d²×d²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    data: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, data: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if dim == 0 || data.nrows() != n || data.ncols() != n {
            return Err(invalid(format!(
                "superoperator for d = {dim} must be {n}x{n}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, data: CMatrix::identity(dim * dim, dim * dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: CMatrix::zeros(dim * dim, dim * dim) }
    }

    /// The map ρ ↦ A ρ Bᵀ. In column-major vectorization this is `kron(B, A)`.
    pub fn from_sides(left: &CMatrix, right: &CMatrix) -> Result<Self> {
        let d = left.nrows();
        if !left.is_square() || !right.is_square() || right.nrows() != d {
            return Err(invalid("left and right factors must be square with equal dimension"));
        }
        Ok(Self { dim: d, data: right.kronecker(left) })
    }

    /// Commutator superoperator ρ ↦ [H, ρ].
    pub fn commutator(h: &CMatrix) -> Result<Self> {
        let d = h.nrows();
        let id = CMatrix::identity(d, d);
        let left = Self::from_sides(h, &id)?;
        let right = Self::from_sides(&id, &h.transpose())?;
        Ok(Self { dim: d, data: left.data - right.data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// unvec(S · vec(ρ)); no renormalization.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(invalid(format!(
                "superoperator of d = {} applied to {}x{} matrix",
                self.dim,
                rho.nrows(),
                rho.ncols()
            )));
        }
        unvectorize(&(&self.data * vectorize(rho)), self.dim)
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        &self.data * v
    }

    /// `self · first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        compose(self, first)
    }

    pub fn scaled(&self, factor: f64) -> Superoperator {
        Superoperator { dim: self.dim, data: &self.data * C64::new(factor, 0.0) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        max_abs(&(&self.data - &other.data))
    }

    /// max |Tr(S e_j) − Tr(e_j)| over vectorized matrix units e_j.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for col in 0..d * d {
            let tr: C64 = (0..d).map(|r| self.data[(r * d + r, col)]).sum();
            let expected = if col % d == col / d { 1.0 } else { 0.0 };
            worst = worst.max((tr - C64::new(expected, 0.0)).norm());
        }
        worst
    }
}

/// `second · first` (apply `first`, then `second`).
pub fn compose(second: &Superoperator, first: &Superoperator) -> Result<Superoperator> {
    if second.dim != first.dim {
        return Err(invalid(format!(
            "cannot compose superoperators of d = {} and d = {}",
            second.dim, first.dim
        )));
    }
    Ok(Superoperator { dim: first.dim, data: &second.data * &first.data })
}

/// Bare forward-backward propagator ρ ↦ e^{−iH₀dt} ρ e^{iH₀dt}.
pub fn bare_map(h0: &CMatrix, dt: f64) -> Result<Superoperator> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let u = unitary_propagator(h0, dt)?;
    // U ρ U† = U ρ (conj U)ᵀ
    Superoperator::from_sides(&u, &u.map(|z| z.conj()))
}

/// Density matrices at `t_n = n·dt`, starting from the initial condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DensityMatrix>,
    pub label: String,
}

impl Trajectory {
    pub fn new(dt: f64, initial: DensityMatrix, label: impl Into<String>) -> Self {
        Self { dt, states: vec![initial], label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |n| n as f64 * self.dt)
    }

    pub(crate) fn push(&mut self, state: CMatrix) {
        self.states.push(DensityMatrix::from_propagated(state));
    }

    pub fn populations(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(i)).collect()
    }

    /// Largest |ρ_n − σ_n| entry over both trajectories.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::Validation("trajectories differ in length or dimension".into()));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| max_abs(&(a.matrix() - b.matrix())))
            .fold(0.0, nan_max))
    }

    /// Largest population difference over all times and basis states.
    pub fn max_population_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::Validation("trajectories differ in length or dimension".into()));
        }
        let d = self.dim();
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| (0..d).map(move |i| (a.population(i) - b.population(i)).abs()))
            .fold(0.0, nan_max))
    }
}
