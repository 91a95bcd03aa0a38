//! Open quantum system dynamics from path-integral dynamical maps.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`quapi`] sums the influence-functional weighted paths of an iterative
//!    quasi-adiabatic propagator path integral and returns the dynamical maps
//!    `E(t_1) .. E(t_n)` with the initial index left uncontracted.
//! 2. [`ttm`] turns those maps into transfer tensors and memory kernels.
//! 3. [`lindblad`] propagates the reduced density matrix with the memory
//!    kernel plus a Lindblad dissipator for empirical decay channels.
//! 4. [`pipeline`] wires the stages together behind an on-disk cache so that
//!    changing the jump operators never re-runs the path sum.
//!
//! Units: ħ = 1, time in fs, energy in fs⁻¹. [`units`] converts from cm⁻¹.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bath;
pub mod cache;
pub mod config;
pub mod error;
pub mod export;
pub mod lindblad;
pub mod models;
pub mod pipeline;
pub mod quad;
pub mod quapi;
pub mod ttm;
pub mod units;

pub use algebra::{bare_map, compose, CMatrix, DensityMatrix, Superoperator, Trajectory, C64};
pub use bath::{bath_response, eta_coefficients, BathSpec, EtaCoefficients, SpectralDensity};
pub use error::{Error, Result};
pub use lindblad::{dissipator, hybrid_propagate, lindblad_reference, JumpOperator};
pub use models::{frenkel_with_ground, spin_boson, Extraction, SystemModel};
pub use quad::QuadSettings;
pub use quapi::{dynamical_maps, DynamicalMaps, QuapiSettings};
pub use ttm::{extract_transfer_tensors, memory_kernel, ttm_propagate, KernelMode, MemoryKernel, TransferTensors};
