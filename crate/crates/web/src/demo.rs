//! Plain-Rust implementations behind the browser bindings.

use nalgebra::DMatrix;
use pathlind::units::{beta_from_temperature, cm_inv_to_fs_inv};
use pathlind::{
    bare_map, bath_response, dynamical_maps, extract_transfer_tensors, frenkel_with_ground, hybrid_propagate,
    memory_kernel, spin_boson, BathSpec, DensityMatrix, Extraction, KernelMode, MemoryKernel, QuadSettings,
    QuapiSettings, SpectralDensity, Superoperator, SystemModel,
};

pub type Result<T> = std::result::Result<T, String>;

fn drude(lambda_cm: f64, gamma_cm: f64, temperature_k: f64) -> BathSpec {
    let beta = if temperature_k == 0.0 { f64::INFINITY } else { beta_from_temperature(temperature_k) };
    BathSpec::new(
        SpectralDensity::DrudeLorentz { lambda: cm_inv_to_fs_inv(lambda_cm), gamma: cm_inv_to_fs_inv(gamma_cm) },
        beta,
    )
}

/// Interleaved (Re, Im) of C(t) on `n` points in (0, t_max], in fs⁻².
pub fn bath_response_curve(lambda_cm: f64, gamma_cm: f64, temperature_k: f64, t_max_fs: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || t_max_fs.is_nan() || t_max_fs <= 0.0 {
        return Err("need at least one point and a positive time range".into());
    }
    let bath = drude(lambda_cm, gamma_cm, temperature_k);
    bath.validate().map_err(|e| e.to_string())?;
    let quad = QuadSettings { rel_tol: 1e-8, ..QuadSettings::default() };
    let mut out = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let c = bath_response(&bath, t_max_fs * k as f64 / n as f64, &quad).map_err(|e| e.to_string())?;
        out.push(c.re);
        out.push(c.im);
    }
    Ok(out)
}

/// ⟨σ_z⟩(t_n) for n = 0..=n_steps, starting from the upper state.
#[allow(clippy::too_many_arguments)]
pub fn spin_boson_sigma_z(
    eps_cm: f64,
    delta_cm: f64,
    lambda_cm: f64,
    gamma_cm: f64,
    temperature_k: f64,
    dt_fs: f64,
    mem_len: usize,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let model = spin_boson(cm_inv_to_fs_inv(eps_cm), cm_inv_to_fs_inv(delta_cm), drude(lambda_cm, gamma_cm, temperature_k));
    let (kernel, e0) = kernel_for(&model, dt_fs, mem_len)?;
    let rho0 = DensityMatrix::pure(2, 0).map_err(|e| e.to_string())?;
    let traj = hybrid_propagate(&kernel, &e0, &[], &rho0, n_steps.max(1)).map_err(|e| e.to_string())?;
    Ok(traj.states.iter().take(n_steps + 1).map(|s| s.population(0) - s.population(1)).collect())
}

fn kernel_for(model: &SystemModel, dt: f64, mem_len: usize) -> Result<(MemoryKernel, Superoperator)> {
    if mem_len == 0 || mem_len > 8 {
        return Err("memory length must be between 1 and 8".into());
    }
    let n = 2 * mem_len;
    let maps = dynamical_maps(model, &QuapiSettings::new(dt, n, mem_len)).map_err(|e| e.to_string())?;
    let tt = extract_transfer_tensors(&maps.maps, dt, n).map_err(|e| e.to_string())?;
    let e0 = bare_map(&model.h0, dt).map_err(|e| e.to_string())?;
    let kernel = memory_kernel(&tt, &e0, KernelMode::InteractionPicture).map_err(|e| e.to_string())?;
    Ok((kernel, e0))
}

/// Three-site Frenkel model plus ground state; the memory kernel is built
/// once and every decay timescale reuses it.
pub struct DecayExplorer {
    model: SystemModel,
    kernel: MemoryKernel,
    e0: Superoperator,
}

pub const SITES: usize = 3;

impl DecayExplorer {
    pub fn new(mem_len: usize) -> Result<Self> {
        let energies: Vec<f64> = [200.0, 320.0, 0.0].iter().map(|&e| cm_inv_to_fs_inv(e)).collect();
        let j = [[0.0, -87.7, 5.5], [-87.7, 0.0, 30.8], [5.5, 30.8, 0.0]];
        let couplings = DMatrix::from_fn(SITES, SITES, |a, b| cm_inv_to_fs_inv(j[a][b]));
        let model = frenkel_with_ground(&energies, &couplings, vec![drude(35.0, 300.0, 300.0); SITES], None)
            .map_err(|e| e.to_string())?;
        let (kernel, e0) = kernel_for(&model, 5.0, mem_len)?;
        Ok(Self { model, kernel, e0 })
    }

    pub fn dt(&self) -> f64 {
        self.kernel.dt
    }

    /// Populations of sites 1..3 and g, row per step, flattened. A
    /// non-positive timescale switches the extraction from site 3 off.
    pub fn populations(&self, timescale_ps: f64, initial_site: usize, n_steps: usize) -> Result<Vec<f64>> {
        if initial_site == 0 || initial_site > SITES {
            return Err(format!("initial site must be in 1..={SITES}"));
        }
        let jumps = if timescale_ps > 0.0 {
            vec![pathlind::models::extraction_jump(SITES, Extraction { site: 3, timescale_ps }).map_err(|e| e.to_string())?]
        } else {
            Vec::new()
        };
        let d = self.model.dim();
        let rho0 = DensityMatrix::pure(d, initial_site - 1).map_err(|e| e.to_string())?;
        let traj = hybrid_propagate(&self.kernel, &self.e0, &jumps, &rho0, n_steps.max(1)).map_err(|e| e.to_string())?;
        Ok(traj.states.iter().take(n_steps + 1).flat_map(|s| s.populations()).collect())
    }
}
