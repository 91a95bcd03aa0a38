//! Maps → transfer tensors → kernel → propagation, with caching.
//!
//! Every stage first looks in the cache. Jump operators only enter the last
//! stage, so any number of jump sets share one path-integral run.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::algebra::{bare_map, DensityMatrix, Superoperator, Trajectory};
use crate::cache::{Cache, CacheKey};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::export::write_table;
use crate::lindblad::{hybrid_propagate, JumpOperator};
use crate::models::SystemModel;
use crate::quapi::{dynamical_maps, DynamicalMaps, QuapiSettings};
use crate::ttm::{extract_transfer_tensors, memory_kernel, KernelKind, KernelMode, MemoryKernel, TransferTensors};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageStatus {
    Computed,
    Loaded,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// No caching when `None`.
    pub cache_dir: Option<PathBuf>,
    pub force_recompute: bool,
    /// Overrides the configured path-state budget.
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub maps: Option<StageStatus>,
    pub ttm: Option<StageStatus>,
    /// Number of times the path sum was actually evaluated.
    pub quapi_runs: usize,
    pub propagations: usize,
    pub messages: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub name: String,
    pub trajectory: Trajectory,
}

pub struct Pipeline {
    config: RunConfig,
    model: SystemModel,
    settings: QuapiSettings,
    key: CacheKey,
    cache: Option<Cache>,
    force: bool,
    report: RunReport,
}

impl Pipeline {
    pub fn new(config: RunConfig, options: &RunOptions) -> Result<Pipeline> {
        config.validate()?;
        let model = config.build_model()?;
        let mut settings = config.quapi_settings();
        if let Some(b) = options.budget {
            settings.budget = b;
        }
        let key = CacheKey::new(&model, settings.dt, settings.mem_len, settings.n_max, &settings.quad);
        Ok(Pipeline {
            config,
            model,
            settings,
            key,
            cache: options.cache_dir.clone().map(Cache::new),
            force: options.force_recompute,
            report: RunReport::default(),
        })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn key(&self) -> &CacheKey {
        &self.key
    }

    pub fn report(&self) -> &RunReport {
        &self.report
    }

    fn note(&mut self, msg: String) {
        log::info!("{msg}");
        self.report.messages.push(msg);
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.report.messages.push(format!("warning: {msg}"));
    }

    /// Dynamical maps, from the cache when possible.
    pub fn maps(&mut self) -> Result<DynamicalMaps> {
        if let (Some(cache), false) = (&self.cache, self.force) {
            match cache.load_maps(&self.key) {
                Ok(Some(maps)) => {
                    self.report.maps = Some(StageStatus::Loaded);
                    self.note(format!("maps stage: loaded from cache (key {})", self.key));
                    return Ok(maps);
                }
                Ok(None) => {}
                Err(Error::Cache(msg)) => self.warn(format!("corrupt maps cache, recomputing: {msg}")),
                Err(e) => return Err(e),
            }
        }
        let s = self.settings;
        self.note(format!(
            "maps stage: running path sum (d = {}, dt = {} fs, L = {}, n = {})",
            self.model.dim(),
            s.dt,
            s.mem_len,
            s.n_max
        ));
        self.report.quapi_runs += 1;
        let maps = dynamical_maps(&self.model, &s)?;
        self.report.maps = Some(StageStatus::Computed);
        if let Some(cache) = &self.cache {
            cache.store_maps(&self.key, &maps)?;
        }
        Ok(maps)
    }

    fn kernel_mode(&self) -> Result<KernelMode> {
        Ok(match self.config.numerics.kernel {
            KernelKind::InteractionPicture => KernelMode::InteractionPicture,
            KernelKind::ShortTime => KernelMode::ShortTime(Superoperator::commutator(&self.model.h0)?),
        })
    }

    /// Markovian reference that the kernel was measured against.
    pub fn reference_map(&self) -> Result<Superoperator> {
        let dt = self.settings.dt;
        match self.kernel_mode()? {
            KernelMode::InteractionPicture => bare_map(&self.model.h0, dt),
            KernelMode::ShortTime(l0) => {
                let d = self.model.dim();
                let m = Superoperator::identity(d).into_matrix() - l0.matrix() * C64::new(0.0, dt);
                Superoperator::from_matrix(d, m)
            }
        }
    }

    /// Transfer tensors and memory kernel, from the cache when possible.
    pub fn transfer(&mut self) -> Result<(TransferTensors, MemoryKernel)> {
        let len = self.config.ttm_len();
        let kind = self.config.numerics.kernel;
        if let (Some(cache), false) = (&self.cache, self.force) {
            match cache.load_ttm(&self.key, len, kind) {
                Ok(Some(found)) => {
                    self.report.ttm = Some(StageStatus::Loaded);
                    self.note(format!("ttm stage: loaded {len} tensors from cache"));
                    return Ok(found);
                }
                Ok(None) => {}
                Err(Error::Cache(msg)) => self.warn(format!("corrupt ttm cache, recomputing: {msg}")),
                Err(e) => return Err(e),
            }
        }
        let maps = self.maps()?;
        let tt = extract_transfer_tensors(&maps.maps, maps.dt, len)?;
        if !tt.memory_converged() {
            self.warn(format!("memory not converged: ‖T_{len}‖/‖T_1‖ = {:.3e}", tt.tail_ratio()));
        }
        let e0 = bare_map(&self.model.h0, maps.dt)?;
        let kernel = memory_kernel(&tt, &e0, self.kernel_mode()?)?;
        self.report.ttm = Some(StageStatus::Computed);
        self.note(format!("ttm stage: extracted {len} tensors"));
        if let Some(cache) = &self.cache {
            cache.store_ttm(&self.key, &tt, &kernel)?;
        }
        Ok((tt, kernel))
    }

    /// Propagates every configured jump set (or only the jump-free dynamics).
    pub fn propagate(&mut self, with_jumps: bool) -> Result<Vec<Propagation>> {
        let (_, kernel) = self.transfer()?;
        let reference = self.reference_map()?;
        let sets: Vec<(String, Vec<JumpOperator>)> = if with_jumps {
            self.config.build_jump_sets(&self.model)?
        } else {
            vec![("no_jumps".to_string(), Vec::new())]
        };
        let d = self.model.dim();
        let initial = self.model.basis_index(&self.config.initial).expect("validated initial label");
        let rho0 = DensityMatrix::pure(d, initial)?;
        let n_steps = self.config.propagation_steps();
        let results = sets
            .par_iter()
            .map(|(name, jumps)| {
                let mut trajectory = hybrid_propagate(&kernel, &reference, jumps, &rho0, n_steps)?;
                trajectory.label = name.clone();
                Ok(Propagation { name: name.clone(), trajectory })
            })
            .collect::<Result<Vec<_>>>()?;
        self.report.propagations += results.len();
        self.note(format!("propagate stage: {} trajectories of {n_steps} steps", results.len()));
        Ok(results)
    }

    /// Writes one table per propagation into the output directory.
    pub fn export(&mut self, results: &[Propagation]) -> Result<Vec<PathBuf>> {
        let dir = self.config.output_dir();
        let mut paths = Vec::with_capacity(results.len());
        for r in results {
            let path = dir.join(format!("{}.dat", r.name));
            write_table(&path, &r.trajectory, &self.model.basis_labels, &self.config.output.observables)?;
            paths.push(path);
        }
        self.report.outputs.extend(paths.iter().cloned());
        Ok(paths)
    }

    /// The full pipeline.
    pub fn run(&mut self, with_jumps: bool) -> Result<Vec<Propagation>> {
        let results = self.propagate(with_jumps)?;
        self.export(&results)?;
        Ok(results)
    }
}
