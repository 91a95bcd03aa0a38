//! On-disk cache for dynamical maps, transfer tensors and memory kernels.
//!
//! Files are JSON with every float written in shortest round-trip form, so a
//! loaded superoperator is bit-identical to the one stored. The key is a
//! SHA-256 digest of everything that affects the path sum; jump operators and
//! basis labels are not part of it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::Superoperator;
use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::models::SystemModel;
use crate::quad::QuadSettings;
use crate::quapi::DynamicalMaps;
use crate::ttm::{KernelKind, MemoryKernel, TransferTensors};
use crate::{CMatrix, C64};

pub const MAPS_FORMAT: &str = "pathlind-maps/1";
pub const TTM_FORMAT: &str = "pathlind-ttm/1";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

#[derive(Serialize)]
struct KeyRecord<'a> {
    format: &'static str,
    dim: usize,
    h0: Vec<[f64; 2]>,
    baths: &'a [BathSpec],
    dt: f64,
    mem_len: usize,
    n_map_steps: usize,
    quad: &'a QuadSettings,
}

impl CacheKey {
    pub fn new(model: &SystemModel, dt: f64, mem_len: usize, n_map_steps: usize, quad: &QuadSettings) -> CacheKey {
        let record = KeyRecord {
            format: MAPS_FORMAT,
            dim: model.dim(),
            h0: flatten(&model.h0),
            baths: &model.baths,
            dt,
            mem_len,
            n_map_steps,
            quad,
        };
        let bytes = serde_json::to_vec(&record).expect("key record serializes");
        CacheKey(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0[..16])
    }
}

fn flatten(m: &CMatrix) -> Vec<[f64; 2]> {
    m.iter().map(|z| [z.re, z.im]).collect()
}

fn unflatten(dim: usize, data: &[[f64; 2]]) -> Result<Superoperator> {
    let n = dim * dim;
    if data.len() != n * n {
        return Err(Error::Cache(format!("matrix has {} entries, expected {}", data.len(), n * n)));
    }
    let m = CMatrix::from_iterator(n, n, data.iter().map(|&[re, im]| C64::new(re, im)));
    Superoperator::from_matrix(dim, m)
}

#[derive(Serialize, Deserialize)]
struct MapsFile {
    format: String,
    key: String,
    dt: f64,
    mem_len: usize,
    dim: usize,
    maps: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct TtmFile {
    format: String,
    key: String,
    dt: f64,
    dim: usize,
    kernel_kind: KernelKind,
    tensors: Vec<Vec<[f64; 2]>>,
    kernels: Vec<Vec<[f64; 2]>>,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn maps_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("maps-{}.json", key.as_str()))
    }

    pub fn ttm_path(&self, key: &CacheKey, len: usize, kind: KernelKind) -> PathBuf {
        let tag = match kind {
            KernelKind::InteractionPicture => "ip",
            KernelKind::ShortTime => "st",
        };
        self.dir.join(format!("ttm-{}-{len}-{tag}.json", key.as_str()))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// `Ok(None)` when absent; `Err(Error::Cache)` when present but unusable.
    fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| Error::Cache(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn store_maps(&self, key: &CacheKey, maps: &DynamicalMaps) -> Result<()> {
        let file = MapsFile {
            format: MAPS_FORMAT.into(),
            key: key.as_str().into(),
            dt: maps.dt,
            mem_len: maps.mem_len,
            dim: maps.dim(),
            maps: maps.maps.iter().map(|m| flatten(m.matrix())).collect(),
        };
        let bytes = serde_json::to_vec(&file).map_err(|e| Error::Cache(e.to_string()))?;
        self.write_atomic(&self.maps_path(key), &bytes)
    }

    pub fn load_maps(&self, key: &CacheKey) -> Result<Option<DynamicalMaps>> {
        let path = self.maps_path(key);
        let Some(file) = Self::read::<MapsFile>(&path)? else { return Ok(None) };
        if file.format != MAPS_FORMAT || file.key != key.as_str() || file.maps.is_empty() {
            return Err(Error::Cache(format!("{}: header does not match key", path.display())));
        }
        let maps = file.maps.iter().map(|m| unflatten(file.dim, m)).collect::<Result<Vec<_>>>()?;
        Ok(Some(DynamicalMaps { dt: file.dt, mem_len: file.mem_len, maps }))
    }

    pub fn store_ttm(&self, key: &CacheKey, tt: &TransferTensors, kernel: &MemoryKernel) -> Result<()> {
        let file = TtmFile {
            format: TTM_FORMAT.into(),
            key: key.as_str().into(),
            dt: tt.dt,
            dim: tt.dim(),
            kernel_kind: kernel.kind,
            tensors: tt.tensors.iter().map(|m| flatten(m.matrix())).collect(),
            kernels: kernel.kernels.iter().map(|m| flatten(m.matrix())).collect(),
        };
        let bytes = serde_json::to_vec(&file).map_err(|e| Error::Cache(e.to_string()))?;
        self.write_atomic(&self.ttm_path(key, tt.len(), kernel.kind), &bytes)
    }

    pub fn load_ttm(&self, key: &CacheKey, len: usize, kind: KernelKind) -> Result<Option<(TransferTensors, MemoryKernel)>> {
        let path = self.ttm_path(key, len, kind);
        let Some(file) = Self::read::<TtmFile>(&path)? else { return Ok(None) };
        let header_ok = file.format == TTM_FORMAT
            && file.key == key.as_str()
            && file.kernel_kind == kind
            && file.tensors.len() == len
            && file.kernels.len() == len;
        if !header_ok {
            return Err(Error::Cache(format!("{}: header does not match key", path.display())));
        }
        let tensors = file.tensors.iter().map(|m| unflatten(file.dim, m)).collect::<Result<Vec<_>>>()?;
        let kernels = file.kernels.iter().map(|m| unflatten(file.dim, m)).collect::<Result<Vec<_>>>()?;
        Ok(Some((
            TransferTensors { dt: file.dt, tensors },
            MemoryKernel { dt: file.dt, kind, kernels },
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralDensity;
    use crate::lindblad::JumpOperator;
    use crate::models::spin_boson;

    fn model(lambda: f64) -> SystemModel {
        spin_boson(0.01, 0.02, BathSpec::new(SpectralDensity::DrudeLorentz { lambda, gamma: 0.05 }, 25.0))
    }

    fn maps() -> DynamicalMaps {
        let m = CMatrix::from_fn(4, 4, |i, j| C64::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) / 7.0));
        let m = Superoperator::from_matrix(2, m).unwrap();
        DynamicalMaps { dt: 3.0, mem_len: 2, maps: vec![m.clone(), m.scaled(std::f64::consts::PI)] }
    }

    #[test]
    fn key_tracks_physics_only() {
        let q = QuadSettings::default();
        let base = CacheKey::new(&model(0.003), 3.0, 2, 4, &q);
        assert_eq!(base, CacheKey::new(&model(0.003), 3.0, 2, 4, &q));
        let jumps = vec![JumpOperator::new(CMatrix::identity(2, 2), "x")];
        let mut relabelled = model(0.003).with_jumps(jumps);
        relabelled.basis_labels = vec!["a".into(), "b".into()];
        assert_eq!(base, CacheKey::new(&relabelled, 3.0, 2, 4, &q));
        assert_ne!(base, CacheKey::new(&model(0.0031), 3.0, 2, 4, &q));
        assert_ne!(base, CacheKey::new(&model(0.003), 3.5, 2, 4, &q));
        assert_ne!(base, CacheKey::new(&model(0.003), 3.0, 3, 4, &q));
        assert_ne!(base, CacheKey::new(&model(0.003), 3.0, 2, 5, &q));
        assert_ne!(base, CacheKey::new(&model(0.003), 3.0, 2, 4, &q.tightened(0.1)));
        let mut warm = model(0.003);
        warm.baths[0].beta = 24.0;
        assert_ne!(base, CacheKey::new(&warm, 3.0, 2, 4, &q));
    }

    #[test]
    fn maps_round_trip_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c"));
        let key = CacheKey::new(&model(0.003), 3.0, 2, 2, &QuadSettings::default());
        assert!(cache.load_maps(&key).unwrap().is_none());
        let m = maps();
        cache.store_maps(&key, &m).unwrap();
        assert_eq!(cache.load_maps(&key).unwrap().unwrap(), m);
    }

    #[test]
    fn ttm_round_trip_and_kind_tag() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new(&model(0.003), 3.0, 2, 2, &QuadSettings::default());
        let m = maps();
        let tt = TransferTensors { dt: 3.0, tensors: m.maps.clone() };
        let k = MemoryKernel { dt: 3.0, kind: KernelKind::ShortTime, kernels: m.maps.clone() };
        cache.store_ttm(&key, &tt, &k).unwrap();
        let (tt2, k2) = cache.load_ttm(&key, 2, KernelKind::ShortTime).unwrap().unwrap();
        assert_eq!((tt2, k2), (tt, k));
        assert!(cache.load_ttm(&key, 2, KernelKind::InteractionPicture).unwrap().is_none());
        assert!(cache.load_ttm(&key, 3, KernelKind::ShortTime).unwrap().is_none());
    }

    #[test]
    fn corrupt_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new(&model(0.003), 3.0, 2, 2, &QuadSettings::default());
        fs::write(cache.maps_path(&key), b"{ not json").unwrap();
        assert!(matches!(cache.load_maps(&key), Err(Error::Cache(_))));
        let other = CacheKey::new(&model(0.004), 3.0, 2, 2, &QuadSettings::default());
        cache.store_maps(&other, &maps()).unwrap();
        fs::copy(cache.maps_path(&other), cache.maps_path(&key)).unwrap();
        assert!(matches!(cache.load_maps(&key), Err(Error::Cache(_))));
    }
}
