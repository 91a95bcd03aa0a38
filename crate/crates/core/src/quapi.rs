//! Dense iterative quasi-adiabatic propagator path integral.
//!
//! A path point is a pair `α = (s⁺, s⁻)` of forward and backward system
//! basis states, encoded as the vectorization index `α = s⁻·d + s⁺`. The
//! dynamical map element `E(t_n)[α_n, α_0]` is the sum over all intermediate
//! points of the bare propagator elements `E₀(Δt)[α_{k+1}, α_k]` times the
//! Feynman–Vernon influence functional
//!
//! ```text
//! F = exp(−Σ_b Σ_{k=0}^{n} (c⁺_k − c⁻_k) Σ_{k'=0}^{k} (η_{k−k'} c⁺_{k'} − η*_{k−k'} c⁻_{k'}))
//! ```
//!
//! with `c^±_k` the coupling eigenvalue of bath `b` at `s^±_k`. The initial
//! index is never contracted against a density matrix, so every
//! map column is propagated separately.
//!
//! Up to `L` steps the full history is kept and the sum is exact. Beyond
//! that, influence pairs with lag `k − k' > L` are dropped and the oldest
//! retained point is summed out after each step, which bounds the stored
//! tensor at `(d²)^L` entries per map column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{bare_map, Superoperator};
use crate::bath::{eta_coefficients, BathSpec, EtaCoefficients};
use crate::error::{invalid, Error, Result};
use crate::models::SystemModel;
use crate::quad::QuadSettings;
use crate::{CMatrix, C64};

/// Default refusal threshold on `(d²)^(L+1)` path states.
pub const DEFAULT_BUDGET: u64 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuapiSettings {
    pub dt: f64,
    pub n_max: usize,
    pub mem_len: usize,
    pub budget: u64,
    pub quad: QuadSettings,
}

impl QuapiSettings {
    pub fn new(dt: f64, n_max: usize, mem_len: usize) -> Self {
        Self { dt, n_max, mem_len, budget: DEFAULT_BUDGET, quad: QuadSettings::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathSegment {
    pub fwd: usize,
    pub bwd: usize,
}

impl PathSegment {
    pub fn from_index(alpha: usize, dim: usize) -> Self {
        Self { fwd: alpha % dim, bwd: alpha / dim }
    }

    pub fn index(&self, dim: usize) -> usize {
        self.bwd * dim + self.fwd
    }
}

/// `E(t_1) .. E(t_n)` for one model and time step.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalMaps {
    pub dt: f64,
    pub mem_len: usize,
    pub maps: Vec<Superoperator>,
}

impl DynamicalMaps {
    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Influence functional of a path, keeping every pair.
pub fn influence_weight(path: &[PathSegment], etas: &[EtaCoefficients], baths: &[BathSpec]) -> Result<C64> {
    influence_weight_truncated(path, etas, baths, None)
}

/// Influence functional keeping only pairs with lag `≤ max_lag`.
pub fn influence_weight_truncated(
    path: &[PathSegment],
    etas: &[EtaCoefficients],
    baths: &[BathSpec],
    max_lag: Option<usize>,
) -> Result<C64> {
    if path.is_empty() {
        return Err(invalid("path must contain at least one point"));
    }
    if etas.len() != baths.len() {
        return Err(invalid("one η table per bath is required"));
    }
    let mut exponent = C64::new(0.0, 0.0);
    for (eta, bath) in etas.iter().zip(baths) {
        let c = &bath.coupling_diag;
        for k in 0..path.len() {
            let dk = c[path[k].fwd] - c[path[k].bwd];
            if dk == 0.0 {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for kp in 0..=k {
                let lag = k - kp;
                if max_lag.is_some_and(|m| lag > m) {
                    continue;
                }
                let e = eta.lag(lag)?;
                inner += e * c[path[kp].fwd] - e.conj() * c[path[kp].bwd];
            }
            exponent -= inner * dk;
        }
    }
    Ok(exponent.exp())
}

fn check_budget(dim: usize, mem_len: usize, budget: u64) -> Result<()> {
    let points = (dim * dim) as u128;
    let states = points.checked_pow(mem_len as u32 + 1).unwrap_or(u128::MAX);
    if states > budget as u128 {
        return Err(Error::Budget { dim, mem_len, states, budget: budget as u128 });
    }
    Ok(())
}

fn bath_etas(model: &SystemModel, dt: f64, lags: usize, quad: &QuadSettings) -> Result<Vec<EtaCoefficients>> {
    model.baths.iter().map(|b| eta_coefficients(b, dt, lags, quad)).collect()
}

/// Pair factors `I[lag][new·D + old]`, product over baths. Lag 0 holds the
/// self-interaction of the new point (indexed by `new·D + new`).
struct PairTables {
    points: usize,
    tables: Vec<Vec<C64>>,
}

impl PairTables {
    fn new(model: &SystemModel, etas: &[EtaCoefficients], max_lag: usize) -> Result<Self> {
        let d = model.dim();
        let points = d * d;
        let mut tables = Vec::with_capacity(max_lag + 1);
        for lag in 0..=max_lag {
            let mut table = vec![C64::new(0.0, 0.0); points * points];
            for new in 0..points {
                let a = PathSegment::from_index(new, d);
                for old in 0..points {
                    let b = PathSegment::from_index(old, d);
                    let mut exponent = C64::new(0.0, 0.0);
                    for (eta, bath) in etas.iter().zip(&model.baths) {
                        let c = &bath.coupling_diag;
                        let e = eta.lag(lag)?;
                        exponent -= (e * c[b.fwd] - e.conj() * c[b.bwd]) * (c[a.fwd] - c[a.bwd]);
                    }
                    table[new * points + old] = exponent.exp();
                }
            }
            tables.push(table);
        }
        Ok(Self { points, tables })
    }

    fn pair(&self, lag: usize, new: usize, old: usize) -> C64 {
        self.tables[lag][new * self.points + old]
    }

    fn diag(&self, point: usize) -> C64 {
        self.tables[0][point * self.points + point]
    }
}

/// Per-digit factors for one new point: `factors[i][x]` multiplies tail
/// digit `i` (oldest digit 0) taking value `x`.
struct Factors {
    points: usize,
    factors: Vec<Vec<C64>>,
    strides: Vec<usize>,
}

impl Factors {
    /// Σ_idx state[idx] · Π_i factors[i][digit_i(idx)], with digit 0 handled
    /// by `leaf(base, partial)`.
    fn walk<F: FnMut(usize, C64)>(&self, level: usize, base: usize, partial: C64, leaf: &mut F) {
        if level == 0 {
            leaf(base, partial);
            return;
        }
        let stride = self.strides[level];
        for (x, f) in self.factors[level].iter().enumerate() {
            self.walk(level - 1, base + x * stride, partial * f, leaf);
        }
    }
}

struct Engine<'a> {
    dim: usize,
    points: usize,
    mem_len: usize,
    bare: &'a CMatrix,
    pairs: &'a PairTables,
}

impl Engine<'_> {
    fn factors_for(&self, new: usize, len: usize) -> Factors {
        let points = self.points;
        let mut factors = Vec::with_capacity(len);
        let mut strides = Vec::with_capacity(len);
        let mut stride = 1;
        for i in 0..len {
            let lag = len - i;
            let mut f: Vec<C64> = (0..points).map(|x| self.pairs.pair(lag, new, x)).collect();
            if i == len - 1 {
                for (x, v) in f.iter_mut().enumerate() {
                    *v *= self.bare[(new, x)];
                }
            }
            factors.push(f);
            strides.push(stride);
            stride *= points;
        }
        Factors { points, factors, strides }
    }

    /// Scalar factor of a step that does not depend on the retained tail.
    fn scalar(&self, new: usize, initial: usize, len: usize) -> C64 {
        let mut s = self.pairs.diag(new);
        if len < self.mem_len {
            s *= self.pairs.pair(len + 1, new, initial);
        }
        if len == 0 {
            s *= self.bare[(new, initial)];
        }
        s
    }

    /// Advances one map column by one step. Returns the new tail (unless
    /// `keep` is false) and the column of `E(t_{n+1})`.
    fn step(&self, state: &[C64], len: usize, initial: usize, keep: bool) -> (Option<Vec<C64>>, Vec<C64>) {
        let points = self.points;
        let sum_out = len == self.mem_len;
        let new_len = if sum_out { len } else { len + 1 };
        let chunk = points.pow(new_len as u32 - 1);
        let column_entry = |new: usize, out: Option<&mut [C64]>| -> C64 {
            let s = self.scalar(new, initial, len);
            if len == 0 {
                if let Some(out) = out {
                    out[0] = state[0] * s;
                }
                return state[0] * s;
            }
            let fac = self.factors_for(new, len);
            let f0 = &fac.factors[0];
            let mut total = C64::new(0.0, 0.0);
            match out {
                None => {
                    fac.walk(len - 1, 0, s, &mut |base, partial| {
                        let mut acc = C64::new(0.0, 0.0);
                        for x in 0..fac.points {
                            acc += state[base + x] * f0[x];
                        }
                        total += acc * partial;
                    });
                }
                Some(out) if sum_out => {
                    fac.walk(len - 1, 0, s, &mut |base, partial| {
                        let mut acc = C64::new(0.0, 0.0);
                        for x in 0..fac.points {
                            acc += state[base + x] * f0[x];
                        }
                        let v = acc * partial;
                        out[base / fac.points] = v;
                        total += v;
                    });
                }
                Some(out) => {
                    fac.walk(len - 1, 0, s, &mut |base, partial| {
                        for x in 0..fac.points {
                            let v = state[base + x] * f0[x] * partial;
                            out[base + x] = v;
                            total += v;
                        }
                    });
                }
            }
            total
        };

        if keep {
            let mut next = vec![C64::new(0.0, 0.0); chunk * points];
            let column: Vec<C64> = next
                .par_chunks_mut(chunk)
                .enumerate()
                .map(|(new, out)| column_entry(new, Some(out)))
                .collect();
            (Some(next), column)
        } else {
            let column: Vec<C64> = (0..points).into_par_iter().map(|new| column_entry(new, None)).collect();
            (None, column)
        }
    }
}

/// Dynamical maps `E(t_1) .. E(t_{n_max})` with memory length `L`.
pub fn dynamical_maps(model: &SystemModel, settings: &QuapiSettings) -> Result<DynamicalMaps> {
    model.validate()?;
    let QuapiSettings { dt, n_max, mem_len, budget, quad } = *settings;
    if mem_len == 0 {
        return Err(invalid("memory length must be at least 1"));
    }
    if n_max < mem_len {
        return Err(invalid(format!("n_max = {n_max} must be at least the memory length {mem_len}")));
    }
    let d = model.dim();
    check_budget(d, mem_len, budget)?;
    let e0 = bare_map(&model.h0, dt)?;
    let etas = bath_etas(model, dt, mem_len, &quad)?;
    let pairs = PairTables::new(model, &etas, mem_len)?;
    let points = d * d;
    let engine = Engine { dim: d, points, mem_len, bare: e0.matrix(), pairs: &pairs };

    let mut maps = vec![CMatrix::zeros(points, points); n_max];
    for initial in 0..points {
        let mut state = vec![pairs.diag(initial)];
        let mut len = 0;
        for (n, map) in maps.iter_mut().enumerate() {
            let keep = n + 1 < n_max;
            let (next, column) = engine.step(&state, len, initial, keep);
            for (new, v) in column.into_iter().enumerate() {
                map[(new, initial)] = v;
            }
            if let Some(next) = next {
                state = next;
                len = (len + 1).min(mem_len);
            }
        }
    }
    let maps = maps
        .into_iter()
        .map(|m| Superoperator::from_matrix(engine.dim, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(DynamicalMaps { dt, mem_len, maps })
}

/// Brute-force enumeration of every path, one map at a time.
///
/// With `mem_len = None` all influence pairs are kept. This is exponentially
/// expensive and exists as an independent check on [`dynamical_maps`].
pub fn full_path_sum(
    model: &SystemModel,
    dt: f64,
    n_max: usize,
    mem_len: Option<usize>,
    quad: &QuadSettings,
) -> Result<Vec<Superoperator>> {
    model.validate()?;
    let d = model.dim();
    let points = d * d;
    check_budget(d, n_max, DEFAULT_BUDGET)?;
    let e0 = bare_map(&model.h0, dt)?;
    let etas = bath_etas(model, dt, n_max, quad)?;
    let mut out = Vec::with_capacity(n_max);
    let mut path = vec![PathSegment { fwd: 0, bwd: 0 }; n_max + 1];
    for n in 1..=n_max {
        let mut map = CMatrix::zeros(points, points);
        let total = points.pow(n as u32 + 1);
        for code in 0..total {
            let mut c = code;
            for p in path.iter_mut().take(n + 1) {
                *p = PathSegment::from_index(c % points, d);
                c /= points;
            }
            let mut w = C64::new(1.0, 0.0);
            for k in 1..=n {
                w *= e0.matrix()[(path[k].index(d), path[k - 1].index(d))];
            }
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            w *= influence_weight_truncated(&path[..=n], &etas, &model.baths, mem_len)?;
            map[(path[n].index(d), path[0].index(d))] += w;
        }
        out.push(Superoperator::from_matrix(d, map)?);
    }
    Ok(out)
}
