//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands, plus the
//! two semi-infinite tails the bath integrals need: a smooth algebraic tail
//! (mapped onto a finite interval) and an oscillatory tail `h(ω)e^{iσω}`
//! (half-period panels summed with Wynn's epsilon algorithm).

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerances shared by every bath integral. Part of the cache key.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-16, max_intervals: 4000 }
    }
}

impl QuadSettings {
    pub fn target(&self, value: C64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.norm())
    }

    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod rule with its embedded 7-point Gauss rule.
fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    Estimate { value: kronrod * half, error: ((kronrod - gauss) * half).norm() }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<Estimate> {
    integrate_with_target(&mut f, a, b, settings, 0.0)
}

/// Same as [`integrate`] but also accepts `floor` as an absolute error target,
/// used when `[a, b]` is one piece of a larger integral.
fn integrate_with_target<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
    floor: f64,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    let first = gk15(f, a, b);
    let mut total = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est: first });

    while error > settings.target(total).max(floor) || !error.is_finite() {
        if heap.len() >= settings.max_intervals || !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::Quadrature { estimate: total, error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Err(Error::Quadrature { estimate: total, error });
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Panel { a: worst.a, b: mid, est: left });
        heap.push(Panel { a: mid, b: worst.b, est: right });
    }
    // recompute the sums to shed accumulated cancellation in the running totals
    let value = heap.iter().map(|p| p.est.value).sum();
    let error = heap.iter().map(|p| p.est.error).sum();
    Ok(Estimate { value, error })
}

/// ∫_a^∞ f(ω) dω for a smooth, non-oscillatory, decaying integrand.
/// Uses ω = a + s(1 − x)/x with x ∈ (0, 1].
pub fn integrate_to_infinity<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    scale: f64,
    settings: &QuadSettings,
) -> Result<Estimate> {
    let mut g = |x: f64| {
        let w = a + scale * (1.0 - x) / x;
        f(w) * (scale / (x * x))
    };
    integrate_with_target(&mut g, 0.0, 1.0, settings, 0.0)
}

/// ∫_a^∞ h(ω) e^{iσω} dω for `h` smooth and eventually monotone decaying.
///
/// The tail is cut into half periods of π/|σ|; the partial sums form an
/// alternating sequence whose limit is extrapolated with the epsilon
/// algorithm. `floor` is an absolute error target supplied by the caller.
pub fn integrate_oscillatory_tail<F: FnMut(f64) -> C64>(
    mut h: F,
    sigma: f64,
    a: f64,
    settings: &QuadSettings,
    floor: f64,
) -> Result<Estimate> {
    const MAX_PANELS: usize = 400;
    const MIN_PANELS: usize = 6;
    if sigma == 0.0 {
        return Err(Error::Numerical("oscillatory tail requires a nonzero frequency".into()));
    }
    let width = PI / sigma.abs();
    let mut f = |w: f64| h(w) * C64::new(0.0, sigma * w).exp();
    let mut partial = Vec::with_capacity(64);
    let mut running = C64::new(0.0, 0.0);
    let mut quad_err = 0.0;
    let mut last: Option<C64> = None;
    let mut agreed = 0;
    for k in 0..MAX_PANELS {
        let lo = a + k as f64 * width;
        let piece = integrate_with_target(&mut f, lo, lo + width, settings, floor * 1e-3)?;
        running += piece.value;
        quad_err += piece.error;
        partial.push(running);
        if partial.len() < MIN_PANELS {
            continue;
        }
        let extrapolated = wynn_epsilon(&partial);
        if let Some(prev) = last {
            let diff = (extrapolated - prev).norm();
            if diff <= settings.target(extrapolated).max(floor) {
                agreed += 1;
                if agreed >= 2 {
                    return Ok(Estimate { value: extrapolated, error: diff + quad_err });
                }
            } else {
                agreed = 0;
            }
        }
        last = Some(extrapolated);
    }
    Err(Error::Quadrature { estimate: last.unwrap_or(running), error: f64::INFINITY })
}

/// Epsilon-algorithm limit of a sequence of partial sums.
pub fn wynn_epsilon(seq: &[C64]) -> C64 {
    let n = seq.len();
    if n < 3 {
        return *seq.last().unwrap_or(&C64::new(0.0, 0.0));
    }
    // prev = column k-1, cur = column k; even columns hold estimates
    let mut prev: Vec<C64> = vec![C64::new(0.0, 0.0); n + 1];
    let mut cur: Vec<C64> = seq.to_vec();
    let mut best = seq[n - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff.norm() == 0.0 {
                return if k % 2 == 0 { cur[j + 1] } else { best };
            }
            next.push(prev[j + 1] + C64::new(1.0, 0.0) / diff);
        }
        k += 1;
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}
