//! Harmonic baths: spectral densities, the bath response function and the
//! η-coefficients that discretize it for the influence functional.
//!
//! The response function is
//!
//! ```text
//! C(t) = (1/π) ∫₀^∞ J(ω) [coth(βω/2) cos ωt − i sin ωt] dω
//! ```
//!
//! and the η-coefficients are its double integrals over pairs of time steps,
//! assuming the path is constant within each step:
//!
//! ```text
//! η_kk  = ∫_{t_k}^{t_{k+1}} dt' ∫_{t_k}^{t'} dt'' C(t' − t'')
//! η_kk' = ∫_{t_k}^{t_{k+1}} dt' ∫_{t_k'}^{t_k'+1} dt'' C(t' − t'')    (k > k')
//! ```
//!
//! Both time integrals are done in closed form, leaving one frequency
//! integral per coefficient.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{self, Estimate, QuadSettings};
use crate::units::cm_inv_to_fs_inv;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// J(ω) = (π/2) ξ ω e^{−ω/ω_c}
    OhmicExponential { xi: f64, omega_c: f64 },
    /// J(ω) = 2λγω / (ω² + γ²), with reorganization energy λ.
    DrudeLorentz { lambda: f64, gamma: f64 },
    /// Linear interpolation on an ascending grid, zero outside it.
    Tabulated { omega: Vec<f64>, j: Vec<f64> },
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::OhmicExponential { xi, omega_c } => {
                if !(xi.is_finite() && *xi >= 0.0) || !(omega_c.is_finite() && *omega_c > 0.0) {
                    return Err(invalid("ohmic bath needs ξ ≥ 0 and ω_c > 0"));
                }
            }
            SpectralDensity::DrudeLorentz { lambda, gamma } => {
                if !(lambda.is_finite() && *lambda >= 0.0) || !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(invalid("Drude-Lorentz bath needs λ ≥ 0 and γ > 0"));
                }
            }
            SpectralDensity::Tabulated { omega, j } => {
                if omega.len() != j.len() || omega.len() < 2 {
                    return Err(invalid("tabulated spectral density needs ≥ 2 points of (ω, J)"));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("tabulated frequency grid must be strictly ascending"));
                }
                if omega[0] < 0.0 {
                    return Err(invalid("tabulated frequency grid must start at ω ≥ 0"));
                }
                if j.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("tabulated J(ω) must be finite and non-negative"));
                }
                if omega[0] == 0.0 && j[0] != 0.0 {
                    return Err(invalid("tabulated J(0) must be 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            SpectralDensity::OhmicExponential { xi, omega_c } => 0.5 * PI * xi * w * (-w / omega_c).exp(),
            SpectralDensity::DrudeLorentz { lambda, gamma } => 2.0 * lambda * gamma * w / (w * w + gamma * gamma),
            SpectralDensity::Tabulated { omega, j } => {
                if w < omega[0] || w > omega[omega.len() - 1] {
                    return 0.0;
                }
                let i = omega.partition_point(|&x| x <= w).clamp(1, omega.len() - 1);
                let (w0, w1) = (omega[i - 1], omega[i]);
                let s = (w - w0) / (w1 - w0);
                j[i - 1] + s * (j[i] - j[i - 1])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SpectralDensity::OhmicExponential { xi, .. } => *xi == 0.0,
            SpectralDensity::DrudeLorentz { lambda, .. } => *lambda == 0.0,
            SpectralDensity::Tabulated { j, .. } => j.iter().all(|&v| v == 0.0),
        }
    }

    /// Characteristic frequency beyond which J decays monotonically.
    fn scale(&self) -> f64 {
        match self {
            SpectralDensity::OhmicExponential { omega_c, .. } => *omega_c,
            SpectralDensity::DrudeLorentz { gamma, .. } => *gamma,
            SpectralDensity::Tabulated { omega, .. } => omega[omega.len() - 1],
        }
    }

    /// Reads a two-column `ω J` table in cm⁻¹; `#` starts a comment.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table_str(&text)
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut j = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(invalid(format!(
                    "spectral density table line {}: expected 2 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| invalid(format!("spectral density table line {}: {e}", lineno + 1)))
            };
            omega.push(cm_inv_to_fs_inv(parse(cols[0])?));
            j.push(cm_inv_to_fs_inv(parse(cols[1])?));
        }
        let sd = SpectralDensity::Tabulated { omega, j };
        sd.validate()?;
        Ok(sd)
    }
}

/// A harmonic bath coupled to the system through an operator that is
/// diagonal in the system basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub spectral_density: SpectralDensity,
    /// Inverse temperature in fs; `f64::INFINITY` means zero temperature.
    pub beta: f64,
    /// Eigenvalues of the coupling operator, one per basis state.
    pub coupling_diag: Vec<f64>,
}

impl BathSpec {
    pub fn new(spectral_density: SpectralDensity, beta: f64) -> Self {
        Self { spectral_density, beta, coupling_diag: Vec::new() }
    }

    pub fn with_coupling(mut self, coupling_diag: Vec<f64>) -> Self {
        self.coupling_diag = coupling_diag;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spectral_density.validate()?;
        if !(self.beta > 0.0) || self.beta.is_nan() {
            return Err(invalid(format!("inverse temperature must be positive, got {}", self.beta)));
        }
        if self.coupling_diag.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coupling operator eigenvalues must be finite"));
        }
        Ok(())
    }

    fn coth(&self, w: f64) -> f64 {
        if self.beta.is_infinite() {
            1.0
        } else {
            1.0 / (0.5 * self.beta * w).tanh()
        }
    }
}

/// Frequency integral of the form
/// `∫₀^∞ head(ω) dω`, where beyond `a` the integrand is rewritten as
/// `smooth(ω) + Σ_j w_j A(ω) [coth cos ωs_j − i sin ωs_j]` with every `s_j > 0`.
struct FrequencyIntegral<'a> {
    bath: &'a BathSpec,
    head: &'a dyn Fn(f64) -> C64,
    amplitude: &'a dyn Fn(f64) -> f64,
    smooth: &'a dyn Fn(f64) -> C64,
    oscillating: &'a [(f64, f64)],
    max_freq: f64,
}

impl FrequencyIntegral<'_> {
    fn evaluate(&self, settings: &QuadSettings) -> Result<Estimate> {
        let sd = &self.bath.spectral_density;
        let mut total = C64::new(0.0, 0.0);
        let mut error = 0.0;

        let (head_end, breakpoints) = match sd {
            SpectralDensity::Tabulated { omega, .. } => (omega[omega.len() - 1], omega.clone()),
            _ => {
                let a = 20.0 * sd.scale();
                (a, vec![0.0, a])
            }
        };
        let panel = if self.max_freq > 0.0 { PI / self.max_freq } else { f64::INFINITY };
        let mut lo = 0.0;
        for &bp in breakpoints.iter().filter(|&&b| b > 0.0) {
            let pieces = (((bp - lo) / panel).ceil() as usize).max(1);
            let width = (bp - lo) / pieces as f64;
            for p in 0..pieces {
                let a = lo + p as f64 * width;
                let b = if p + 1 == pieces { bp } else { a + width };
                let est = quad::integrate(|w| (self.head)(w), a, b, settings)?;
                total += est.value;
                error += est.error;
            }
            lo = bp;
        }

        if matches!(sd, SpectralDensity::Tabulated { .. }) {
            return Ok(Estimate { value: total, error });
        }

        let floor = settings.target(total).max(settings.abs_tol);
        let smooth = quad::integrate_to_infinity(|w| (self.smooth)(w), head_end, sd.scale(), settings)?;
        total += smooth.value;
        error += smooth.error;
        for &(s, weight) in self.oscillating {
            // coth cos x − i sin x = ((coth − 1)/2) e^{ix} + ((coth + 1)/2) e^{−ix}
            let minus = |w: f64| C64::new(weight * (self.amplitude)(w) * 0.5 * (self.bath.coth(w) - 1.0), 0.0);
            let plus = |w: f64| C64::new(weight * (self.amplitude)(w) * 0.5 * (self.bath.coth(w) + 1.0), 0.0);
            if !self.bath.beta.is_infinite() {
                let e = quad::integrate_oscillatory_tail(minus, s, head_end, settings, floor)?;
                total += e.value;
                error += e.error;
            }
            let e = quad::integrate_oscillatory_tail(plus, -s, head_end, settings, floor)?;
            total += e.value;
            error += e.error;
        }
        Ok(Estimate { value: total, error })
    }
}

/// Bath response function C(t). C(−t) = C(t)* holds by construction.
///
/// For spectral densities whose J(ω) tail decays only as 1/ω (Drude-Lorentz)
/// C(0) diverges logarithmically and this returns a quadrature error.
pub fn bath_response(spec: &BathSpec, t: f64, settings: &QuadSettings) -> Result<C64> {
    spec.validate()?;
    if spec.spectral_density.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let tau = t.abs();
    let sd = &spec.spectral_density;
    let head = |w: f64| {
        let jw = sd.eval(w) / PI;
        C64::new(jw * spec.coth(w) * (w * tau).cos(), -jw * (w * tau).sin())
    };
    let amplitude = |w: f64| sd.eval(w) / PI;
    let value = if tau == 0.0 {
        let smooth = |w: f64| C64::new(sd.eval(w) / PI * spec.coth(w), 0.0);
        FrequencyIntegral { bath: spec, head: &head, amplitude: &amplitude, smooth: &smooth, oscillating: &[], max_freq: 0.0 }
            .evaluate(settings)?
            .value
    } else {
        let smooth = |_: f64| C64::new(0.0, 0.0);
        FrequencyIntegral {
            bath: spec,
            head: &head,
            amplitude: &amplitude,
            smooth: &smooth,
            oscillating: &[(tau, 1.0)],
            max_freq: tau,
        }
        .evaluate(settings)?
        .value
    };
    if !value.is_finite() {
        return Err(Error::Quadrature { estimate: value, error: f64::INFINITY });
    }
    Ok(if t < 0.0 { value.conj() } else { value })
}

/// η-coefficients for a translation-invariant step-constant discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaCoefficients {
    pub dt: f64,
    pub n_steps: usize,
    /// η_kk
    pub eta_diag: C64,
    /// η_{k,k−Δ} for Δ = 1..=n_steps
    pub eta_offdiag: Vec<C64>,
}

impl EtaCoefficients {
    pub fn zeros(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, eta_diag: C64::new(0.0, 0.0), eta_offdiag: vec![C64::new(0.0, 0.0); n_steps] }
    }

    /// η for a given lag; lag 0 is the diagonal coefficient.
    pub fn lag(&self, lag: usize) -> Result<C64> {
        if lag == 0 {
            Ok(self.eta_diag)
        } else {
            self.eta_offdiag.get(lag - 1).copied().ok_or_else(|| {
                invalid(format!("lag {lag} exceeds the η table of {} steps", self.n_steps))
            })
        }
    }
}

// 1 − cos x and x − sin x without cancellation at small x
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

pub fn eta_coefficients(spec: &BathSpec, dt: f64, n_steps: usize, settings: &QuadSettings) -> Result<EtaCoefficients> {
    spec.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(invalid("η table needs at least one step"));
    }
    if spec.spectral_density.is_zero() {
        return Ok(EtaCoefficients::zeros(dt, n_steps));
    }
    let sd = &spec.spectral_density;
    // A(ω) = J(ω) / (π ω²)
    let amplitude = |w: f64| sd.eval(w) / (PI * w * w);

    let head_diag = |w: f64| {
        let a = amplitude(w);
        C64::new(a * spec.coth(w) * one_minus_cos(w * dt), -a * x_minus_sin(w * dt))
    };
    let smooth_diag = |w: f64| {
        let a = amplitude(w);
        C64::new(a * spec.coth(w), -a * w * dt)
    };
    let eta_diag = FrequencyIntegral {
        bath: spec,
        head: &head_diag,
        amplitude: &amplitude,
        smooth: &smooth_diag,
        oscillating: &[(dt, -1.0)],
        max_freq: dt,
    }
    .evaluate(settings)?
    .value;

    let mut eta_offdiag = Vec::with_capacity(n_steps);
    for lag in 1..=n_steps {
        let tau = lag as f64 * dt;
        let head = |w: f64| {
            let a = 2.0 * amplitude(w) * one_minus_cos(w * dt);
            C64::new(a * spec.coth(w) * (w * tau).cos(), -a * (w * tau).sin())
        };
        let (smooth_weight, terms): (f64, Vec<(f64, f64)>) = if lag == 1 {
            (-1.0, vec![(tau, 2.0), (tau + dt, -1.0)])
        } else {
            (0.0, vec![(tau, 2.0), (tau + dt, -1.0), (tau - dt, -1.0)])
        };
        let smooth = |w: f64| C64::new(smooth_weight * amplitude(w) * spec.coth(w), 0.0);
        let value = FrequencyIntegral {
            bath: spec,
            head: &head,
            amplitude: &amplitude,
            smooth: &smooth,
            oscillating: &terms,
            max_freq: tau + dt,
        }
        .evaluate(settings)?
        .value;
        eta_offdiag.push(value);
    }

    if eta_diag.re < 0.0 {
        return Err(Error::Numerical(format!("negative damping in η_kk = {eta_diag}")));
    }
    Ok(EtaCoefficients { dt, n_steps, eta_diag, eta_offdiag })
}
