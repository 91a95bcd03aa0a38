//! Unit conversions. Internally ħ = 1, times are in fs and energies in fs⁻¹.

use std::f64::consts::PI;

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// Wavenumber (cm⁻¹) to angular frequency (fs⁻¹): ω = 2π c ν.
pub fn cm_inv_to_fs_inv(wavenumber: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS * wavenumber
}

pub fn fs_inv_to_cm_inv(omega: f64) -> f64 {
    omega / (2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS)
}

pub fn ps_to_fs(t: f64) -> f64 {
    t * 1000.0
}

/// Jump amplitude γ (fs^-1/2) for a decay with timescale 1/γ² given in ps.
pub fn decay_amplitude(timescale_ps: f64) -> f64 {
    (1.0 / ps_to_fs(timescale_ps)).sqrt()
}

/// Boltzmann constant in cm⁻¹/K.
pub const BOLTZMANN_CM_PER_K: f64 = 0.695_034_800_2;

/// Inverse temperature β = 1/(k_B T) in fs.
pub fn beta_from_temperature(kelvin: f64) -> f64 {
    1.0 / cm_inv_to_fs_inv(BOLTZMANN_CM_PER_K * kelvin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_round_trip() {
        let w = cm_inv_to_fs_inv(208.5);
        assert!((fs_inv_to_cm_inv(w) - 208.5).abs() < 1e-12);
        // 1 cm^-1 corresponds to an angular frequency of about 1.8836e-4 fs^-1
        assert!((cm_inv_to_fs_inv(1.0) - 1.883_651_567e-4).abs() < 1e-12);
    }

    #[test]
    fn decay_amplitude_squares_to_rate() {
        let g = decay_amplitude(2.5);
        assert!((g * g - 1.0 / 2500.0).abs() < 1e-18);
    }

    #[test]
    fn room_temperature_beta() {
        // k_B·300 K ≈ 208.51 cm⁻¹, so β ≈ 25.46 fs
        let beta = beta_from_temperature(300.0);
        assert!((beta - 1.0 / (208.510_44 * 1.883_651_567e-4)).abs() < 1e-4);
    }
}
