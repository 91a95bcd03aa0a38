use pathlind::units::cm_inv_to_fs_inv;
use pathlind_web::demo::{bath_response_curve, spin_boson_sigma_z, DecayExplorer};

#[test]
fn response_curve_shape() {
    let c = bath_response_curve(35.0, 100.0, 300.0, 200.0, 20).unwrap();
    assert_eq!(c.len(), 40);
    // real part decays, imaginary part is negative for a positive spectral density
    assert!(c[0] > c[38].abs());
    assert!(c.iter().skip(1).step_by(2).all(|&im| im < 0.0));
    assert!(bath_response_curve(35.0, 100.0, 300.0, 0.0, 20).is_err());
    assert!(bath_response_curve(-1.0, 100.0, 300.0, 10.0, 20).is_err());
}

#[test]
fn uncoupled_spin_boson_rabi() {
    // λ = 0, ε = 0: ⟨σ_z⟩ = cos(2Δt)
    let z = spin_boson_sigma_z(0.0, 50.0, 0.0, 100.0, 300.0, 2.0, 2, 30).unwrap();
    let delta = cm_inv_to_fs_inv(50.0);
    for (n, v) in z.iter().enumerate() {
        assert!((v - (2.0 * delta * 2.0 * n as f64).cos()).abs() < 1e-9);
    }
}

#[test]
fn decay_drains_into_ground() {
    let ex = DecayExplorer::new(3).unwrap();
    let steps = 200;
    let off = ex.populations(0.0, 1, steps).unwrap();
    let on = ex.populations(2.5, 1, steps).unwrap();
    assert_eq!(off.len(), (steps + 1) * 4);
    let g = |v: &[f64]| v[steps * 4 + 3];
    assert!(g(&off).abs() < 1e-12);
    assert!(g(&on) > 0.01);
    for row in on.chunks(4) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
    assert!(ex.populations(1.0, 4, 5).is_err());
}
