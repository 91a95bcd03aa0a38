//! Browser bindings: bath response, spin-boson relaxation and a decay-rate
//! explorer that re-solves the kernel equation for each jump strength.

pub mod demo;

use wasm_bindgen::prelude::*;

#[wasm_bindgen(js_name = bathResponse)]
pub fn bath_response(lambda_cm: f64, gamma_cm: f64, temperature_k: f64, t_max_fs: f64, n: usize) -> Result<Vec<f64>, JsError> {
    demo::bath_response_curve(lambda_cm, gamma_cm, temperature_k, t_max_fs, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = spinBosonSigmaZ)]
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
) -> Result<Vec<f64>, JsError> {
    demo::spin_boson_sigma_z(eps_cm, delta_cm, lambda_cm, gamma_cm, temperature_k, dt_fs, mem_len, n_steps)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct DecayExplorer(demo::DecayExplorer);

#[wasm_bindgen]
impl DecayExplorer {
    #[wasm_bindgen(constructor)]
    pub fn new(mem_len: usize) -> Result<DecayExplorer, JsError> {
        demo::DecayExplorer::new(mem_len).map(DecayExplorer).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn dt(&self) -> f64 {
        self.0.dt()
    }

    pub fn populations(&self, timescale_ps: f64, initial_site: usize, n_steps: usize) -> Result<Vec<f64>, JsError> {
        self.0.populations(timescale_ps, initial_site, n_steps).map_err(|e| JsError::new(&e))
    }
}
