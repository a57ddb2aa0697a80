// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser bindings for the demo page in `www/`.
//!
//! The `demo` module holds plain Rust functions so they can be tested
//! natively; the exported wrappers only translate errors.

use wasm_bindgen::prelude::*;

pub mod demo;

pub use demo::{DemoRequest, DemoRun};

/// Simulated trial with one method's estimate.
#[wasm_bindgen]
pub struct Run(DemoRun);

#[wasm_bindgen]
impl Run {
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.0.truth.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn target(&self) -> Vec<f64> {
        self.0.target.clone()
    }

    /// First source, averaged onto the target grid.
    #[wasm_bindgen(getter)]
    pub fn source(&self) -> Vec<f64> {
        self.0.source.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Vec<f64> {
        self.0.estimate.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn loss(&self) -> f64 {
        self.0.loss
    }

    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.0.lambda
    }

    #[wasm_bindgen(getter)]
    pub fn selected(&self) -> String {
        self.0.selected.clone()
    }
}

/// Generates one trial and fits `method` (for example `l0-T-Ahat`).
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate(
    scenario: u8,
    gamma: f64,
    sigma: f64,
    a: u32,
    alpha: f64,
    h: f64,
    method: &str,
    seed: u32,
) -> Result<Run, JsError> {
    let request = DemoRequest { scenario, gamma, sigma, a: a as usize, alpha, h, method: method.to_string(), seed: seed.into() };
    demo::simulate(&request).map(Run).map_err(|e| JsError::new(&e))
}

/// Fits `values` with penalty `l1` or `l0` at level `lambda`.
#[wasm_bindgen]
pub fn denoise(values: &[f64], penalty: &str, lambda: f64) -> Result<Vec<f64>, JsError> {
    demo::denoise(values, penalty, lambda).map_err(|e| JsError::new(&e))
}

/// `K` times the harmonic mean of the first `K` lengths, for every `K`.
#[wasm_bindgen]
pub fn frequency(lens: &[u32]) -> Result<Vec<f64>, JsError> {
    demo::frequency(lens).map_err(|e| JsError::new(&e))
}
