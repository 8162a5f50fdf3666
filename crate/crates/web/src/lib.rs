//! Browser bindings: an animated transport run, a map of mesh metrics and a
//! vertical-level profile. The plain Rust API lives in [`demo`]; the exported
//! JavaScript classes and functions are thin wrappers over it.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Transport {
    inner: demo::TransportDemo,
}

#[wasm_bindgen]
impl Transport {
    /// `shape` is "bell" or "cylinder"; `scheme` is "flux" or "advective".
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, shape: &str, scheme: &str, monotone: bool, steps_per_revolution: usize) -> Result<Transport, JsError> {
        demo::TransportDemo::new(n, shape, scheme, monotone, steps_per_revolution).map(|inner| Transport { inner }).map_err(js)
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        self.inner.advance(steps).map_err(js)
    }

    /// RGBA pixels of the field on a `width` × `height` longitude-latitude raster, north up.
    pub fn image(&mut self, width: usize, height: usize) -> Vec<u8> {
        self.inner.image(width, height)
    }

    /// One-line status: step, elapsed days, Courant number, range and mass change.
    pub fn status(&self) -> String {
        self.inner.status()
    }
}

/// RGBA raster of a mesh quantity ("detj", "surface" or "panel") for a Cn mesh.
#[wasm_bindgen]
pub fn mesh_image(n: usize, orography: &str, quantity: &str, width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    demo::mesh_image(n, orography, quantity, width, height).map_err(js)
}

#[wasm_bindgen]
pub fn mesh_summary(n: usize, layers: usize, orography: &str) -> Result<String, JsError> {
    demo::mesh_summary(n, layers, orography).map_err(js)
}

/// Level heights z_0..z_m (m) for a column standing on `surface`; `gamma` ≤ 0 means uniform.
#[wasm_bindgen]
pub fn level_heights(layers: usize, top: f64, gamma: f64, surface: f64) -> Result<Vec<f64>, JsError> {
    demo::level_heights(layers, top, gamma, surface).map_err(js)
}
