//! Interactive browser demo for summary-augmented chunking.
//!
//! Three operations are exposed to JavaScript, all JSON-in/JSON-out:
//!
//! - [`demo_init`]: generate a synthetic boilerplate corpus and build two
//!   indexes over it (plain chunks vs summary-augmented chunks);
//! - [`demo_query`]: run one query against both indexes side by side;
//! - [`demo_curves`]: evaluate the whole benchmark and return DRM /
//!   precision / recall curves over top-k for both indexes.
//!
//! The engine is plain Rust (no browser types), so the same functions are
//! unit-tested natively; the `wasm_bindgen` wrappers only exist on wasm32.

pub mod engine;

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen]
    pub fn demo_init(spec_json: &str) -> Result<String, JsValue> {
        crate::engine::init(spec_json).map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen]
    pub fn demo_query(request_json: &str) -> Result<String, JsValue> {
        crate::engine::query(request_json).map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen]
    pub fn demo_curves() -> Result<String, JsValue> {
        crate::engine::curves().map_err(|e| JsValue::from_str(&e))
    }
}
