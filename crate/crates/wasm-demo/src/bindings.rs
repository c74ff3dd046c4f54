use wasm_bindgen::prelude::*;

#[wasm_bindgen(js_name = schemaJson)]
pub fn schema_json() -> String {
    crate::schema_json()
}

#[wasm_bindgen(js_name = instancesJson)]
pub fn instances_json() -> String {
    crate::instances_json()
}

#[wasm_bindgen]
pub fn predict(instance: &str) -> Result<String, JsValue> {
    crate::predict(instance).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterfactual(instance: &str, threshold: f64, direction: &str, mutable: &str, k: usize) -> Result<String, JsValue> {
    crate::counterfactual(instance, threshold, direction, mutable, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = iceSvg)]
pub fn ice_svg(instance: &str, feature: &str) -> Result<String, JsValue> {
    crate::ice_svg(instance, feature).map_err(|e| JsValue::from_str(&e))
}
