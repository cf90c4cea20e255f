//! WebAssembly bindings for the browser demo in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Default parameters of a link on `[lo, hi]`.
#[wasm_bindgen(js_name = linkDefaults)]
pub fn link_defaults(kind: &str, lo: f64, hi: f64) -> Result<Vec<f64>, JsError> {
    demo::link_defaults(kind, lo, hi).map_err(js)
}

#[wasm_bindgen(js_name = linkParameterNames)]
pub fn link_parameter_names(kind: &str, lo: f64, hi: f64) -> Result<Vec<String>, JsError> {
    demo::link_param_names(kind, lo, hi).map_err(js)
}

/// Outcome grid followed by latent values; cut points for thresholds.
#[wasm_bindgen(js_name = linkCurve)]
pub fn link_curve(kind: &str, lo: f64, hi: f64, eta: &[f64], points: usize) -> Result<Vec<f64>, JsError> {
    demo::link_curve(kind, lo, hi, eta, points).map_err(js)
}

#[wasm_bindgen]
pub struct JointDemo(demo::JointDemo);

#[wasm_bindgen]
impl JointDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(classes: usize, hazard: &str, horizon: f64) -> Result<JointDemo, JsError> {
        demo::JointDemo::new(classes, hazard, horizon).map(JointDemo).map_err(js)
    }

    #[wasm_bindgen(js_name = parameterNames)]
    pub fn parameter_names(&self) -> Vec<String> {
        self.0.parameter_names()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.0.parameters()
    }

    #[wasm_bindgen(js_name = setParameters)]
    pub fn set_parameters(&mut self, theta: &[f64]) -> Result<(), JsError> {
        self.0.set_parameters(theta).map_err(js)
    }

    pub fn classes(&self) -> usize {
        self.0.classes()
    }

    pub fn hazards(&self, x: f64, times: &[f64]) -> Result<Vec<f64>, JsError> {
        self.0.hazards(x, times).map_err(js)
    }

    #[wasm_bindgen(js_name = cumulativeHazards)]
    pub fn cumulative_hazards(&self, x: f64, times: &[f64]) -> Result<Vec<f64>, JsError> {
        self.0.cumulative_hazards(x, times).map_err(js)
    }

    pub fn incidence(&self, x: f64, times: &[f64]) -> Result<Vec<f64>, JsError> {
        self.0.incidence(x, times).map_err(js)
    }

    #[wasm_bindgen(js_name = classMeans)]
    pub fn class_means(&self, times: &[f64]) -> Result<Vec<f64>, JsError> {
        self.0.class_means(times).map_err(js)
    }

    #[wasm_bindgen(js_name = dynamicPrediction)]
    pub fn dynamic_prediction(
        &self,
        times: &[f64],
        values: &[f64],
        x: f64,
        landmark: f64,
        horizons: &[f64],
    ) -> Result<Vec<f64>, JsError> {
        self.0.dynamic_prediction(times, values, x, landmark, horizons).map_err(js)
    }
}
