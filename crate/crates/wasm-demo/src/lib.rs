//! Browser bindings for the filter designer.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`. The `*_json` functions hold the logic and are what
//! the native tests call; the `#[wasm_bindgen]` wrappers only convert errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use arma_wls::grid::{magnitude_db, DesignMetrics};
use arma_wls::{design_modified_error, design_wls, verify_stability, ArmaChebFilter, DesignResult, DesignSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wasm_bindgen::prelude::*;

/// Points of every plotted response curve.
pub const CURVE_POINTS: usize = 401;

/// Overlays the keys given in `json` on the benchmark spec.
pub fn parse_spec(json: &str) -> Result<DesignSpec, String> {
    let overrides: Value = serde_json::from_str(json).map_err(|e| format!("spec is not valid JSON: {e}"))?;
    let Value::Object(overrides) = overrides else {
        return Err("spec must be a JSON object".into());
    };
    let mut merged = serde_json::to_value(DesignSpec::default()).map_err(|e| e.to_string())?;
    for (k, v) in overrides {
        if merged.get(&k).is_none() {
            return Err(format!("unknown spec key {k:?}"));
        }
        merged[k] = v;
    }
    let spec: DesignSpec = serde_json::from_value(merged).map_err(|e| format!("bad spec value: {e}"))?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
    pub mag_db: Vec<f64>,
}

fn curve(filter: &ArmaChebFilter, points: usize) -> Result<Curve, String> {
    let points = points.max(2);
    let lambda: Vec<f64> = (0..points).map(|i| 2.0 * i as f64 / (points - 1) as f64).collect();
    let h = lambda
        .iter()
        .map(|&l| filter.freq_response(l).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mag_db = h.iter().map(|&v| magnitude_db(v)).collect();
    Ok(Curve { lambda, h, mag_db })
}

#[derive(Debug, Serialize)]
struct TracePoint {
    k: usize,
    objective: f64,
    step: f64,
}

#[derive(Debug, Serialize)]
struct DesignOutput {
    coefficients: Coefficients,
    metrics: MetricsOut,
    converged: bool,
    iterations: usize,
    stability_margin: f64,
    trace: Vec<TracePoint>,
    response: Curve,
}

#[derive(Debug, Serialize)]
struct MetricsOut {
    delta_p_db: f64,
    delta_s_db: f64,
    sse_db: f64,
    objective: f64,
}

impl From<&DesignMetrics> for MetricsOut {
    fn from(m: &DesignMetrics) -> Self {
        Self {
            delta_p_db: m.delta_p_db,
            delta_s_db: m.delta_s_db,
            sse_db: m.sse_db,
            objective: m.true_objective,
        }
    }
}

fn design_output(spec: &DesignSpec, r: &DesignResult) -> Result<DesignOutput, String> {
    Ok(DesignOutput {
        coefficients: Coefficients {
            beta: r.filter.beta.clone(),
            alpha: r.filter.alpha.clone(),
            epsilon: r.filter.epsilon,
        },
        metrics: (&r.metrics).into(),
        converged: r.converged,
        iterations: r.trace.iterations(),
        stability_margin: verify_stability(&r.filter, spec.grid_l, 10).margin,
        trace: r
            .trace
            .records
            .iter()
            .map(|rec| TracePoint {
                k: rec.k,
                objective: rec.objective,
                step: rec.step_inf_norm,
            })
            .collect(),
        response: curve(&r.filter, CURVE_POINTS)?,
    })
}

pub fn design_json(spec_json: &str) -> Result<String, String> {
    let spec = parse_spec(spec_json)?;
    let result = design_wls(&spec, None).map_err(|e| e.to_string())?;
    serde_json::to_string(&design_output(&spec, &result)?).map_err(|e| e.to_string())
}

pub fn response_json(coeffs_json: &str, points: usize) -> Result<String, String> {
    let c: Coefficients = serde_json::from_str(coeffs_json).map_err(|e| format!("bad coefficients: {e}"))?;
    if c.beta.is_empty() {
        return Err("beta needs at least one entry".into());
    }
    if !(c.epsilon > 0.0) {
        return Err("epsilon must be positive".into());
    }
    let filter = ArmaChebFilter::new(c.beta, c.alpha, c.epsilon);
    serde_json::to_string(&curve(&filter, points)?).map_err(|e| e.to_string())
}

pub fn compare_json(spec_json: &str) -> Result<String, String> {
    let spec = parse_spec(spec_json)?;
    let proposed = design_wls(&spec, None).map_err(|e| e.to_string())?;
    let baseline = design_modified_error(&spec).map_err(|e| e.to_string())?;
    let out = serde_json::json!({
        "proposed": design_output(&spec, &proposed)?,
        "modified_error": design_output(&spec, &baseline)?,
    });
    Ok(out.to_string())
}

/// Runs the reweighted design for a (partial) spec.
#[wasm_bindgen]
pub fn design_filter(spec_json: &str) -> Result<String, JsValue> {
    design_json(spec_json).map_err(|e| JsValue::from_str(&e))
}

/// Evaluates `{beta, alpha, epsilon}` on `points` uniform frequencies.
#[wasm_bindgen]
pub fn frequency_response(coeffs_json: &str, points: usize) -> Result<String, JsValue> {
    response_json(coeffs_json, points).map_err(|e| JsValue::from_str(&e))
}

/// Reweighted design next to the one-shot modified-error design.
#[wasm_bindgen]
pub fn compare(spec_json: &str) -> Result<String, JsValue> {
    compare_json(spec_json).map_err(|e| JsValue::from_str(&e))
}
