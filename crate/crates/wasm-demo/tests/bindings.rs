use arma_wls_demo::{compare_json, design_json, parse_spec, response_json, CURVE_POINTS};
use serde_json::Value;

const SMALL: &str = r#"{"order_p": 4, "order_q": 4, "grid_l": 100, "gamma": 0.5, "k_max": 60}"#;

#[test]
fn partial_spec_overlays_defaults() {
    let spec = parse_spec(r#"{"order_p": 3}"#).unwrap();
    assert_eq!(spec.order_p, 3);
    assert_eq!(spec.order_q, 11);
    assert!(parse_spec(r#"{"order": 3}"#).is_err());
    assert!(parse_spec(r#"{"lambda_p": 0.9}"#).is_err());
    assert!(parse_spec("[1]").is_err());
}

#[test]
fn design_returns_curve_and_trace() {
    let out: Value = serde_json::from_str(&design_json(SMALL).unwrap()).unwrap();
    assert_eq!(out["coefficients"]["beta"].as_array().unwrap().len(), 5);
    assert_eq!(out["response"]["mag_db"].as_array().unwrap().len(), CURVE_POINTS);
    let iters = out["iterations"].as_u64().unwrap() as usize;
    assert_eq!(out["trace"].as_array().unwrap().len(), iters);
    assert!(out["stability_margin"].as_f64().unwrap() >= 1e-5 * (1.0 - 1e-6));
}

#[test]
fn response_of_designed_coefficients_matches() {
    let out: Value = serde_json::from_str(&design_json(SMALL).unwrap()).unwrap();
    let coeffs = out["coefficients"].to_string();
    let curve: Value = serde_json::from_str(&response_json(&coeffs, CURVE_POINTS).unwrap()).unwrap();
    assert_eq!(curve["h"], out["response"]["h"]);
}

#[test]
fn response_rejects_degenerate_input() {
    assert!(response_json(r#"{"beta": [], "alpha": [], "epsilon": 1e-5}"#, 10).is_err());
    // 1 + 1·T_1(1-λ) vanishes at λ = 2
    assert!(response_json(r#"{"beta": [1], "alpha": [1], "epsilon": 1e-5}"#, 11).is_err());
}

#[test]
fn compare_has_both_designs() {
    let out: Value = serde_json::from_str(&compare_json(SMALL).unwrap()).unwrap();
    let j = |k: &str| out[k]["metrics"]["objective"].as_f64().unwrap();
    assert!(j("proposed").is_finite() && j("modified_error").is_finite());
    assert_eq!(out["modified_error"]["iterations"], 1);
}
