//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it. The `*_json`
//! functions hold the logic so they can be tested natively.

use hadfrac_core::generators::{FunctionGenerator, TrialSeed};
use hadfrac_core::harness::{run_suite, SuiteConfig, TheoremId, Verdict};
use hadfrac_core::operators::{closed_form_power_image, hadamard};
use hadfrac_core::{FracParams, OperatorOptions, PositiveFunction, PowerImageSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 400;
const MAX_TRIALS: usize = 2000;

fn sample_xs(x_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&n) {
        return Err(format!("point count must be in [2, {MAX_POINTS}]"));
    }
    // skip x = 1 where every image vanishes
    let lmax = x_max.ln();
    Ok((1..=n).map(|i| (lmax * i as f64 / n as f64).exp()).collect())
}

/// Quadrature against the closed form for the power input on `(1, e²]`.
pub fn power_curve_json(alpha: f64, beta: f64, lambda: f64, n: usize) -> Result<Value, String> {
    let p = FracParams::new(alpha, beta).map_err(|e| e.to_string())?;
    let spec = PowerImageSpec::new(lambda).map_err(|e| e.to_string())?;
    let z = PositiveFunction::power(beta, lambda).map_err(|e| e.to_string())?;
    let opts = OperatorOptions::default();
    let xs = sample_xs(2f64.exp(), n)?;
    let mut quad = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let mut rel_err = Vec::with_capacity(n);
    for &x in &xs {
        let v = hadamard(&z, x, p, &opts).map_err(|e| e.to_string())?.value;
        let c = closed_form_power_image(x, p, spec).map_err(|e| e.to_string())?;
        rel_err.push(if v == c { 0.0 } else { (v - c).abs() / c.abs() });
        quad.push(v);
        exact.push(c);
    }
    Ok(json!({ "xs": xs, "quadrature": quad, "exact": exact, "rel_err": rel_err }))
}

/// A seeded random spline and its images for several orders.
pub fn random_images_json(seed: u64, alphas: &[f64], beta: f64, n: usize) -> Result<Value, String> {
    let generator = FunctionGenerator::default();
    let f = generator
        .gen_random(TrialSeed::new(seed, 0))
        .map_err(|e| e.to_string())?;
    let xs = sample_xs(f.upper(), n)?;
    let opts = OperatorOptions::default();
    let values: Vec<f64> = xs.iter().map(|&x| f.value_at_log(x.ln())).collect();
    let mut images = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let p = FracParams::new(alpha, beta).map_err(|e| e.to_string())?;
        let ys = xs
            .iter()
            .map(|&x| hadamard(&f, x, p, &opts).map(|v| v.value))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| e.to_string())?;
        images.push(json!({ "alpha": alpha, "values": ys }));
    }
    Ok(json!({ "xs": xs, "f": values, "images": images, "function": f }))
}

/// Margins of one inequality over seeded trials at a single `(α, β)`.
pub fn theorem_margins_json(theorem: &str, trials: usize, seed: u64, alpha: f64, beta: f64) -> Result<Value, String> {
    let id: TheoremId = theorem.parse()?;
    if !(1..=MAX_TRIALS).contains(&trials) {
        return Err(format!("trials must be in [1, {MAX_TRIALS}]"));
    }
    let config = SuiteConfig {
        trials,
        seed,
        alphas: vec![alpha],
        betas: vec![beta],
        theorems: vec![id],
        threads: Some(1),
        ..SuiteConfig::default()
    };
    let result = run_suite(&config).map_err(|e| e.to_string())?;
    let count = |v: Verdict| result.reports.iter().filter(|r| r.verdict == v).count();
    let margins: Vec<Value> = result.reports.iter().map(|r| json!(r.margin)).collect();
    Ok(json!({
        "theorem": id.as_str(),
        "asserted": id.asserted(),
        "margins": margins,
        "holds": count(Verdict::Holds),
        "violated": count(Verdict::Violated),
        "inconclusive": count(Verdict::Inconclusive),
        "failed": count(Verdict::Failed),
    }))
}

fn export(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn power_curve(alpha: f64, beta: f64, lambda: f64, n: usize) -> Result<String, JsValue> {
    export(power_curve_json(alpha, beta, lambda, n))
}

#[wasm_bindgen]
pub fn random_images(seed: u64, alphas: Vec<f64>, beta: f64, n: usize) -> Result<String, JsValue> {
    export(random_images_json(seed, &alphas, beta, n))
}

#[wasm_bindgen]
pub fn theorem_margins(theorem: &str, trials: usize, seed: u64, alpha: f64, beta: f64) -> Result<String, JsValue> {
    export(theorem_margins_json(theorem, trials, seed, alpha, beta))
}

#[wasm_bindgen]
pub fn theorem_ids() -> String {
    let ids: Vec<&str> = TheoremId::ALL.iter().map(|t| t.as_str()).collect();
    json!(ids).to_string()
}
