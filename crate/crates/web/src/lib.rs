//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a JSON simulation config (the same format the CLI
//! reads; omitted fields take their defaults) and returns a JSON string.

use mfd_glht::dof::true_dof;
use mfd_glht::glht::hn_matrix;
use mfd_glht::simulation::{gen_sample, size_power_study_with, DataModel, SimConfig};
use mfd_glht::stats::run_glht;
use mfd_glht::GlhtError;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, GlhtError>;

fn parse(config: &str) -> Res<SimConfig> {
    let cfg: SimConfig = serde_json::from_str(config).map_err(|e| GlhtError::InvalidArgument(format!("bad config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn to_js(r: Res<Value>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Draws one dataset, tests the configured hypothesis on it and returns the
/// report with per-group sample means of component `component` (0-based).
pub fn sample_report(config: &str, seed: u64, component: usize) -> Res<Value> {
    let cfg = parse(config)?;
    if component >= cfg.p {
        return Err(GlhtError::InvalidArgument(format!("component must be below p = {}", cfg.p)));
    }
    let ds = gen_sample(&cfg, seed)?;
    let report = run_glht(&ds, &cfg.contrast_spec()?, cfg.alpha)?;
    let means: Vec<Vec<f64>> = ds
        .groups()
        .iter()
        .map(|g| (0..ds.m()).map(|t| (0..g.n()).map(|j| g.value(j, component, t)).sum::<f64>() / g.n() as f64).collect())
        .collect();
    Ok(json!({ "grid": ds.grid().points(), "means": means, "report": report }))
}

/// Rejection rates in percent for each shift `delta`.
pub fn power_rates(config: &str, deltas: &[f64]) -> Res<Value> {
    let base = parse(config)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let r = size_power_study_with(&SimConfig { delta, ..base.clone() }, Some(1))?;
        rows.push(json!({ "delta": delta, "rates": r.rates, "reps_ok": r.reps_ok }));
    }
    Ok(json!(rows))
}

/// Population degrees of freedom (Gaussian innovations) next to the mean
/// U-statistic estimates over `config.reps` samples, for each `rho`.
pub fn dof_by_rho(config: &str, rhos: &[f64]) -> Res<Value> {
    let base = parse(config)?;
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let cfg = SimConfig { rho, model: 1, ..base.clone() };
        let model = DataModel::from_config(&cfg)?;
        let spec = cfg.contrast_spec()?;
        let hn = hn_matrix(spec.c(), &model.sizes)?;
        let truth = true_dof(&model.covariance(), &model.grid.weights(), &model.sizes, &hn, &vec![0.0; model.sizes.len()])?;
        let est = size_power_study_with(&cfg, Some(1))?;
        rows.push(json!({
            "rho": rho,
            "true_d_b": truth.d_b,
            "true_d_e": truth.d_e,
            "mean_d_b": est.mean_d_b,
            "mean_d_e": est.mean_d_e,
        }));
    }
    Ok(json!(rows))
}

#[wasm_bindgen]
pub fn run_sample(config: &str, seed: u64, component: usize) -> Result<String, JsValue> {
    to_js(sample_report(config, seed, component))
}

#[wasm_bindgen]
pub fn power_curve(config: &str, deltas: Vec<f64>) -> Result<String, JsValue> {
    to_js(power_rates(config, &deltas))
}

#[wasm_bindgen]
pub fn dof_curve(config: &str, rhos: Vec<f64>) -> Result<String, JsValue> {
    to_js(dof_by_rho(config, &rhos))
}
