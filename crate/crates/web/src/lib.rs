//! Browser demo. Each export builds a small synthetic corpus, trains in
//! process and returns a JSON string for the page to draw.
//!
//! The `*_json` functions are plain Rust so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use mmhash::dataset::{generate_synthetic, inject_noise, Dataset, Split, SynthConfig};
use mmhash::model::{encode_dataset, ModelParams};
use mmhash::retrieval::{boxplot_stats, evaluate_model, EvalOptions, PrMode};
use mmhash::trainer::{fit, warmup, TrainConfig, Variant};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const M: usize = 8;

fn corpus(n: usize, seed: u64, split: Split) -> Result<Dataset, String> {
    let cfg = SynthConfig {
        n,
        m: M,
        d_x: 64,
        d_y: 32,
        labels_min: 1,
        labels_max: 2,
        cluster_spread: 0.2,
    };
    generate_synthetic(&cfg, seed, split).map_err(|e| e.to_string())
}

/// Small widths and a large step so a few epochs suffice in the browser.
fn demo_config(epochs: usize, warmup_epochs: usize, tau: f64, seed: u64) -> Result<TrainConfig, String> {
    let mut cfg = TrainConfig {
        code_len: 32,
        hidden: 64,
        fusion: 32,
        lr: 2.0,
        ..TrainConfig::new(epochs, warmup_epochs, tau, seed)
    };
    cfg.loss.eta = 0.001;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Warm-up only, then in-category versus out-of-category score statistics
/// for the clean and corrupted rows.
pub fn boxplot_json(n: usize, tau: f64, warmup_epochs: usize, seed: u64) -> Result<String, String> {
    let (noisy, mask) = inject_noise(&corpus(n, seed, Split::Train)?, tau, seed).map_err(|e| e.to_string())?;
    let cfg = demo_config(warmup_epochs + 1, warmup_epochs, tau, seed)?;
    let p0 = ModelParams::init(&cfg.model_config(&noisy), seed).map_err(|e| e.to_string())?;
    let p = warmup(p0, &noisy, &cfg).map_err(|e| e.to_string())?;
    let codes = encode_dataset(&p, &noisy).map_err(|e| e.to_string())?;
    let table =
        boxplot_stats(codes.view(), p.centers.view(), &noisy.labels(), Some(&mask)).map_err(|e| e.to_string())?;
    to_json(&table)
}

#[derive(Serialize)]
struct RetrievalDemo {
    variant: Variant,
    map: f64,
    pn: Vec<(usize, f64)>,
    pr: Vec<mmhash::retrieval::PrPoint>,
    filter_precision: Option<f64>,
    correction_accuracy: Option<f64>,
}

/// Trains one variant on noisy labels and returns MAP, P@N and the
/// per-radius PR curve of the test queries against the retrieval set.
pub fn retrieval_json(variant: &str, tau: f64, epochs: usize, seed: u64) -> Result<String, String> {
    let variant: Variant = variant.parse().map_err(|e: mmhash::Error| e.to_string())?;
    let (noisy, mask) = inject_noise(&corpus(1000, seed, Split::Train)?, tau, seed).map_err(|e| e.to_string())?;
    let retrieval = corpus(1000, seed, Split::Retrieval)?;
    let test = corpus(100, seed, Split::Test)?;
    let cfg = TrainConfig {
        variant,
        ..demo_config(epochs, (epochs / 8).max(1).min(epochs - 1), tau, seed)?
    };
    let (params, report) = fit(&noisy, &cfg, Some(&mask)).map_err(|e| e.to_string())?;
    let opts = EvalOptions {
        pn: vec![10, 50, 100, 250, 500, 1000],
        pr: PrMode::Radius,
    };
    let (eval, _) = evaluate_model(&params, &retrieval, &test, &opts).map_err(|e| e.to_string())?;
    let last = report.last();
    to_json(&RetrievalDemo {
        variant,
        map: eval.map,
        pn: eval.pn,
        pr: eval.pr,
        filter_precision: last.and_then(|e| e.filter_precision),
        correction_accuracy: last.and_then(|e| e.correction_accuracy),
    })
}

#[wasm_bindgen]
pub fn boxplot_demo(n: usize, tau: f64, warmup_epochs: usize, seed: u32) -> Result<String, JsError> {
    boxplot_json(n, tau, warmup_epochs, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn retrieval_demo(variant: &str, tau: f64, epochs: usize, seed: u32) -> Result<String, JsError> {
    retrieval_json(variant, tau, epochs, seed.into()).map_err(|e| JsError::new(&e))
}
