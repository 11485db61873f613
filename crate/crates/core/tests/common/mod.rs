#![allow(dead_code)]

use mmhash::dataset::Label;
use mmhash::losses::{total_loss, LossSpec, Partitions};
use mmhash::model::{backward, forward_batch, Batch, ModelConfig, ModelParams};
use mmhash::rng::{stream_rng, StreamRng};
use ndarray::Array2;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-8;

pub fn rng(seed: u64) -> StreamRng {
    stream_rng(seed, 1000)
}

pub fn random_label(rng: &mut StreamRng, m: usize) -> Label {
    loop {
        let bits: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
        if bits.contains(&1) {
            return Label::new(bits);
        }
    }
}

pub fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Six rows split two clean, two corrected, two unlabeled, so every term is live.
pub fn mixed_batch(rng: &mut StreamRng, cfg: &ModelConfig) -> Batch {
    let x = random_matrix(rng, 6, cfg.d_x);
    let y = random_matrix(rng, 6, cfg.d_y);
    let m = cfg.categories;
    let partitions = Partitions {
        clean: vec![(0, random_label(rng, m)), (3, random_label(rng, m))],
        corrected: vec![(1, random_label(rng, m)), (4, random_label(rng, m))],
        unlabeled: vec![2, 5],
    };
    let augmented = Some((random_matrix(rng, 2, cfg.d_x), random_matrix(rng, 2, cfg.d_y)));
    Batch {
        x,
        y,
        partitions,
        augmented,
    }
}

/// Objective value computed from scratch, with no gradient code involved.
pub fn objective(params: &ModelParams, batch: &Batch, spec: &LossSpec) -> f64 {
    let codes = forward_batch(params, batch.x.view(), batch.y.view()).unwrap().codes;
    let aug = batch
        .augmented
        .as_ref()
        .map(|(ax, ay)| forward_batch(params, ax.view(), ay.view()).unwrap().codes);
    let (b, _) = total_loss(
        codes.view(),
        aug.as_ref().map(|a| a.view()),
        params.centers.view(),
        &batch.partitions,
        spec,
    )
    .unwrap();
    b.total
}

pub struct GradMismatch {
    pub param: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

pub fn close(a: f64, n: f64) -> bool {
    let err = (a - n).abs();
    err <= ABS_TOL || err <= REL_TOL * a.abs().max(n.abs())
}

/// Compares every analytic partial with a central difference.
pub fn check_gradients(params: &ModelParams, batch: &Batch, spec: &LossSpec) -> (usize, Vec<GradMismatch>) {
    let (_, grads) = backward(params, batch, spec).unwrap();
    let analytic: Vec<(&'static str, Vec<f64>)> = grads.slices().into_iter().map(|(n, s)| (n, s.to_vec())).collect();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (slot, (name, a)) in analytic.iter().enumerate() {
        for (i, &ai) in a.iter().enumerate() {
            let mut p = params.clone();
            p.slices_mut()[slot].1[i] += FD_STEP;
            let up = objective(&p, batch, spec);
            p.slices_mut()[slot].1[i] -= 2.0 * FD_STEP;
            let down = objective(&p, batch, spec);
            let numeric = (up - down) / (2.0 * FD_STEP);
            checked += 1;
            if !close(ai, numeric) {
                bad.push(GradMismatch {
                    param: name,
                    index: i,
                    analytic: ai,
                    numeric,
                });
            }
        }
    }
    (checked, bad)
}

pub fn small_model(seed: u64) -> ModelParams {
    let cfg = ModelConfig {
        hidden: 8,
        fusion: 8,
        ..ModelConfig::new(5, 4, 8, 4)
    };
    ModelParams::init(&cfg, seed).unwrap()
}
