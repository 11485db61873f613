use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Instance, Label, Split};
use crate::rng::{stream, stream_rng, StreamRng};
use crate::{Error, Result};

/// Shape of a synthetic multi-label, two-modality corpus.
///
/// Each category owns one unit-norm prototype per modality. An instance's
/// features are the mean of its categories' prototypes plus isotropic
/// Gaussian noise with per-coordinate std `cluster_spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub m: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub labels_min: usize,
    pub labels_max: usize,
    pub cluster_spread: f64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < self.m {
            return Err(Error::arg(format!("need n >= m >= 2, got n={} m={}", self.n, self.m)));
        }
        if self.d_x < 4 || self.d_y < 4 {
            return Err(Error::arg(format!(
                "feature dims must be >= 4, got d_x={} d_y={}",
                self.d_x, self.d_y
            )));
        }
        if self.labels_min < 1 || self.labels_min > self.labels_max || self.labels_max > self.m {
            return Err(Error::arg(format!(
                "labels per instance range [{}, {}] invalid for m={}",
                self.labels_min, self.labels_max, self.m
            )));
        }
        if !(self.cluster_spread >= 0.0 && self.cluster_spread.is_finite()) {
            return Err(Error::arg("cluster_spread must be finite and >= 0"));
        }
        Ok(())
    }
}

fn unit_vector(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Draws a synthetic split.
///
/// Prototypes depend only on `seed`; the instance stream depends on
/// `(seed, split)`, so train/retrieval/test splits generated with the same
/// seed share one category geometry.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64, split: Split) -> Result<Dataset> {
    cfg.validate()?;
    let mut proto_rng = stream_rng(seed, stream::PROTOTYPES);
    let proto_x: Vec<Vec<f64>> = (0..cfg.m).map(|_| unit_vector(&mut proto_rng, cfg.d_x)).collect();
    let proto_y: Vec<Vec<f64>> = (0..cfg.m).map(|_| unit_vector(&mut proto_rng, cfg.d_y)).collect();

    let mut rng = stream_rng(seed, stream::INSTANCES + split.stream_offset());
    let mut instances = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let c = rng.random_range(cfg.labels_min..=cfg.labels_max);
        let mut cats = sample(&mut rng, cfg.m, c).into_vec();
        cats.sort_unstable();
        let x = mix(&proto_x, &cats, cfg.cluster_spread, &mut rng);
        let y = mix(&proto_y, &cats, cfg.cluster_spread, &mut rng);
        instances.push(Instance {
            x,
            y,
            label: Label::from_categories(cfg.m, cats),
        });
    }
    Ok(Dataset {
        instances,
        d_x: cfg.d_x,
        d_y: cfg.d_y,
        m: cfg.m,
        split,
        seed,
    })
}

fn mix(protos: &[Vec<f64>], cats: &[usize], spread: f64, rng: &mut StreamRng) -> Vec<f32> {
    let d = protos[0].len();
    let inv = 1.0 / cats.len() as f64;
    (0..d)
        .map(|t| {
            let mean: f64 = cats.iter().map(|&c| protos[c][t]).sum::<f64>() * inv;
            let noise = if spread > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                spread * z
            } else {
                0.0
            };
            (mean + noise) as f32
        })
        .collect()
}
