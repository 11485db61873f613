//! Multi-modal hashing under noisy labels.
//!
//! Two feature modalities are fused by per-modality MLPs into a `tanh`
//! relaxed code, binarized with `sgn`. During training each mini-batch is
//! split by how well the label's 1-0 pattern agrees with the code's
//! similarity scores to learnable category centers: consistent instances
//! are treated as clean, the rest are either relabeled from two agreeing
//! clean donors or used without labels through a contrastive objective.
//!
//! Modules, bottom-up:
//!
//! - [`dataset`]: instances, synthetic generator, label-noise injector, file I/O.
//! - [`model`]: the hashing network, hand-derived gradients, SGD, checkpoints.
//! - [`filter`]: center similarity scores, consistency levels, clean/noisy split.
//! - [`corrector`]: donor-pair label reconstruction for the noisy split.
//! - [`losses`]: the five objective terms and their weighted composition.
//! - [`trainer`]: warm-up, the filter-correct-update loop, ablation variants, sweeps.
//! - [`retrieval`]: bit-packed Hamming index, MAP / P@N / PR, box-plot statistics.

pub mod corrector;
pub mod dataset;
mod error;
pub mod filter;
pub mod losses;
pub mod model;
pub mod retrieval;
pub mod trainer;

mod binio;
pub mod rng;

pub use error::{Error, Result};
