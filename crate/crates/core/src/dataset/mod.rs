//! Instances, datasets, label similarity and the on-disk dataset formats.

mod io;
mod noise;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{
    export_csv, load_dataset, load_noise_mask, read_dataset, read_noise_mask, save_dataset, save_noise_mask,
    write_dataset, write_noise_mask,
};
pub use noise::{inject_noise, NoiseType};
pub use synth::{generate_synthetic, SynthConfig};

/// Multi-hot category membership vector.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label(Vec<u8>);

impl Label {
    /// Builds a label from 0/1 entries. Any nonzero byte counts as 1.
    pub fn new(bits: Vec<u8>) -> Self {
        Label(bits.into_iter().map(|b| (b != 0) as u8).collect())
    }

    pub fn from_categories(m: usize, cats: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![0u8; m];
        for c in cats {
            bits[c] = 1;
        }
        Label(bits)
    }

    pub fn zeros(m: usize) -> Self {
        Label(vec![0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j] != 0
    }

    /// Number of positive categories.
    pub fn cardinality(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b != 0).map(|(j, _)| j)
    }

    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 0).map(|(j, _)| j)
    }

    /// Count of shared categories.
    pub fn overlap(&self, other: &Label) -> usize {
        self.0.iter().zip(&other.0).filter(|(&a, &b)| a != 0 && b != 0).count()
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Label(")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        f.write_str(")")
    }
}

/// +1 when the two labels share at least one category, otherwise -1.
pub fn label_similarity(a: &Label, b: &Label) -> Result<i8> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("label length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(if a.overlap(b) >= 1 { 1 } else { -1 })
}

/// One paired observation: text-side features `x`, image-side features `y`
/// and a multi-hot label.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: Vec<f32>,
    pub y: Vec<f32>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Retrieval,
    Test,
    /// Split is not recorded in the binary format; loaded datasets carry this.
    Unspecified,
}

impl Split {
    pub(crate) fn stream_offset(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Retrieval => 1,
            Split::Test => 2,
            Split::Unspecified => 3,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "retrieval" => Ok(Split::Retrieval),
            "test" => Ok(Split::Test),
            other => Err(Error::arg(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub d_x: usize,
    pub d_y: usize,
    pub m: usize,
    pub split: Split,
    pub seed: u64,
}

impl Dataset {
    pub fn empty(d_x: usize, d_y: usize, m: usize, seed: u64) -> Self {
        Dataset {
            instances: Vec::new(),
            d_x,
            d_y,
            m,
            split: Split::Unspecified,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.instances.iter().map(|o| o.label.clone()).collect()
    }

    /// Checks that every instance matches the header dimensions and has a
    /// nonempty label.
    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.instances.iter().enumerate() {
            if o.x.len() != self.d_x || o.y.len() != self.d_y || o.label.len() != self.m {
                return Err(Error::arg(format!(
                    "instance {i} has dims ({}, {}, {}), dataset header is ({}, {}, {})",
                    o.x.len(),
                    o.y.len(),
                    o.label.len(),
                    self.d_x,
                    self.d_y,
                    self.m
                )));
            }
            if o.label.cardinality() == 0 {
                return Err(Error::arg(format!("instance {i} has an all-zero label")));
            }
        }
        Ok(())
    }
}

/// Which training instances were corrupted and how.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMask {
    /// 0 for clean rows, 1..=4 for the corruption type.
    pub noise_type: Vec<u8>,
    /// Pre-corruption label for corrupted rows, all-zero for clean rows.
    pub original_labels: Vec<Label>,
    pub m: usize,
}

impl NoiseMask {
    pub fn clean(n: usize, m: usize) -> Self {
        NoiseMask {
            noise_type: vec![0; n],
            original_labels: vec![Label::zeros(m); n],
            m,
        }
    }

    pub fn len(&self) -> usize {
        self.noise_type.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise_type.is_empty()
    }

    pub fn is_corrupted(&self, i: usize) -> bool {
        self.noise_type[i] != 0
    }

    pub fn corrupted(&self) -> Vec<bool> {
        self.noise_type.iter().map(|&t| t != 0).collect()
    }

    pub fn corrupted_count(&self) -> usize {
        self.noise_type.iter().filter(|&&t| t != 0).count()
    }

    /// Number of instances per corruption type 1..=4.
    pub fn type_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for &t in &self.noise_type {
            if t != 0 {
                out[t as usize - 1] += 1;
            }
        }
        out
    }

    /// Ground-truth label for instance `i` given its current (possibly noisy) label.
    pub fn true_label<'a>(&'a self, i: usize, current: &'a Label) -> &'a Label {
        if self.is_corrupted(i) {
            &self.original_labels[i]
        } else {
            current
        }
    }
}
