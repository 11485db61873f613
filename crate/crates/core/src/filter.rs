//! Clean/noisy split from label-score consistency.
//!
//! Each relaxed code is scored against every category center by cosine
//! similarity. An instance's consistency level is the mean score over the
//! categories its label claims; the `floor(tau * z)` least consistent
//! instances of a batch are flagged as noisy.

use ndarray::{Array2, ArrayView2};

use crate::dataset::Label;
use crate::{Error, Result};

/// Cosine similarity of each code (row) to each center (column).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub scores: Array2<f64>,
    /// Code or center rows with zero norm whose cosines were defined as 0.
    pub degenerate: usize,
}

impl ScoreMatrix {
    pub fn nrows(&self) -> usize {
        self.scores.nrows()
    }
}

pub fn score_matrix(codes: ArrayView2<f64>, centers: ArrayView2<f64>) -> Result<ScoreMatrix> {
    if codes.ncols() != centers.ncols() {
        return Err(Error::arg(format!(
            "code length {} differs from center width {}",
            codes.ncols(),
            centers.ncols()
        )));
    }
    let norm = |a: ArrayView2<f64>| -> Vec<f64> { a.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect() };
    let code_norms = norm(codes);
    let center_norms = norm(centers);
    let mut scores = codes.dot(&centers.t());
    for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let den = code_norms[i] * center_norms[j];
            *v = if den > 0.0 { (*v / den).clamp(-1.0, 1.0) } else { 0.0 };
        }
    }
    let degenerate = code_norms.iter().chain(&center_norms).filter(|&&n| n == 0.0).count();
    Ok(ScoreMatrix { scores, degenerate })
}

/// Mean score over each row's positive categories.
pub fn consistency(d: &ScoreMatrix, labels: &[Label]) -> Result<Vec<f64>> {
    if labels.len() != d.nrows() {
        return Err(Error::arg("label count differs from score rows"));
    }
    labels
        .iter()
        .zip(d.scores.rows())
        .enumerate()
        .map(|(i, (l, row))| {
            if l.len() != row.len() {
                return Err(Error::arg(format!("label {i} has wrong width")));
            }
            let c = l.cardinality();
            if c == 0 {
                return Err(Error::arg(format!("label {i} is all-zero")));
            }
            Ok(l.positives().map(|j| row[j]).sum::<f64>() / c as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub t: Vec<f64>,
    /// Ascending batch positions.
    pub clean_idx: Vec<usize>,
    /// Ascending batch positions.
    pub noisy_idx: Vec<usize>,
    /// Largest flagged consistency, or `-inf` when nothing is flagged.
    pub threshold: f64,
}

/// Number of rows flagged for a batch of `z` at ratio `tau`.
pub fn flagged_count(tau: f64, z: usize) -> usize {
    (tau * z as f64).floor() as usize
}

/// Flags the `floor(tau * z)` smallest consistency levels as noisy. Ties on
/// `t` flag the lower position first.
pub fn partition(t: &[f64], tau: f64) -> Result<PartitionResult> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::arg(format!("tau {tau} outside [0, 1)")));
    }
    let z = t.len();
    let q = flagged_count(tau, z);
    let mut order: Vec<usize> = (0..z).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b)));
    let mut flagged = vec![false; z];
    for &i in &order[..q] {
        flagged[i] = true;
    }
    let threshold = order[..q].last().map_or(f64::NEG_INFINITY, |&i| t[i]);
    let (noisy_idx, clean_idx) = (0..z).partition(|&i| flagged[i]);
    Ok(PartitionResult {
        t: t.to_vec(),
        clean_idx,
        noisy_idx,
        threshold,
    })
}
