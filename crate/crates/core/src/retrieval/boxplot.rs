//! Five-number summaries of per-instance center similarity, grouped by
//! clean/noisy subset and in/out categories.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::dataset::{Label, NoiseMask};
use crate::filter::score_matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Clean,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Categories the observed label claims.
    In,
    /// Categories the observed label does not claim.
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linearly interpolated quantile at `p` of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FiveNumber {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(FiveNumber {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub subset: Subset,
    pub side: Side,
    pub count: usize,
    pub stats: FiveNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotTable {
    pub groups: Vec<GroupStats>,
    /// Diagnostics for groups left out because they were empty.
    pub omitted: Vec<String>,
}

impl BoxplotTable {
    pub fn group(&self, subset: Subset, side: Side) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.subset == subset && g.side == side)
    }

    /// `median(in) - median(out)` for a subset, when both groups exist.
    pub fn median_gap(&self, subset: Subset) -> Option<f64> {
        Some(self.group(subset, Side::In)?.stats.median - self.group(subset, Side::Out)?.stats.median)
    }
}

/// Groups per-instance mean similarity to in- and out-categories.
///
/// `codes` may be relaxed or binary codes; `labels` are the observed
/// (possibly corrupted) labels. Without a mask every row is clean.
pub fn boxplot_stats(
    codes: ArrayView2<f64>,
    centers: ArrayView2<f64>,
    labels: &[Label],
    mask: Option<&NoiseMask>,
) -> Result<BoxplotTable> {
    if labels.len() != codes.nrows() {
        return Err(Error::arg("label count differs from code rows"));
    }
    if let Some(mask) = mask {
        if mask.noise_type.len() != codes.nrows() {
            return Err(Error::arg("noise mask length differs from code rows"));
        }
    }
    let d = score_matrix(codes, centers)?;
    let mut samples: [Vec<f64>; 4] = Default::default();
    for (i, (row, l)) in d.scores.rows().into_iter().zip(labels).enumerate() {
        if l.len() != row.len() {
            return Err(Error::arg(format!("label {i} has wrong width")));
        }
        let base = if mask.is_some_and(|m| m.is_corrupted(i)) { 2 } else { 0 };
        let c = l.cardinality();
        if c > 0 {
            samples[base].push(l.positives().map(|j| row[j]).sum::<f64>() / c as f64);
        }
        if c < l.len() {
            let out = l.negatives().map(|j| row[j]).sum::<f64>() / (l.len() - c) as f64;
            samples[base + 1].push(out);
        }
    }
    let keys = [
        (Subset::Clean, Side::In),
        (Subset::Clean, Side::Out),
        (Subset::Noisy, Side::In),
        (Subset::Noisy, Side::Out),
    ];
    let mut table = BoxplotTable {
        groups: Vec::new(),
        omitted: Vec::new(),
    };
    for ((subset, side), s) in keys.into_iter().zip(&samples) {
        match FiveNumber::of(s) {
            Some(stats) => table.groups.push(GroupStats {
                subset,
                side,
                count: s.len(),
                stats,
            }),
            None => table
                .omitted
                .push(format!("{subset:?}/{side:?}: no instances").to_lowercase()),
        }
    }
    Ok(table)
}
