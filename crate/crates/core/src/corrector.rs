//! Label reconstruction for flagged instances.
//!
//! A flagged instance's score row is matched against every clean row by raw
//! inner product. If the two best-matching clean donors carry identical
//! labels, the flagged instance adopts that label; otherwise its label is
//! discarded and it is treated as unlabeled.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::dataset::Label;
use crate::{Error, Result};

/// Inner products of one score row with every clean score row.
pub fn match_consistency(d_i: ArrayView1<f64>, d_clean: ArrayView2<f64>) -> Result<Array1<f64>> {
    if d_clean.ncols() != d_i.len() {
        return Err(Error::arg("score row widths differ"));
    }
    Ok(d_clean.dot(&d_i))
}

/// The best and second-best matches. `second` is `None` with a single
/// candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Donors {
    pub first: usize,
    pub second: Option<usize>,
}

/// Positions of the two largest entries, larger first. Ties go to the lower
/// position. `None` for an empty input.
pub fn top2_donors(m: ArrayView1<f64>) -> Option<Donors> {
    let mut best: Option<usize> = None;
    let mut second: Option<usize> = None;
    // strict `>` keeps the earlier index on ties
    for (j, &v) in m.iter().enumerate() {
        match best {
            None => best = Some(j),
            Some(b) if v > m[b] => {
                second = best;
                best = Some(j);
            }
            Some(_) => {
                if second.is_none_or(|s| v > m[s]) {
                    second = Some(j);
                }
            }
        }
    }
    best.map(|first| Donors { first, second })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correction {
    /// Position within the noisy input rows.
    pub noisy_pos: usize,
    pub label: Label,
    /// Positions within the clean input rows.
    pub donors: Donors,
    /// Match scores of `(first, second)`.
    pub match_scores: (f64, Option<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unlabeled {
    pub noisy_pos: usize,
    /// `None` when there were no clean donors at all.
    pub donors: Option<Donors>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub corrected: Vec<Correction>,
    pub unlabeled: Vec<Unlabeled>,
    /// Corrections made from a single donor because only one clean row existed.
    pub single_donor: usize,
}

/// Reconstructs labels for the noisy rows from the clean rows.
///
/// `noisy_scores` and `clean_scores` are rows of the same score matrix;
/// `clean_labels[j]` belongs to `clean_scores` row `j`. With exactly one
/// clean row, every noisy row takes that row's label.
pub fn reconstruct(
    noisy_scores: ArrayView2<f64>,
    clean_scores: ArrayView2<f64>,
    clean_labels: &[Label],
) -> Result<ReconstructionResult> {
    if clean_labels.len() != clean_scores.nrows() {
        return Err(Error::arg("clean label count differs from clean score rows"));
    }
    let mut out = ReconstructionResult::default();
    for (pos, d_i) in noisy_scores.rows().into_iter().enumerate() {
        let m = match_consistency(d_i, clean_scores)?;
        let Some(donors) = top2_donors(m.view()) else {
            out.unlabeled.push(Unlabeled {
                noisy_pos: pos,
                donors: None,
            });
            continue;
        };
        let agree = match donors.second {
            Some(s) => clean_labels[donors.first] == clean_labels[s],
            None => {
                out.single_donor += 1;
                true
            }
        };
        if agree {
            out.corrected.push(Correction {
                noisy_pos: pos,
                label: clean_labels[donors.first].clone(),
                donors,
                match_scores: (m[donors.first], donors.second.map(|s| m[s])),
            });
        } else {
            out.unlabeled.push(Unlabeled {
                noisy_pos: pos,
                donors: Some(donors),
            });
        }
    }
    Ok(out)
}
