//! Ranking metrics.
//!
//! Conventions: a query with no relevant database item has AP = 0 and
//! recall 0; a Hamming radius that retrieves nothing has precision 1.

use serde::Serialize;

use super::index::RankingResult;
use crate::dataset::Label;
use crate::{Error, Result};

/// Dense query x database relevance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relevance {
    n_db: usize,
    bits: Vec<bool>,
}

impl Relevance {
    /// Relevant when the query and database labels share a category.
    pub fn from_labels(queries: &[Label], db: &[Label]) -> Self {
        let mut bits = Vec::with_capacity(queries.len() * db.len());
        for q in queries {
            bits.extend(db.iter().map(|d| q.overlap(d) >= 1));
        }
        Relevance { n_db: db.len(), bits }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let n_db = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_db) {
            return Err(Error::arg("relevance rows differ in length"));
        }
        Ok(Relevance {
            n_db,
            bits: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_queries(&self) -> usize {
        self.bits.len().checked_div(self.n_db).unwrap_or(0)
    }

    pub fn n_db(&self) -> usize {
        self.n_db
    }

    pub fn row(&self, q: usize) -> &[bool] {
        &self.bits[q * self.n_db..(q + 1) * self.n_db]
    }
}

/// AP over a relevance sequence in rank order.
pub fn average_precision(ranked: impl IntoIterator<Item = bool>) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, rel) in ranked.into_iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

fn check(rankings: &[RankingResult], rel: &Relevance) -> Result<()> {
    if rankings.is_empty() {
        return Err(Error::arg("empty query set"));
    }
    if rankings.len() != rel.n_queries() {
        return Err(Error::arg(format!(
            "{} rankings but relevance covers {} queries",
            rankings.len(),
            rel.n_queries()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub map: f64,
    /// Per-query average precision.
    pub ap: Vec<f64>,
}

/// MAP over full rankings.
pub fn mean_average_precision(rankings: &[RankingResult], rel: &Relevance) -> Result<MapReport> {
    check(rankings, rel)?;
    let ap: Vec<f64> = rankings
        .iter()
        .enumerate()
        .map(|(q, r)| {
            let row = rel.row(q);
            average_precision(r.ids.iter().map(|&id| row[id]))
        })
        .collect();
    let map = ap.iter().sum::<f64>() / ap.len() as f64;
    Ok(MapReport { map, ap })
}

pub(crate) fn check_cutoffs(n_list: &[usize], n_db: usize) -> Result<()> {
    if let Some(&bad) = n_list.iter().find(|&&n| n == 0 || n > n_db) {
        return Err(Error::arg(format!("cutoff N = {bad} must be in 1..={n_db}")));
    }
    Ok(())
}

/// Mean precision among the top `N` results, per requested `N`.
pub fn precision_at_n(rankings: &[RankingResult], rel: &Relevance, n_list: &[usize]) -> Result<Vec<(usize, f64)>> {
    check(rankings, rel)?;
    check_cutoffs(n_list, rel.n_db())?;
    let nq = rankings.len() as f64;
    Ok(n_list
        .iter()
        .map(|&n| {
            let total: f64 = rankings
                .iter()
                .enumerate()
                .map(|(q, r)| {
                    let row = rel.row(q);
                    r.ids[..n].iter().filter(|&&id| row[id]).count() as f64 / n as f64
                })
                .sum();
            (n, total / nq)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    /// Hamming radius, or rank cutoff in rank mode.
    pub at: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Per-query precision/recall at Hamming radius `r`.
pub(crate) fn pr_at_radius(ranking: &RankingResult, row: &[bool], total_rel: usize, radius: u32) -> (f64, f64) {
    let retrieved = ranking.distances.partition_point(|&d| d <= radius);
    let hits = ranking.ids[..retrieved].iter().filter(|&&id| row[id]).count();
    let precision = if retrieved == 0 {
        1.0
    } else {
        hits as f64 / retrieved as f64
    };
    let recall = if total_rel == 0 {
        0.0
    } else {
        hits as f64 / total_rel as f64
    };
    (precision, recall)
}

/// Hash-lookup PR curve: one point per radius `0..=k`.
pub fn pr_curve(rankings: &[RankingResult], rel: &Relevance, k: usize) -> Result<Vec<PrPoint>> {
    check(rankings, rel)?;
    let nq = rankings.len() as f64;
    let totals: Vec<usize> = (0..rankings.len())
        .map(|q| rel.row(q).iter().filter(|&&b| b).count())
        .collect();
    Ok((0..=k)
        .map(|radius| {
            let (mut p, mut r) = (0.0, 0.0);
            for (q, ranking) in rankings.iter().enumerate() {
                let (pq, rq) = pr_at_radius(ranking, rel.row(q), totals[q], radius as u32);
                p += pq;
                r += rq;
            }
            PrPoint {
                at: radius,
                precision: p / nq,
                recall: r / nq,
            }
        })
        .collect())
}

/// Rank-cutoff PR curve: precision and recall of the top `N` per cutoff.
pub fn pr_curve_by_rank(rankings: &[RankingResult], rel: &Relevance, cutoffs: &[usize]) -> Result<Vec<PrPoint>> {
    check(rankings, rel)?;
    check_cutoffs(cutoffs, rel.n_db())?;
    let nq = rankings.len() as f64;
    Ok(cutoffs
        .iter()
        .map(|&n| {
            let (mut p, mut r) = (0.0, 0.0);
            for (q, ranking) in rankings.iter().enumerate() {
                let row = rel.row(q);
                let total = row.iter().filter(|&&b| b).count();
                let hits = ranking.ids[..n].iter().filter(|&&id| row[id]).count();
                p += hits as f64 / n as f64;
                r += if total == 0 { 0.0 } else { hits as f64 / total as f64 };
            }
            PrPoint {
                at: n,
                precision: p / nq,
                recall: r / nq,
            }
        })
        .collect())
}
