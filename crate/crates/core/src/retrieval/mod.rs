//! Hamming-space retrieval and ranking metrics.
//!
//! [`evaluate_codes`] streams queries through the index one at a time, so
//! memory stays linear in the database size. Per-query results are reduced
//! in query order regardless of the `parallel` feature.

pub mod boxplot;
pub mod index;
pub mod metrics;

use std::io::Write;

use serde::Serialize;

pub use boxplot::{boxplot_stats, BoxplotTable, FiveNumber, GroupStats, Side, Subset};
pub use index::{
    hamming_distance, load_index, pack, rank, read_index, save_index, unpack, write_index, PackedCodeIndex,
    RankingResult,
};
pub use metrics::{
    average_precision, mean_average_precision, pr_curve, pr_curve_by_rank, precision_at_n, MapReport, PrPoint,
    Relevance,
};

use crate::dataset::{Dataset, Label};
use crate::model::{hash_dataset, BinaryCode, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrMode {
    /// One point per Hamming radius `0..=k`.
    Radius,
    /// One point per rank cutoff.
    Rank(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    pub pn: Vec<usize>,
    pub pr: PrMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            pn: Vec::new(),
            pr: PrMode::Radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub map: f64,
    pub ap: Vec<f64>,
    pub pn: Vec<(usize, f64)>,
    pub pr: Vec<PrPoint>,
}

struct QueryResult {
    ap: f64,
    pn: Vec<f64>,
    pr: Vec<(f64, f64)>,
}

fn eval_query(query: &BinaryCode, label: &Label, index: &PackedCodeIndex, opts: &EvalOptions) -> Result<QueryResult> {
    let ranking = index.rank(query)?;
    let db_labels = index.labels();
    // `ids` are positions here, so relevance is indexed by id directly
    let row: Vec<bool> = db_labels.iter().map(|d| label.overlap(d) >= 1).collect();
    let total = row.iter().filter(|&&b| b).count();
    let ranked: Vec<bool> = ranking.ids.iter().map(|&id| row[id]).collect();
    let ap = average_precision(ranked.iter().copied());
    let mut prefix = Vec::with_capacity(ranked.len() + 1);
    prefix.push(0usize);
    for &r in &ranked {
        prefix.push(prefix.last().unwrap() + r as usize);
    }
    let pn = opts.pn.iter().map(|&n| prefix[n] as f64 / n as f64).collect();
    let recall = |hits: usize| if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    let pr = match &opts.pr {
        PrMode::Radius => (0..=index.code_len() as u32)
            .map(|radius| {
                let retrieved = ranking.distances.partition_point(|&d| d <= radius);
                let hits = prefix[retrieved];
                let p = if retrieved == 0 {
                    1.0
                } else {
                    hits as f64 / retrieved as f64
                };
                (p, recall(hits))
            })
            .collect(),
        PrMode::Rank(cutoffs) => cutoffs
            .iter()
            .map(|&n| (prefix[n] as f64 / n as f64, recall(prefix[n])))
            .collect(),
    };
    Ok(QueryResult { ap, pn, pr })
}

/// MAP, P@N and PR for `queries` against an index whose ids are row positions.
pub fn evaluate_codes(
    queries: &[BinaryCode],
    query_labels: &[Label],
    index: &PackedCodeIndex,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::arg("empty query set"));
    }
    if queries.len() != query_labels.len() {
        return Err(Error::arg("query count differs from query label count"));
    }
    if index.ids().iter().enumerate().any(|(i, &id)| i != id) {
        return Err(Error::arg("index ids must be row positions"));
    }
    metrics::check_cutoffs(&opts.pn, index.len())?;
    if let PrMode::Rank(c) = &opts.pr {
        metrics::check_cutoffs(c, index.len())?;
    }
    let run = |(q, l): (&BinaryCode, &Label)| eval_query(q, l, index, opts);
    #[cfg(feature = "parallel")]
    let results: Vec<QueryResult> = {
        use rayon::prelude::*;
        queries
            .par_iter()
            .zip(query_labels.par_iter())
            .map(run)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<QueryResult> = queries.iter().zip(query_labels).map(run).collect::<Result<_>>()?;

    let nq = results.len() as f64;
    let ap: Vec<f64> = results.iter().map(|r| r.ap).collect();
    let map = ap.iter().sum::<f64>() / nq;
    let pn = opts
        .pn
        .iter()
        .enumerate()
        .map(|(j, &n)| (n, results.iter().map(|r| r.pn[j]).sum::<f64>() / nq))
        .collect();
    let ats: Vec<usize> = match &opts.pr {
        PrMode::Radius => (0..=index.code_len()).collect(),
        PrMode::Rank(c) => c.clone(),
    };
    let pr = ats
        .iter()
        .enumerate()
        .map(|(j, &at)| PrPoint {
            at,
            precision: results.iter().map(|r| r.pr[j].0).sum::<f64>() / nq,
            recall: results.iter().map(|r| r.pr[j].1).sum::<f64>() / nq,
        })
        .collect();
    Ok(EvalReport { map, ap, pn, pr })
}

/// Hashes both sets with `params` and evaluates `test` queries against the
/// `retrieval` database.
pub fn evaluate_model(
    params: &ModelParams,
    retrieval: &Dataset,
    test: &Dataset,
    opts: &EvalOptions,
) -> Result<(EvalReport, PackedCodeIndex)> {
    let db_codes = hash_dataset(params, retrieval)?;
    let index = PackedCodeIndex::build(&db_codes, retrieval.labels())?;
    let q_codes = hash_dataset(params, test)?;
    let report = evaluate_codes(&q_codes, &test.labels(), &index, opts)?;
    Ok((report, index))
}

impl EvalReport {
    /// One row per query: `query,ap`.
    pub fn write_ap_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["query", "ap"])?;
        for (q, ap) in self.ap.iter().enumerate() {
            w.write_record([q.to_string(), format!("{ap:.17}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per cutoff: `n,precision`.
    pub fn write_pn_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "precision"])?;
        for (n, p) in &self.pn {
            w.write_record([n.to_string(), format!("{p:.17}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per radius or rank cutoff: `at,precision,recall`.
    pub fn write_pr_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["at", "precision", "recall"])?;
        for p in &self.pr {
            w.write_record([
                p.at.to_string(),
                format!("{:.17}", p.precision),
                format!("{:.17}", p.recall),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
