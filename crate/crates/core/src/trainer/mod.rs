//! Training loop: warm-up on all given labels, then per-batch filtering,
//! label reconstruction and SGD on the routed objective.
//!
//! A [`NoiseMask`] passed to [`train`] only feeds diagnostics in the
//! [`TrainReport`]; routing decisions never read it.

mod sweep;

use std::collections::VecDeque;
use std::io::Write;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corrector::reconstruct;
use crate::dataset::{Dataset, Label, NoiseMask};
use crate::filter::{consistency, partition, score_matrix};
use crate::losses::{augment, column_std, LossBreakdown, LossSpec, Partitions, TermsPresent};
use crate::model::{
    backward, backward_cached, encode_dataset, feature_matrices, forward_batch, sgd_step, Batch, ModelConfig,
    ModelParams,
};
use crate::rng::{stream, stream_rng, StreamRng};
use crate::{Error, Result};

pub use sweep::{sweep, write_sweep_csv, Setting, SweepCell, SweepData};

/// Ablation switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Filter, reconstruct, and route to all three label sets.
    #[default]
    Full,
    /// No filter: every row keeps its given label.
    I,
    /// Filter without reconstruction: every flagged row is unlabeled.
    R,
    /// Reconstruct, but drop flagged rows whose donors disagree.
    U,
    /// Drop every flagged row.
    Ru,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "i" => Ok(Variant::I),
            "r" => Ok(Variant::R),
            "u" => Ok(Variant::U),
            "ru" => Ok(Variant::Ru),
            _ => Err(Error::arg(format!("unknown variant {s:?}"))),
        }
    }
}

/// Which rows the consistency ranking is taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterScope {
    /// `floor(tau * z)` rows flagged within each batch.
    #[default]
    Batch,
    /// `floor(tau * n)` rows flagged over the dataset once per epoch.
    Global,
}

/// Where clean donors for reconstruction come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DonorScope {
    /// Clean rows of the current batch.
    #[default]
    Batch,
    /// Clean rows of the current batch followed by up to `capacity` clean
    /// rows kept from earlier batches of the same epoch.
    Cache { capacity: usize },
}

fn default_batch_size() -> usize {
    48
}
fn default_lr() -> f64 {
    0.005
}
fn default_hidden() -> usize {
    256
}
fn default_fusion() -> usize {
    128
}
fn default_code_len() -> usize {
    64
}

/// Training configuration. `epochs` counts warm-up epochs too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub warmup_epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    pub tau: f64,
    #[serde(default)]
    pub loss: LossSpec,
    #[serde(default)]
    pub variant: Variant,
    pub seed: u64,
    #[serde(default)]
    pub filter_scope: FilterScope,
    #[serde(default)]
    pub donor_scope: DonorScope,
    #[serde(default = "default_code_len")]
    pub code_len: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_fusion")]
    pub fusion: usize,
}

impl TrainConfig {
    pub fn new(epochs: usize, warmup_epochs: usize, tau: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            warmup_epochs,
            batch_size: default_batch_size(),
            lr: default_lr(),
            tau,
            loss: LossSpec::default(),
            variant: Variant::Full,
            seed,
            filter_scope: FilterScope::Batch,
            donor_scope: DonorScope::Batch,
            code_len: default_code_len(),
            hidden: default_hidden(),
            fusion: default_fusion(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs > 0 && self.warmup_epochs >= self.epochs {
            return Err(Error::arg(format!(
                "warmup_epochs {} must be below epochs {}",
                self.warmup_epochs, self.epochs
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::arg("batch_size must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::arg(format!("tau {} outside [0, 1)", self.tau)));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::arg(format!("invalid learning rate {}", self.lr)));
        }
        if let DonorScope::Cache { capacity: 0 } = self.donor_scope {
            return Err(Error::arg("donor cache capacity must be positive"));
        }
        self.loss.validate()
    }

    /// Network shape for a dataset.
    pub fn model_config(&self, ds: &Dataset) -> ModelConfig {
        ModelConfig {
            hidden: self.hidden,
            fusion: self.fusion,
            ..ModelConfig::new(ds.d_x, ds.d_y, self.code_len, ds.m)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Warmup,
    Main,
}

/// Per-epoch training record. Loss fields are means over batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub batches: usize,
    pub loss: LossBreakdown,
    pub flagged: usize,
    pub corrected: usize,
    pub unlabeled: usize,
    pub dropped: usize,
    /// Fraction of flagged rows that are truly corrupted.
    pub filter_precision: Option<f64>,
    /// Fraction of corrupted rows that were flagged.
    pub filter_recall: Option<f64>,
    /// Fraction of corrected rows whose new label equals the original.
    pub correction_accuracy: Option<f64>,
    /// Zero-norm codes or centers met while scoring.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub variant: Variant,
    pub epochs: Vec<EpochRecord>,
    /// Where the final parameters were written, when they were.
    pub checkpoint: Option<String>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// One row per epoch.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epoch",
            "phase",
            "batches",
            "pointwise",
            "pairwise",
            "contrastive",
            "center",
            "quantization",
            "total",
            "flagged",
            "corrected",
            "unlabeled",
            "dropped",
            "filter_precision",
            "filter_recall",
            "correction_accuracy",
            "degenerate",
        ])?;
        let f = |v: f64| format!("{v:.17}");
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        for e in &self.epochs {
            let l = &e.loss;
            w.write_record([
                e.epoch.to_string(),
                format!("{:?}", e.phase).to_lowercase(),
                e.batches.to_string(),
                f(l.pointwise),
                f(l.pairwise),
                f(l.contrastive),
                f(l.center),
                f(l.quantization),
                f(l.total),
                e.flagged.to_string(),
                e.corrected.to_string(),
                e.unlabeled.to_string(),
                e.dropped.to_string(),
                opt(e.filter_precision),
                opt(e.filter_recall),
                opt(e.correction_accuracy),
                e.degenerate.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Running sums for one epoch.
#[derive(Default)]
struct EpochAcc {
    batches: usize,
    loss: LossBreakdown,
    flagged: usize,
    corrected: usize,
    unlabeled: usize,
    dropped: usize,
    flagged_corrupt: usize,
    corrupt_seen: usize,
    correct_fixes: usize,
    degenerate: usize,
}

impl EpochAcc {
    fn add_loss(&mut self, b: &LossBreakdown) {
        self.batches += 1;
        let l = &mut self.loss;
        l.pointwise += b.pointwise;
        l.pairwise += b.pairwise;
        l.contrastive += b.contrastive;
        l.center += b.center;
        l.quantization += b.quantization;
        l.total += b.total;
        let (p, q) = (&mut l.present, b.present);
        *p = TermsPresent {
            pointwise: p.pointwise || q.pointwise,
            pairwise: p.pairwise || q.pairwise,
            contrastive: p.contrastive || q.contrastive,
            center: p.center || q.center,
            quantization: p.quantization || q.quantization,
        };
    }

    fn finish(mut self, epoch: usize, phase: Phase, has_mask: bool) -> EpochRecord {
        let n = self.batches.max(1) as f64;
        let l = &mut self.loss;
        for v in [
            &mut l.pointwise,
            &mut l.pairwise,
            &mut l.contrastive,
            &mut l.center,
            &mut l.quantization,
            &mut l.total,
        ] {
            *v /= n;
        }
        let ratio = |a: usize, b: usize| (has_mask && b > 0).then(|| a as f64 / b as f64);
        EpochRecord {
            epoch,
            phase,
            batches: self.batches,
            loss: self.loss,
            flagged: self.flagged,
            corrected: self.corrected,
            unlabeled: self.unlabeled,
            dropped: self.dropped,
            filter_precision: ratio(self.flagged_corrupt, self.flagged),
            filter_recall: ratio(self.flagged_corrupt, self.corrupt_seen),
            correction_accuracy: ratio(self.correct_fixes, self.corrected),
            degenerate: self.degenerate,
        }
    }
}

fn check_inputs(params: &ModelParams, ds: &Dataset, cfg: &TrainConfig, mask: Option<&NoiseMask>) -> Result<()> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::arg("cannot train on an empty dataset"));
    }
    let mc = params.config();
    if (mc.d_x, mc.d_y, mc.categories) != (ds.d_x, ds.d_y, ds.m) {
        return Err(Error::arg(format!(
            "model expects (d_x, d_y, m) = ({}, {}, {}), dataset has ({}, {}, {})",
            mc.d_x, mc.d_y, mc.categories, ds.d_x, ds.d_y, ds.m
        )));
    }
    if let Some(m) = mask {
        if m.len() != ds.len() {
            return Err(Error::arg("noise mask length differs from dataset"));
        }
    }
    Ok(())
}

fn epoch_order(ds: &Dataset, rng: &mut StreamRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(rng);
    order
}

fn with_context(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!("diverged at epoch {epoch}, batch {batch}: {msg}")),
        other => other,
    }
}

/// One warm-up epoch on all given labels.
fn warmup_epoch(
    params: &mut ModelParams,
    ds: &Dataset,
    cfg: &TrainConfig,
    shuffle: &mut StreamRng,
    epoch: usize,
) -> Result<EpochAcc> {
    let mut acc = EpochAcc::default();
    for (b, rows) in epoch_order(ds, shuffle).chunks(cfg.batch_size).enumerate() {
        let (x, y) = feature_matrices(ds, rows);
        let labels: Vec<Label> = rows.iter().map(|&i| ds.instances[i].label.clone()).collect();
        let batch = Batch {
            x,
            y,
            partitions: Partitions::all_clean(&labels),
            augmented: None,
        };
        let (loss, grads) = backward(params, &batch, &cfg.loss).map_err(|e| with_context(e, epoch, b))?;
        sgd_step(params, &grads, cfg.lr).map_err(|e| with_context(e, epoch, b))?;
        acc.add_loss(&loss);
    }
    Ok(acc)
}

/// Runs `cfg.warmup_epochs` epochs with every row treated as clean. The
/// objective reduces to the pointwise, center and quantization terms.
pub fn warmup(params: ModelParams, ds: &Dataset, cfg: &TrainConfig) -> Result<ModelParams> {
    check_inputs(&params, ds, cfg, None)?;
    let mut params = params;
    let mut shuffle = stream_rng(cfg.seed, stream::SHUFFLE);
    for epoch in 0..cfg.warmup_epochs {
        warmup_epoch(&mut params, ds, cfg, &mut shuffle, epoch)?;
    }
    Ok(params)
}

/// Per-batch routing decided by filter, corrector and variant.
struct Routing {
    /// Batch positions kept for the step, ascending.
    kept: Vec<usize>,
    /// Partitions over positions in `kept`.
    parts: Partitions,
}

struct DonorCache {
    capacity: usize,
    rows: VecDeque<(Vec<f64>, Label)>,
}

impl DonorCache {
    fn push(&mut self, row: Vec<f64>, label: Label) {
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back((row, label));
    }
}

/// Trains `params` on `ds`: `cfg.warmup_epochs` warm-up epochs followed by
/// the filtered objective until `cfg.epochs`.
pub fn train(
    params: ModelParams,
    ds: &Dataset,
    cfg: &TrainConfig,
    mask: Option<&NoiseMask>,
) -> Result<(ModelParams, TrainReport)> {
    check_inputs(&params, ds, cfg, mask)?;
    let mut params = params;
    let mut shuffle = stream_rng(cfg.seed, stream::SHUFFLE);
    let mut aug_rng = stream_rng(cfg.seed, stream::AUGMENT);
    let mut report = TrainReport {
        seed: cfg.seed,
        variant: cfg.variant,
        epochs: Vec::with_capacity(cfg.epochs),
        checkpoint: None,
    };
    let labels: Vec<Label> = ds.labels();
    let corrupted = |i: usize| mask.is_some_and(|m| m.is_corrupted(i));

    for epoch in 0..cfg.epochs {
        if epoch < cfg.warmup_epochs {
            let acc = warmup_epoch(&mut params, ds, cfg, &mut shuffle, epoch)?;
            report.epochs.push(acc.finish(epoch, Phase::Warmup, mask.is_some()));
            continue;
        }
        let mut acc = EpochAcc::default();
        let global_noisy = match (cfg.variant, cfg.filter_scope) {
            (Variant::I, _) | (_, FilterScope::Batch) => None,
            (_, FilterScope::Global) => {
                let codes = encode_dataset(&params, ds)?;
                let d = score_matrix(codes.view(), params.centers.view())?;
                let t = consistency(&d, &labels)?;
                let p = partition(&t, cfg.tau)?;
                let mut flags = vec![false; ds.len()];
                p.noisy_idx.iter().for_each(|&i| flags[i] = true);
                Some(flags)
            }
        };
        let mut cache = match cfg.donor_scope {
            DonorScope::Cache { capacity } => Some(DonorCache {
                capacity,
                rows: VecDeque::new(),
            }),
            DonorScope::Batch => None,
        };

        for (b, rows) in epoch_order(ds, &mut shuffle).chunks(cfg.batch_size).enumerate() {
            let (x, y) = feature_matrices(ds, rows);
            let given: Vec<Label> = rows.iter().map(|&i| labels[i].clone()).collect();
            let fwd = forward_batch(&params, x.view(), y.view())?;
            let z = rows.len();

            let routing = if cfg.variant == Variant::I {
                Routing {
                    kept: (0..z).collect(),
                    parts: Partitions::all_clean(&given),
                }
            } else {
                let d = score_matrix(fwd.codes.view(), params.centers.view())?;
                acc.degenerate += d.degenerate;
                let (clean_idx, noisy_idx): (Vec<usize>, Vec<usize>) = match &global_noisy {
                    Some(flags) => (0..z).partition(|&r| !flags[rows[r]]),
                    None => {
                        let t = consistency(&d, &given)?;
                        let p = partition(&t, cfg.tau)?;
                        (p.clean_idx, p.noisy_idx)
                    }
                };
                acc.flagged += noisy_idx.len();
                acc.flagged_corrupt += noisy_idx.iter().filter(|&&r| corrupted(rows[r])).count();

                let mut fixes: Vec<Option<Label>> = vec![None; noisy_idx.len()];
                if matches!(cfg.variant, Variant::Full | Variant::U) && !noisy_idx.is_empty() {
                    let mut clean_scores = d.scores.select(Axis(0), &clean_idx);
                    let mut clean_labels: Vec<Label> = clean_idx.iter().map(|&r| given[r].clone()).collect();
                    if let Some(c) = &cache {
                        let k = clean_scores.ncols();
                        let extra = Array2::from_shape_fn((c.rows.len(), k), |(i, j)| c.rows[i].0[j]);
                        clean_scores = ndarray::concatenate![Axis(0), clean_scores, extra];
                        clean_labels.extend(c.rows.iter().map(|(_, l)| l.clone()));
                    }
                    let noisy_scores = d.scores.select(Axis(0), &noisy_idx);
                    let rec = reconstruct(noisy_scores.view(), clean_scores.view(), &clean_labels)?;
                    for c in rec.corrected {
                        fixes[c.noisy_pos] = Some(c.label);
                    }
                }
                if let Some(c) = &mut cache {
                    for &r in &clean_idx {
                        c.push(d.scores.row(r).to_vec(), given[r].clone());
                    }
                }

                let mut kept = clean_idx.clone();
                let mut corrected = Vec::new();
                let mut unlabeled = Vec::new();
                for (&r, fix) in noisy_idx.iter().zip(fixes) {
                    match (cfg.variant, fix) {
                        (Variant::Full | Variant::U, Some(l)) => {
                            if mask.is_some_and(|m| m.true_label(rows[r], &given[r]) == &l) {
                                acc.correct_fixes += 1;
                            }
                            corrected.push((r, l));
                        }
                        (Variant::Full | Variant::R, _) => unlabeled.push(r),
                        _ => acc.dropped += 1,
                    }
                }
                kept.extend(corrected.iter().map(|(r, _)| *r));
                kept.extend(unlabeled.iter().copied());
                kept.sort_unstable();
                let pos = |r: usize| kept.binary_search(&r).expect("kept row");
                let parts = Partitions {
                    clean: clean_idx.iter().map(|&r| (pos(r), given[r].clone())).collect(),
                    corrected: corrected.into_iter().map(|(r, l)| (pos(r), l)).collect(),
                    unlabeled: unlabeled.into_iter().map(pos).collect(),
                };
                Routing { kept, parts }
            };
            acc.corrupt_seen += rows.iter().filter(|&&i| corrupted(i)).count();
            acc.corrected += routing.parts.corrected.len();
            acc.unlabeled += routing.parts.unlabeled.len();
            if routing.kept.is_empty() {
                continue;
            }

            let full_batch = routing.kept.len() == z;
            let (bx, by) = if full_batch {
                (x, y)
            } else {
                (x.select(Axis(0), &routing.kept), y.select(Axis(0), &routing.kept))
            };
            let augmented = if routing.parts.unlabeled.is_empty() {
                None
            } else {
                let (sx, sy) = (column_std(bx.view()), column_std(by.view()));
                let ux = bx.select(Axis(0), &routing.parts.unlabeled);
                let uy = by.select(Axis(0), &routing.parts.unlabeled);
                Some(augment(
                    ux.view(),
                    uy.view(),
                    sx.view(),
                    sy.view(),
                    &cfg.loss.augment,
                    &mut aug_rng,
                ))
            };
            let batch = Batch {
                x: bx,
                y: by,
                partitions: routing.parts,
                augmented,
            };
            let step = if full_batch {
                backward_cached(&params, &fwd, &batch, &cfg.loss)
            } else {
                backward(&params, &batch, &cfg.loss)
            };
            let (loss, grads) = step.map_err(|e| with_context(e, epoch, b))?;
            sgd_step(&mut params, &grads, cfg.lr).map_err(|e| with_context(e, epoch, b))?;
            acc.add_loss(&loss);
        }
        report.epochs.push(acc.finish(epoch, Phase::Main, mask.is_some()));
    }
    Ok((params, report))
}

/// Initializes parameters from `cfg.seed` and trains.
pub fn fit(ds: &Dataset, cfg: &TrainConfig, mask: Option<&NoiseMask>) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    let params = ModelParams::init(&cfg.model_config(ds), cfg.seed)?;
    train(params, ds, cfg, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::inject_noise;
    use crate::dataset::Split;
    use crate::dataset::{generate_synthetic, SynthConfig};

    fn small_data(seed: u64) -> Dataset {
        let cfg = SynthConfig {
            n: 120,
            m: 4,
            d_x: 10,
            d_y: 6,
            labels_min: 1,
            labels_max: 2,
            cluster_spread: 0.3,
        };
        generate_synthetic(&cfg, seed, Split::Train).unwrap()
    }

    fn small_cfg(variant: Variant, tau: f64) -> TrainConfig {
        TrainConfig {
            variant,
            code_len: 8,
            hidden: 16,
            fusion: 8,
            batch_size: 16,
            lr: 0.01,
            ..TrainConfig::new(4, 1, tau, 3)
        }
    }

    #[test]
    fn config_validation() {
        assert!(small_cfg(Variant::Full, 0.4).validate().is_ok());
        let mut c = small_cfg(Variant::Full, 0.4);
        c.warmup_epochs = 4;
        assert!(c.validate().is_err());
        c = small_cfg(Variant::Full, 1.0);
        assert!(c.validate().is_err());
        c = small_cfg(Variant::Full, 0.4);
        c.batch_size = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_requires_seed() {
        let ok: TrainConfig = serde_json::from_str(r#"{"epochs":3,"warmup_epochs":1,"tau":0.4,"seed":9}"#).unwrap();
        assert_eq!(ok.batch_size, 48);
        assert_eq!(ok.loss, LossSpec::default());
        assert!(serde_json::from_str::<TrainConfig>(r#"{"epochs":3,"warmup_epochs":1,"tau":0.4}"#).is_err());
        let v: TrainConfig =
            serde_json::from_str(r#"{"epochs":3,"warmup_epochs":1,"tau":0.4,"seed":1,"variant":"ru","donor_scope":{"cache":{"capacity":5}}}"#)
                .unwrap();
        assert_eq!(v.variant, Variant::Ru);
        assert_eq!(v.donor_scope, DonorScope::Cache { capacity: 5 });
    }

    #[test]
    fn zero_warmup_or_zero_lr_leaves_params() {
        let ds = small_data(1);
        let cfg = small_cfg(Variant::Full, 0.4);
        let p0 = ModelParams::init(&cfg.model_config(&ds), 5).unwrap();
        let none = TrainConfig {
            warmup_epochs: 0,
            ..cfg.clone()
        };
        assert_eq!(warmup(p0.clone(), &ds, &none).unwrap(), p0);
        let frozen = TrainConfig { lr: 0.0, ..cfg };
        assert_eq!(warmup(p0.clone(), &ds, &frozen).unwrap(), p0);
    }

    #[test]
    fn variant_i_flags_nothing() {
        let ds = small_data(2);
        let (_, rep) = fit(&ds, &small_cfg(Variant::I, 0.4), None).unwrap();
        assert_eq!(rep.epochs.len(), 4);
        assert!(rep.epochs.iter().all(|e| e.flagged == 0 && e.dropped == 0));
    }

    #[test]
    fn zero_tau_full_matches_variant_i() {
        let ds = small_data(3);
        let (a, _) = fit(&ds, &small_cfg(Variant::Full, 0.0), None).unwrap();
        let (b, _) = fit(&ds, &small_cfg(Variant::I, 0.0), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_seed_same_run() {
        let ds = small_data(4);
        let (noisy, mask) = inject_noise(&ds, 0.4, 4).unwrap();
        let cfg = small_cfg(Variant::Full, 0.4);
        let (a, ra) = fit(&noisy, &cfg, Some(&mask)).unwrap();
        let (b, rb) = fit(&noisy, &cfg, Some(&mask)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn partitions_cover_each_batch() {
        let ds = small_data(5);
        let (noisy, mask) = inject_noise(&ds, 0.4, 5).unwrap();
        for variant in [Variant::Full, Variant::R, Variant::U, Variant::Ru] {
            let (_, rep) = fit(&noisy, &small_cfg(variant, 0.4), Some(&mask)).unwrap();
            for e in rep.epochs.iter().filter(|e| e.phase == Phase::Main) {
                // 120 rows in batches of 16: seven full batches and one of 8
                assert_eq!(e.flagged, 7 * 6 + 3);
                assert_eq!(e.corrected + e.unlabeled + e.dropped, e.flagged);
                match variant {
                    Variant::Full => assert_eq!(e.dropped, 0),
                    Variant::R => assert_eq!(e.unlabeled, e.flagged),
                    Variant::U => assert_eq!(e.unlabeled, 0),
                    _ => assert_eq!(e.dropped, e.flagged),
                }
                assert!(e.filter_precision.is_some());
            }
        }
    }

    #[test]
    fn global_scope_and_donor_cache_run() {
        let ds = small_data(6);
        let (noisy, mask) = inject_noise(&ds, 0.4, 6).unwrap();
        let cfg = TrainConfig {
            filter_scope: FilterScope::Global,
            donor_scope: DonorScope::Cache { capacity: 32 },
            ..small_cfg(Variant::Full, 0.4)
        };
        let (_, rep) = fit(&noisy, &cfg, Some(&mask)).unwrap();
        let main: Vec<_> = rep.epochs.iter().filter(|e| e.phase == Phase::Main).collect();
        assert!(main.iter().all(|e| e.flagged == 48));
    }

    #[test]
    fn report_csv_has_row_per_epoch() {
        let ds = small_data(7);
        let (_, rep) = fit(&ds, &small_cfg(Variant::Full, 0.25), None).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
