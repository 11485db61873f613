//! Objective terms and their weighted composition.
//!
//! Every term comes in two flavours: a value-only function and a `*_grad`
//! variant returning the value together with gradients with respect to the
//! relaxed codes (and centers, where they appear). The training objective is
//!
//! ```text
//! L = w_o L_o + alpha L_a + beta L_u + gamma L_c + eta L_q
//! ```
//!
//! with `L_o` pointwise (clean set), `L_a` pairwise (corrected set), `L_u`
//! contrastive (unlabeled set), `L_c` center separation, `L_q` quantization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{label_similarity, Label};
use crate::model::sign;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `L_a` and `L_q` are plain sums.
    PlainSum,
    /// `L_a` divided by `n_r^2`, `L_q` by the batch size.
    BatchMean,
}

/// How `cos(.,.)` is evaluated inside the pairwise and contrastive terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosineMode {
    /// True normalized cosine; zero-norm vectors give 0.
    Normalized,
    /// `(1/k) u.v`, which coincides with cosine only for exact +-1 codes.
    ScaledDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Gaussian noise scale relative to the per-dimension batch std.
    pub sigma: f64,
    /// Independent per-coordinate zeroing probability.
    pub p_mask: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            sigma: 0.1,
            p_mask: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossSpec {
    /// Weight on `L_o`. Fixed at 1 in the standard objective.
    pub pointwise_weight: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Similarity ceiling for non-matching pairs in `L_u`.
    pub eps_sim: f64,
    #[serde(default)]
    pub augment: AugmentConfig,
    pub normalization: Normalization,
    pub cosine: CosineMode,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            pointwise_weight: 1.0,
            alpha: 1.0,
            beta: 0.15,
            gamma: 5.0,
            eta: 1.0,
            eps_sim: 0.1,
            augment: AugmentConfig::default(),
            normalization: Normalization::BatchMean,
            cosine: CosineMode::Normalized,
        }
    }
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let w = [self.pointwise_weight, self.alpha, self.beta, self.gamma, self.eta];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg("loss weights must be finite and nonnegative"));
        }
        if !(self.eps_sim >= -1.0 && self.eps_sim < 1.0) {
            return Err(Error::arg(format!("eps_sim {} outside [-1, 1)", self.eps_sim)));
        }
        let a = self.augment;
        if !(a.sigma >= 0.0 && a.sigma.is_finite()) || !(0.0..1.0).contains(&a.p_mask) {
            return Err(Error::arg("augmentation needs sigma >= 0 and p_mask in [0, 1)"));
        }
        Ok(())
    }

    /// Same spec with every weight zeroed except the named term's.
    pub fn only(&self, term: Term) -> LossSpec {
        let mut s = self.clone();
        s.pointwise_weight = 0.0;
        s.alpha = 0.0;
        s.beta = 0.0;
        s.gamma = 0.0;
        s.eta = 0.0;
        match term {
            Term::Pointwise => s.pointwise_weight = 1.0,
            Term::Pairwise => s.alpha = 1.0,
            Term::Contrastive => s.beta = 1.0,
            Term::Center => s.gamma = 1.0,
            Term::Quantization => s.eta = 1.0,
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Pointwise,
    Pairwise,
    Contrastive,
    Center,
    Quantization,
}

/// Batch rows routed to each objective term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partitions {
    /// Rows whose given label is trusted.
    pub clean: Vec<(usize, Label)>,
    /// Rows relabeled by the corrector.
    pub corrected: Vec<(usize, Label)>,
    /// Rows with no usable label.
    pub unlabeled: Vec<usize>,
}

impl Partitions {
    /// Every row is clean with its given label.
    pub fn all_clean(labels: &[Label]) -> Self {
        Partitions {
            clean: labels.iter().cloned().enumerate().collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermsPresent {
    pub pointwise: bool,
    pub pairwise: bool,
    pub contrastive: bool,
    pub center: bool,
    pub quantization: bool,
}

/// Unweighted term values plus the weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pointwise: f64,
    pub pairwise: f64,
    pub contrastive: f64,
    pub center: f64,
    pub quantization: f64,
    pub total: f64,
    pub present: TermsPresent,
}

impl LossBreakdown {
    /// Recomputes the weighted total from the stored terms.
    pub fn compose(&self, spec: &LossSpec) -> f64 {
        let p = self.present;
        let term = |on: bool, w: f64, v: f64| if on { w * v } else { 0.0 };
        term(p.pointwise, spec.pointwise_weight, self.pointwise)
            + term(p.pairwise, spec.alpha, self.pairwise)
            + term(p.contrastive, spec.beta, self.contrastive)
            + term(p.center, spec.gamma, self.center)
            + term(p.quantization, spec.eta, self.quantization)
    }
}

/// Gradients of the weighted objective.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub codes: Array2<f64>,
    /// Rows aligned with `Partitions::unlabeled`.
    pub aug_codes: Option<Array2<f64>>,
    pub centers: Array2<f64>,
}

fn gather(codes: ArrayView2<f64>, rows: impl Iterator<Item = usize>) -> Array2<f64> {
    let idx: Vec<usize> = rows.collect();
    codes.select(Axis(0), &idx)
}

/// Computes every present term and the gradient of the weighted sum.
///
/// Terms whose partition is empty (or, for the center term, `m < 2`)
/// contribute nothing. `aug_codes` must be given when `unlabeled` is
/// nonempty, one row per unlabeled entry.
pub fn total_loss(
    codes: ArrayView2<f64>,
    aug_codes: Option<ArrayView2<f64>>,
    centers: ArrayView2<f64>,
    parts: &Partitions,
    spec: &LossSpec,
) -> Result<(LossBreakdown, LossGradients)> {
    let (z, k) = codes.dim();
    if z == 0 {
        return Err(Error::arg("empty batch"));
    }
    if centers.ncols() != k {
        return Err(Error::arg("code length differs from center width"));
    }
    let mut out = LossBreakdown::default();
    let mut g = LossGradients {
        codes: Array2::zeros((z, k)),
        aug_codes: None,
        centers: Array2::zeros(centers.dim()),
    };

    if !parts.clean.is_empty() {
        let sub = gather(codes, parts.clean.iter().map(|(i, _)| *i));
        let labels: Vec<Label> = parts.clean.iter().map(|(_, l)| l.clone()).collect();
        let (v, dc, dcent) = pointwise_loss_grad(sub.view(), &labels, centers)?;
        out.pointwise = v;
        out.present.pointwise = true;
        let w = spec.pointwise_weight;
        for (r, (i, _)) in parts.clean.iter().enumerate() {
            g.codes.row_mut(*i).scaled_add(w, &dc.row(r));
        }
        g.centers.scaled_add(w, &dcent);
    }

    if parts.corrected.len() >= 2 {
        let sub = gather(codes, parts.corrected.iter().map(|(i, _)| *i));
        let labels: Vec<Label> = parts.corrected.iter().map(|(_, l)| l.clone()).collect();
        let (v, dc) = pairwise_loss_grad(sub.view(), &labels, spec.normalization, spec.cosine)?;
        out.pairwise = v;
        out.present.pairwise = true;
        for (r, (i, _)) in parts.corrected.iter().enumerate() {
            g.codes.row_mut(*i).scaled_add(spec.alpha, &dc.row(r));
        }
    }

    if !parts.unlabeled.is_empty() {
        let aug = aug_codes.ok_or_else(|| Error::arg("unlabeled rows present but no augmented codes"))?;
        if aug.nrows() != parts.unlabeled.len() {
            return Err(Error::arg("augmented code rows differ from unlabeled count"));
        }
        let sub = gather(codes, parts.unlabeled.iter().copied());
        let (v, dc, da) = contrastive_loss_grad(sub.view(), aug, spec.eps_sim, spec.cosine)?;
        out.contrastive = v;
        out.present.contrastive = true;
        for (r, &i) in parts.unlabeled.iter().enumerate() {
            g.codes.row_mut(i).scaled_add(spec.beta, &dc.row(r));
        }
        g.aug_codes = Some(da * spec.beta);
    }

    if let Some((v, dcent)) = center_loss_grad(centers) {
        out.center = v;
        out.present.center = true;
        g.centers.scaled_add(spec.gamma, &dcent);
    }

    let (v, dc) = quantization_loss_grad(codes, spec.normalization);
    out.quantization = v;
    out.present.quantization = true;
    g.codes.scaled_add(spec.eta, &dc);

    out.total = out.compose(spec);
    Ok((out, g))
}

fn check_labels(labels: &[Label], rows: usize, m: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::arg("label count differs from code rows"));
    }
    if let Some(bad) = labels.iter().position(|l| l.len() != m) {
        return Err(Error::arg(format!("label {bad} has wrong width")));
    }
    Ok(())
}

/// Pointwise softmax-style loss pulling each code toward its positive
/// centers and away from the negatives, averaged over rows.
pub fn pointwise_loss(codes: ArrayView2<f64>, labels: &[Label], centers: ArrayView2<f64>) -> Result<f64> {
    pointwise_loss_grad(codes, labels, centers).map(|r| r.0)
}

pub fn pointwise_loss_grad(
    codes: ArrayView2<f64>,
    labels: &[Label],
    centers: ArrayView2<f64>,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    let (n, k) = codes.dim();
    let m = centers.nrows();
    check_labels(labels, n, m)?;
    let mut d_codes = Array2::zeros((n, k));
    let mut d_centers = Array2::zeros((m, k));
    if n == 0 {
        return Ok((0.0, d_codes, d_centers));
    }
    let inv_k = 1.0 / k as f64;
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    // logits s_j = b.c_j / k
    let logits = codes.dot(&centers.t()) * inv_k;
    let mut ds = vec![0.0; m];
    for (i, label) in labels.iter().enumerate() {
        let s = logits.row(i);
        let neg: Vec<usize> = label.negatives().collect();
        let neg_max = neg.iter().map(|&h| s[h]).fold(f64::NEG_INFINITY, f64::max);
        ds.iter_mut().for_each(|v| *v = 0.0);
        for j in label.positives() {
            let shift = s[j].max(neg_max);
            let pos_e = (s[j] - shift).exp();
            let neg_e: Vec<f64> = neg.iter().map(|&h| (s[h] - shift).exp()).collect();
            let denom = pos_e + neg_e.iter().sum::<f64>();
            // -log(pos / denom)
            total += denom.ln() - (s[j] - shift);
            ds[j] += pos_e / denom - 1.0;
            for (&h, e) in neg.iter().zip(&neg_e) {
                ds[h] += e / denom;
            }
        }
        let b = codes.row(i);
        for (j, &dsj) in ds.iter().enumerate() {
            if dsj == 0.0 {
                continue;
            }
            let scale = dsj * inv_k * inv_n;
            d_codes.row_mut(i).scaled_add(scale, &centers.row(j));
            d_centers.row_mut(j).scaled_add(scale, &b);
        }
    }
    Ok((total * inv_n, d_codes, d_centers))
}

/// Cosine of two vectors under the chosen mode, with gradients w.r.t. both.
fn cosine_grad(u: ArrayView1<f64>, v: ArrayView1<f64>, mode: CosineMode) -> (f64, Array1<f64>, Array1<f64>) {
    match mode {
        CosineMode::ScaledDot => {
            let inv_k = 1.0 / u.len() as f64;
            (u.dot(&v) * inv_k, &v * inv_k, &u * inv_k)
        }
        CosineMode::Normalized => {
            let nu = u.dot(&u).sqrt();
            let nv = v.dot(&v).sqrt();
            if nu == 0.0 || nv == 0.0 {
                return (0.0, Array1::zeros(u.len()), Array1::zeros(v.len()));
            }
            let c = u.dot(&v) / (nu * nv);
            let du = &v / (nu * nv) - &u * (c / (nu * nu));
            let dv = &u / (nu * nv) - &v * (c / (nv * nv));
            (c, du, dv)
        }
    }
}

pub fn cosine(u: ArrayView1<f64>, v: ArrayView1<f64>, mode: CosineMode) -> f64 {
    match mode {
        CosineMode::ScaledDot => u.dot(&v) / u.len() as f64,
        CosineMode::Normalized => {
            let den = u.dot(&u).sqrt() * v.dot(&v).sqrt();
            if den == 0.0 {
                0.0
            } else {
                u.dot(&v) / den
            }
        }
    }
}

/// Squared gap between code cosine and label similarity over all ordered
/// pairs (diagonal included).
pub fn pairwise_loss(codes: ArrayView2<f64>, labels: &[Label], norm: Normalization, mode: CosineMode) -> Result<f64> {
    pairwise_loss_grad(codes, labels, norm, mode).map(|r| r.0)
}

pub fn pairwise_loss_grad(
    codes: ArrayView2<f64>,
    labels: &[Label],
    norm: Normalization,
    mode: CosineMode,
) -> Result<(f64, Array2<f64>)> {
    let (n, k) = codes.dim();
    if labels.len() != n {
        return Err(Error::arg("label count differs from code rows"));
    }
    let mut grad = Array2::zeros((n, k));
    if n == 0 {
        return Ok((0.0, grad));
    }
    let scale = match norm {
        Normalization::PlainSum => 1.0,
        Normalization::BatchMean => 1.0 / (n * n) as f64,
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = label_similarity(&labels[i], &labels[j])? as f64;
            if i == j {
                // cos(b, b) is constant in b, so the diagonal carries no gradient.
                let c = cosine(codes.row(i), codes.row(i), mode);
                total += (c - s).powi(2);
                if mode == CosineMode::ScaledDot {
                    let coef = 2.0 * (c - s) * scale * 2.0 / k as f64;
                    grad.row_mut(i).scaled_add(coef, &codes.row(i));
                }
                continue;
            }
            let (c, du, dv) = cosine_grad(codes.row(i), codes.row(j), mode);
            let r = c - s;
            total += r * r;
            let coef = 2.0 * r * scale;
            grad.row_mut(i).scaled_add(coef, &du);
            grad.row_mut(j).scaled_add(coef, &dv);
        }
    }
    Ok((total * scale, grad))
}

/// Pulls each code toward its augmented view and caps cross-pair similarity
/// at `eps_sim`.
pub fn contrastive_loss(codes: ArrayView2<f64>, aug: ArrayView2<f64>, eps_sim: f64, mode: CosineMode) -> Result<f64> {
    contrastive_loss_grad(codes, aug, eps_sim, mode).map(|r| r.0)
}

pub fn contrastive_loss_grad(
    codes: ArrayView2<f64>,
    aug: ArrayView2<f64>,
    eps_sim: f64,
    mode: CosineMode,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    if codes.dim() != aug.dim() {
        return Err(Error::arg("original and augmented code shapes differ"));
    }
    let (n, k) = codes.dim();
    let mut d_codes = Array2::zeros((n, k));
    let mut d_aug = Array2::zeros((n, k));
    if n == 0 {
        return Ok((0.0, d_codes, d_aug));
    }
    let inv_n = 1.0 / n as f64;
    let inv_n2 = inv_n * inv_n;
    let mut self_term = 0.0;
    let mut cross_term = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (s, du, dv) = cosine_grad(codes.row(i), aug.row(j), mode);
            if i == j {
                self_term += 1.0 - s;
                d_codes.row_mut(i).scaled_add(-inv_n, &du);
                d_aug.row_mut(j).scaled_add(-inv_n, &dv);
            } else if s > eps_sim {
                cross_term += s - eps_sim;
                d_codes.row_mut(i).scaled_add(inv_n2, &du);
                d_aug.row_mut(j).scaled_add(inv_n2, &dv);
            }
        }
    }
    Ok((self_term * inv_n + cross_term * inv_n2, d_codes, d_aug))
}

/// Negative mean plus negative minimum of squared pairwise center distances.
/// `None` when fewer than two centers exist.
pub fn center_loss(centers: ArrayView2<f64>) -> Option<f64> {
    center_loss_grad(centers).map(|r| r.0)
}

pub fn center_loss_grad(centers: ArrayView2<f64>) -> Option<(f64, Array2<f64>)> {
    let m = centers.nrows();
    if m < 2 {
        return None;
    }
    let pairs = m * (m - 1) / 2;
    let mut sum = 0.0;
    let mut min = (f64::INFINITY, 0, 0);
    for i in 0..m {
        for j in i + 1..m {
            let diff = &centers.row(i) - &centers.row(j);
            let d = diff.dot(&diff);
            sum += d;
            if d < min.0 {
                min = (d, i, j);
            }
        }
    }
    let mut grad = Array2::zeros(centers.dim());
    let inv_p = 1.0 / pairs as f64;
    // d/dc_i of -mean: -(2/P) sum_j (c_i - c_j) = -(2/P) (m c_i - sum_j c_j)
    let col_sum = centers.sum_axis(Axis(0));
    for i in 0..m {
        let g = (&centers.row(i) * m as f64 - &col_sum) * (-2.0 * inv_p);
        grad.row_mut(i).assign(&g);
    }
    let (_, a, b) = min;
    let diff = &centers.row(a) - &centers.row(b);
    grad.row_mut(a).scaled_add(-2.0, &diff);
    grad.row_mut(b).scaled_add(2.0, &diff);
    Some((-sum * inv_p - min.0, grad))
}

/// Squared distance between relaxed codes and their signs. The sign is held
/// constant for differentiation.
pub fn quantization_loss(codes: ArrayView2<f64>, norm: Normalization) -> f64 {
    quantization_loss_grad(codes, norm).0
}

pub fn quantization_loss_grad(codes: ArrayView2<f64>, norm: Normalization) -> (f64, Array2<f64>) {
    let n = codes.nrows();
    let scale = match norm {
        Normalization::PlainSum => 1.0,
        Normalization::BatchMean if n > 0 => 1.0 / n as f64,
        Normalization::BatchMean => 0.0,
    };
    let diff = codes.mapv(|v| v - sign(v));
    let value = diff.iter().map(|d| d * d).sum::<f64>() * scale;
    (value, diff * (2.0 * scale))
}

/// Per-column population standard deviation.
pub fn column_std(features: ArrayView2<f64>) -> Array1<f64> {
    if features.nrows() == 0 {
        return Array1::zeros(features.ncols());
    }
    features.std_axis(Axis(0), 0.0)
}

/// Feature-space augmentation for one modality: additive Gaussian noise with
/// per-dimension std `sigma * batch_std[d]`, then independent zeroing with
/// probability `p_mask`.
pub fn augment_modality<R: Rng + ?Sized>(
    features: ArrayView2<f64>,
    batch_std: ArrayView1<f64>,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Array2<f64> {
    let mut out = features.to_owned();
    for mut row in out.rows_mut() {
        for (v, &sd) in row.iter_mut().zip(batch_std.iter()) {
            if cfg.sigma > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                *v += cfg.sigma * sd * z;
            }
            if cfg.p_mask > 0.0 && rng.random::<f64>() < cfg.p_mask {
                *v = 0.0;
            }
        }
    }
    out
}

/// Augments both modalities of a set of instances.
pub fn augment<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    x_std: ArrayView1<f64>,
    y_std: ArrayView1<f64>,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> (Array2<f64>, Array2<f64>) {
    let xa = augment_modality(x, x_std, cfg, rng);
    let ya = augment_modality(y, y_std, cfg, rng);
    (xa, ya)
}
