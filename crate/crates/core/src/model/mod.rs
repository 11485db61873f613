//! The two-branch hashing network.
//!
//! Each modality passes through `Linear -> ReLU -> Linear`; the branch
//! outputs are summed and mapped by one affine layer plus `tanh` to a relaxed
//! code in `(-1, 1)^k`. The learnable category centers live alongside the
//! network weights so that one parameter set covers everything the optimizer
//! touches. Gradients are derived by hand for this fixed architecture.

mod checkpoint;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::losses::{total_loss, LossBreakdown, LossSpec, Partitions};
use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};

/// `sgn` with the tie rule `sgn(0) = +1`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Network and center dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_x: usize,
    pub d_y: usize,
    /// Width of the first projection layer.
    pub hidden: usize,
    /// Width of the shared space the branches are summed in.
    pub fusion: usize,
    /// Code length `k`.
    pub code_len: usize,
    /// Number of categories `m`.
    pub categories: usize,
}

impl ModelConfig {
    pub fn new(d_x: usize, d_y: usize, code_len: usize, categories: usize) -> Self {
        ModelConfig {
            d_x,
            d_y,
            hidden: 256,
            fusion: 128,
            code_len,
            categories,
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = [
            self.d_x,
            self.d_y,
            self.hidden,
            self.fusion,
            self.code_len,
            self.categories,
        ];
        if dims.contains(&0) {
            return Err(Error::arg(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// One modality's MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Branch {
    fn zeros(d: usize, h: usize, p: usize) -> Self {
        Branch {
            w1: Array2::zeros((d, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, p)),
            b2: Array1::zeros(p),
        }
    }
}

/// Every trainable array. Used both for parameters and for their gradients,
/// which share shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub text: Branch,
    pub image: Branch,
    pub hash_w: Array2<f64>,
    pub hash_b: Array1<f64>,
    /// Category centers, one row per category.
    pub centers: Array2<f64>,
}

pub type ModelParams = ParamSet;
pub type GradientSet = ParamSet;

fn uniform_fill<R: Rng>(a: &mut [f64], bound: f64, rng: &mut R) {
    for v in a {
        *v = rng.random_range(-bound..=bound);
    }
}

impl ParamSet {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        ParamSet {
            text: Branch::zeros(cfg.d_x, cfg.hidden, cfg.fusion),
            image: Branch::zeros(cfg.d_y, cfg.hidden, cfg.fusion),
            hash_w: Array2::zeros((cfg.fusion, cfg.code_len)),
            hash_b: Array1::zeros(cfg.code_len),
            centers: Array2::zeros((cfg.categories, cfg.code_len)),
        }
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)`; centers uniform in `[-1, 1]`.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut p = Self::zeros(cfg);
        let mut rng = stream_rng(seed, stream::INIT);
        for br in [&mut p.text, &mut p.image] {
            let b = 1.0 / (br.w1.nrows() as f64).sqrt();
            uniform_fill(br.w1.as_slice_mut().unwrap(), b, &mut rng);
            uniform_fill(br.b1.as_slice_mut().unwrap(), b, &mut rng);
            let b = 1.0 / (br.w2.nrows() as f64).sqrt();
            uniform_fill(br.w2.as_slice_mut().unwrap(), b, &mut rng);
            uniform_fill(br.b2.as_slice_mut().unwrap(), b, &mut rng);
        }
        let b = 1.0 / (cfg.fusion as f64).sqrt();
        uniform_fill(p.hash_w.as_slice_mut().unwrap(), b, &mut rng);
        uniform_fill(p.hash_b.as_slice_mut().unwrap(), b, &mut rng);
        uniform_fill(p.centers.as_slice_mut().unwrap(), 1.0, &mut rng);
        Ok(p)
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            d_x: self.text.w1.nrows(),
            d_y: self.image.w1.nrows(),
            hidden: self.text.w1.ncols(),
            fusion: self.text.w2.ncols(),
            code_len: self.hash_w.ncols(),
            categories: self.centers.nrows(),
        }
    }

    /// Every array in declaration order, as flat row-major slices.
    pub fn slices(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("text.w1", self.text.w1.as_slice().unwrap()),
            ("text.b1", self.text.b1.as_slice().unwrap()),
            ("text.w2", self.text.w2.as_slice().unwrap()),
            ("text.b2", self.text.b2.as_slice().unwrap()),
            ("image.w1", self.image.w1.as_slice().unwrap()),
            ("image.b1", self.image.b1.as_slice().unwrap()),
            ("image.w2", self.image.w2.as_slice().unwrap()),
            ("image.b2", self.image.b2.as_slice().unwrap()),
            ("hash_w", self.hash_w.as_slice().unwrap()),
            ("hash_b", self.hash_b.as_slice().unwrap()),
            ("centers", self.centers.as_slice().unwrap()),
        ]
    }

    /// Mutable counterpart of [`ParamSet::slices`].
    pub fn slices_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("text.w1", self.text.w1.as_slice_mut().unwrap()),
            ("text.b1", self.text.b1.as_slice_mut().unwrap()),
            ("text.w2", self.text.w2.as_slice_mut().unwrap()),
            ("text.b2", self.text.b2.as_slice_mut().unwrap()),
            ("image.w1", self.image.w1.as_slice_mut().unwrap()),
            ("image.b1", self.image.b1.as_slice_mut().unwrap()),
            ("image.w2", self.image.w2.as_slice_mut().unwrap()),
            ("image.b2", self.image.b2.as_slice_mut().unwrap()),
            ("hash_w", self.hash_w.as_slice_mut().unwrap()),
            ("hash_b", self.hash_b.as_slice_mut().unwrap()),
            ("centers", self.centers.as_slice_mut().unwrap()),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|(_, s)| s.iter().all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|(_, s)| s.len()).sum()
    }
}

/// Relaxed code, entries in `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCode(pub Vec<f64>);

/// Binary code, entries exactly `+-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode(pub Vec<i8>);

impl BinaryCode {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_reals(&self) -> Vec<f64> {
        self.0.iter().map(|&b| b as f64).collect()
    }
}

pub fn binarize(code: &[f64]) -> BinaryCode {
    BinaryCode(code.iter().map(|&v| sign(v) as i8).collect())
}

/// Intermediate activations of a batched forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Array2<f64>,
    y: Array2<f64>,
    text_pre: Array2<f64>,
    image_pre: Array2<f64>,
    fused: Array2<f64>,
    /// Relaxed codes, one row per instance.
    pub codes: Array2<f64>,
}

fn check_input(a: ArrayView2<f64>, d: usize, what: &str) -> Result<()> {
    if a.ncols() != d {
        return Err(Error::arg(format!(
            "{what} features have dimension {}, model expects {d}",
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg(format!("non-finite {what} feature")));
    }
    Ok(())
}

fn branch_forward(br: &Branch, x: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let pre = x.dot(&br.w1) + &br.b1;
    let act = pre.mapv(|v| v.max(0.0));
    let out = act.dot(&br.w2) + &br.b2;
    (pre, out)
}

/// Batched forward pass; rows of `x` and `y` are paired instances.
pub fn forward_batch(params: &ModelParams, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<ForwardCache> {
    let cfg = params.config();
    check_input(x, cfg.d_x, "x")?;
    check_input(y, cfg.d_y, "y")?;
    if x.nrows() != y.nrows() {
        return Err(Error::arg("x and y batches differ in row count"));
    }
    let (text_pre, ux) = branch_forward(&params.text, x);
    let (image_pre, uy) = branch_forward(&params.image, y);
    let fused = ux + uy;
    let codes = (fused.dot(&params.hash_w) + &params.hash_b).mapv(f64::tanh);
    Ok(ForwardCache {
        x: x.to_owned(),
        y: y.to_owned(),
        text_pre,
        image_pre,
        fused,
        codes,
    })
}

/// Relaxed code for a single instance.
pub fn forward(params: &ModelParams, x: &[f64], y: &[f64]) -> Result<RealCode> {
    let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::arg(e.to_string()))?;
    let yv = ArrayView2::from_shape((1, y.len()), y).map_err(|e| Error::arg(e.to_string()))?;
    let cache = forward_batch(params, xv, yv)?;
    Ok(RealCode(cache.codes.row(0).to_vec()))
}

/// Out-of-sample hashing: `sgn(forward(x, y))`. Labels are never consulted.
pub fn hash_unseen(params: &ModelParams, x: &[f64], y: &[f64]) -> Result<BinaryCode> {
    forward(params, x, y).map(|c| binarize(&c.0))
}

fn branch_backward(br: &Branch, g: &mut Branch, input: &Array2<f64>, pre: &Array2<f64>, d_out: &Array2<f64>) {
    let act = pre.mapv(|v| v.max(0.0));
    g.w2 += &act.t().dot(d_out);
    g.b2 += &d_out.sum_axis(Axis(0));
    let mut d_pre = d_out.dot(&br.w2.t());
    d_pre.zip_mut_with(pre, |d, &p| {
        if p <= 0.0 {
            *d = 0.0
        }
    });
    g.w1 += &input.t().dot(&d_pre);
    g.b1 += &d_pre.sum_axis(Axis(0));
}

/// Accumulates `dL/dparams` into `grads` given `dL/dcodes` for a cached pass.
pub fn backprop(params: &ModelParams, cache: &ForwardCache, d_codes: &Array2<f64>, grads: &mut GradientSet) {
    let mut d_pre = d_codes.clone();
    d_pre.zip_mut_with(&cache.codes, |d, &c| *d *= 1.0 - c * c);
    grads.hash_w += &cache.fused.t().dot(&d_pre);
    grads.hash_b += &d_pre.sum_axis(Axis(0));
    let d_fused = d_pre.dot(&params.hash_w.t());
    branch_backward(&params.text, &mut grads.text, &cache.x, &cache.text_pre, &d_fused);
    branch_backward(&params.image, &mut grads.image, &cache.y, &cache.image_pre, &d_fused);
}

/// A batch routed through the objective.
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub partitions: Partitions,
    /// Augmented `(x, y)` rows, aligned with `partitions.unlabeled`.
    pub augmented: Option<(Array2<f64>, Array2<f64>)>,
}

/// Loss and analytic gradients of the weighted objective for one batch.
pub fn backward(params: &ModelParams, batch: &Batch, spec: &LossSpec) -> Result<(LossBreakdown, GradientSet)> {
    if batch.x.nrows() == 0 {
        return Err(Error::arg("empty batch"));
    }
    let cache = forward_batch(params, batch.x.view(), batch.y.view())?;
    backward_cached(params, &cache, batch, spec)
}

/// [`backward`] reusing a forward pass of `batch.x`, `batch.y` under `params`.
pub fn backward_cached(
    params: &ModelParams,
    cache: &ForwardCache,
    batch: &Batch,
    spec: &LossSpec,
) -> Result<(LossBreakdown, GradientSet)> {
    if cache.codes.nrows() != batch.x.nrows() {
        return Err(Error::arg("forward cache does not match batch"));
    }
    let aug_cache = match (&batch.augmented, batch.partitions.unlabeled.is_empty()) {
        (_, true) => None,
        (Some((ax, ay)), false) => Some(forward_batch(params, ax.view(), ay.view())?),
        (None, false) => return Err(Error::arg("unlabeled rows need augmented features")),
    };
    let (breakdown, lg) = total_loss(
        cache.codes.view(),
        aug_cache.as_ref().map(|c| c.codes.view()),
        params.centers.view(),
        &batch.partitions,
        spec,
    )?;
    let mut grads = ParamSet::zeros(&params.config());
    backprop(params, cache, &lg.codes, &mut grads);
    if let (Some(c), Some(d)) = (&aug_cache, &lg.aug_codes) {
        backprop(params, c, d, &mut grads);
    }
    grads.centers += &lg.centers;
    if !breakdown.total.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {breakdown:?}")));
    }
    Ok((breakdown, grads))
}

/// `p <- p - lr * g` for every array, then centers clamped into `[-1, 1]`.
pub fn sgd_step(params: &mut ModelParams, grads: &GradientSet, lr: f64) -> Result<()> {
    if params.config() != grads.config() {
        return Err(Error::arg("gradient shapes do not match parameters"));
    }
    if let Some((name, _)) = grads
        .slices()
        .into_iter()
        .find(|(_, s)| s.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Numeric(format!("non-finite gradient in {name}")));
    }
    let g = grads.slices();
    for ((_, p), (_, g)) in params.slices_mut().into_iter().zip(g) {
        for (pv, gv) in p.iter_mut().zip(g) {
            *pv -= lr * gv;
        }
    }
    params.centers.mapv_inplace(|c| c.clamp(-1.0, 1.0));
    Ok(())
}

/// Converts `f32` features of the given rows into a dense `f64` matrix pair.
pub fn feature_matrices(ds: &crate::dataset::Dataset, rows: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((rows.len(), ds.d_x));
    let mut y = Array2::zeros((rows.len(), ds.d_y));
    for (r, &i) in rows.iter().enumerate() {
        let o = &ds.instances[i];
        x.row_mut(r).iter_mut().zip(&o.x).for_each(|(d, &s)| *d = s as f64);
        y.row_mut(r).iter_mut().zip(&o.y).for_each(|(d, &s)| *d = s as f64);
    }
    (x, y)
}

/// Relaxed codes for an entire dataset, evaluated in fixed-size chunks.
pub fn encode_dataset(params: &ModelParams, ds: &crate::dataset::Dataset) -> Result<Array2<f64>> {
    let cfg = params.config();
    if ds.d_x != cfg.d_x || ds.d_y != cfg.d_y {
        return Err(Error::arg(format!(
            "dataset dims (d_x={}, d_y={}) do not match model (d_x={}, d_y={})",
            ds.d_x, ds.d_y, cfg.d_x, cfg.d_y
        )));
    }
    let mut out = Array2::zeros((ds.len(), cfg.code_len));
    let rows: Vec<usize> = (0..ds.len()).collect();
    for chunk in rows.chunks(512) {
        let (x, y) = feature_matrices(ds, chunk);
        let cache = forward_batch(params, x.view(), y.view())?;
        out.slice_mut(ndarray::s![chunk[0]..chunk[0] + chunk.len(), ..])
            .assign(&cache.codes);
    }
    Ok(out)
}

/// Binary codes for an entire dataset.
pub fn hash_dataset(params: &ModelParams, ds: &crate::dataset::Dataset) -> Result<Vec<BinaryCode>> {
    let codes = encode_dataset(params, ds)?;
    Ok(codes
        .rows()
        .into_iter()
        .map(|r| binarize(r.as_slice().unwrap()))
        .collect())
}
