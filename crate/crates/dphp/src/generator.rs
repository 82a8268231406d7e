//! Conditional feedforward generator trained on privatized mean embeddings.
//!
//! The generator maps `[latent noise ; one-hot label]` through fully
//! connected layers to the encoded data space. Training minimizes the
//! weighted feature-space distance between the (noisy) data embeddings and
//! the embedding of each generated batch; the data itself is never touched
//! after the embeddings are released, so the privacy cost is paid exactly
//! once per release.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Tape};
use crate::embedding::{
    mean_embedding_single, EmbeddingPart, GammaTarget, LabeledMeanEmbedding,
};
use crate::error::{Error, Result};
use crate::featuremaps::{
    subsample_dims, FeatureMapSpec, ProductMapSpec, RffSpec, SumMapSpec,
};
use crate::hermite::{median_heuristic, rho_from_length_scale, HermiteBasis, RHO_MAX, RHO_MIN};
use crate::privacy::{
    calibrate_sigma, compose_product_releases, privatize, release_class_frequencies,
    sensitivity_bound, split_budget, CalibrationMethod, NoiseCalibration, PrivacyBudget,
    PrivacyReport,
};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

/// Decoder applied to one block of generator outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Identity,
    /// For data normalized to [0, 1].
    Sigmoid,
    /// Over a one-hot categorical block.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputBlock {
    pub decoder: Decoder,
    pub width: usize,
}

/// Architecture of the generator network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorArch {
    pub latent_dim: usize,
    pub class_count: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_blocks: Vec<OutputBlock>,
}

impl GeneratorArch {
    pub fn output_dim(&self) -> usize {
        self.output_blocks.iter().map(|b| b.width).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.class_count == 0 {
            return Err(Error::invalid(
                "latent dimension and class count must be positive",
            ));
        }
        if self.output_blocks.is_empty() || self.output_blocks.iter().any(|b| b.width == 0) {
            return Err(Error::invalid("output blocks must be non-empty"));
        }
        Ok(())
    }
}

/// Weights, biases, and decoding scheme of a trained generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorModel {
    pub arch: GeneratorArch,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array2<f64>>,
    init_seed: u64,
}

impl GeneratorModel {
    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array2<f64>] {
        &self.biases
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let expected: usize = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum();
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for v in w.iter_mut() {
                *v = *it.next().unwrap();
            }
            for v in b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Record the full forward computation on a tape. `input` must already
    /// be the `[latent ; one-hot-label]` concatenation. Returns the decoded
    /// output node and the parameter node ids in `[w0, b0, w1, b1, …]` order.
    pub fn build_graph(&self, tape: &mut Tape, input: NodeId) -> Result<(NodeId, Vec<NodeId>)> {
        let mut params = Vec::with_capacity(self.weights.len() * 2);
        let mut current = input;
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wid = tape.param(w.clone());
            let bid = tape.param(b.clone());
            params.push(wid);
            params.push(bid);
            current = tape.affine(current, wid, bid)?;
            if i < last {
                current = match self.arch.activation {
                    Activation::Relu => tape.relu(current)?,
                    Activation::Tanh => tape.tanh(current)?,
                };
            }
        }
        // Per-block output decoding.
        let mut decoded = Vec::with_capacity(self.arch.output_blocks.len());
        let mut offset = 0;
        for block in &self.arch.output_blocks {
            let slice = tape.slice_cols(current, offset, block.width)?;
            let out = match block.decoder {
                Decoder::Identity => slice,
                Decoder::Sigmoid => tape.sigmoid(slice)?,
                Decoder::Softmax => tape.softmax(slice)?,
            };
            decoded.push(out);
            offset += block.width;
        }
        let output = if decoded.len() == 1 {
            decoded[0]
        } else {
            tape.concat_cols(&decoded)?
        };
        Ok((output, params))
    }
}

/// Glorot-uniform weights (bound √(6/(fan_in+fan_out))), zero biases.
pub fn init_generator(arch: &GeneratorArch, seed: u64) -> Result<GeneratorModel> {
    arch.validate()?;
    let mut rng = substream(seed, Stream::Init, 0);
    let mut widths = vec![arch.latent_dim + arch.class_count];
    widths.extend(&arch.hidden);
    widths.push(arch.output_dim());
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
        weights.push(w);
        biases.push(Array2::zeros((1, fan_out)));
    }
    Ok(GeneratorModel {
        arch: arch.clone(),
        weights,
        biases,
        init_seed: seed,
    })
}

fn one_hot_matrix(labels: &[usize], num_classes: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((labels.len(), num_classes));
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::invalid(format!(
                "label {y} out of range for {num_classes} classes"
            )));
        }
        out[[i, y]] = 1.0;
    }
    Ok(out)
}

/// Decoded generator outputs for a latent batch and labels.
pub fn forward(
    model: &GeneratorModel,
    latent: ArrayView2<'_, f64>,
    labels: &[usize],
) -> Result<Array2<f64>> {
    if latent.ncols() != model.arch.latent_dim {
        return Err(Error::DimensionMismatch {
            expected: model.arch.latent_dim,
            got: latent.ncols(),
        });
    }
    if latent.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: latent.nrows(),
            got: labels.len(),
        });
    }
    let onehot = one_hot_matrix(labels, model.arch.class_count)?;
    let mut joined = Array2::zeros((latent.nrows(), latent.ncols() + model.arch.class_count));
    joined
        .slice_mut(ndarray::s![.., ..latent.ncols()])
        .assign(&latent);
    joined
        .slice_mut(ndarray::s![.., latent.ncols()..])
        .assign(&onehot);
    let mut tape = Tape::new();
    let input = tape.input(joined);
    let (out, _) = model.build_graph(&mut tape, input)?;
    Ok(tape.value(out).to_owned())
}

/// Where the ρ of the eigenfunction bases comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum RhoSource {
    /// Median pairwise distance of normalized training data, with a cap on
    /// the number of pairs examined.
    Median { max_pairs: usize },
    LengthScale(f64),
    Rho(f64),
}

impl Default for RhoSource {
    fn default() -> Self {
        RhoSource::Median { max_pairs: 100_000 }
    }
}

/// Per-coordinate length scale of the sum-kernel blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKernelScale {
    /// Use the global length scale on each coordinate.
    #[default]
    Global,
    /// Use l/√D per coordinate (the AM-GM upper-bound form).
    AmGm,
}

/// Which feature family the trainer matches embeddings under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureFamily {
    /// Combined sum + product eigenfunction features.
    Hermite,
    /// Random Fourier baseline with the given (even) feature count.
    RandomFourier { num_features: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PrivacySetting {
    NonPrivate,
    Private {
        epsilon: f64,
        delta: f64,
        split_fraction: f64,
    },
}

impl PrivacySetting {
    pub fn is_private(&self) -> bool {
        matches!(self, PrivacySetting::Private { .. })
    }
}

/// How generated labels are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LabelSampling {
    Uniform,
    /// Exact empirical class frequencies; leaks counts, so non-private only.
    Empirical,
    /// Noisy class frequencies bought with this fraction of the sum-part ε.
    Privatized { budget_fraction: f64 },
}

/// Normalization bounds for the encoded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "bounds")]
pub enum BoundsSource {
    /// Min–max from the training data; free only without privacy.
    FromData,
    /// A-priori per-feature (min, max); required in private mode.
    Explicit(Vec<(f64, f64)>),
}

/// Everything the training loop needs beyond the data itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: GeneratorArch,
    pub epochs: usize,
    /// Generated-batch size per step = round(batch_rate · m); steps per
    /// epoch = ceil(1/batch_rate).
    pub batch_rate: f64,
    pub learning_rate: f64,
    pub gamma: f64,
    pub gamma_target: GammaTarget,
    pub order_sum: usize,
    pub order_prod: usize,
    pub prod_dims: usize,
    pub rho_source: RhoSource,
    pub sum_kernel_scale: SumKernelScale,
    /// Redraw the product-kernel coordinates at the start of every epoch.
    /// With all coordinates selected there is nothing to redraw and the
    /// product embedding is released once.
    pub resubsample_every_epoch: bool,
    pub feature_family: FeatureFamily,
    pub privacy: PrivacySetting,
    pub bounds: BoundsSource,
    pub label_sampling: LabelSampling,
    pub seed: u64,
    /// Diagnostics only: force every noise multiplier to this value while
    /// keeping the private code path (draw counts, report shape) intact.
    pub noise_scale_override: Option<f64>,
}

impl TrainConfig {
    /// Reasonable defaults for a small dense generator; callers override
    /// the fields the experiment pins down.
    pub fn new(arch: GeneratorArch) -> Self {
        TrainConfig {
            arch,
            epochs: 10,
            batch_rate: 0.1,
            learning_rate: 0.01,
            gamma: 1.0,
            gamma_target: GammaTarget::Product,
            order_sum: 25,
            order_prod: 25,
            prod_dims: 2,
            rho_source: RhoSource::default(),
            sum_kernel_scale: SumKernelScale::Global,
            resubsample_every_epoch: true,
            feature_family: FeatureFamily::Hermite,
            privacy: PrivacySetting::NonPrivate,
            bounds: BoundsSource::FromData,
            label_sampling: LabelSampling::Uniform,
            seed: 0,
            noise_scale_override: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub subsampled_dims: Vec<usize>,
    pub mean_loss: f64,
}

/// Everything a run produces besides the model itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub input_dim: usize,
    pub num_classes: usize,
    pub sample_count: usize,
    pub feature_family: String,
    pub length_scale: f64,
    pub rho_sum: Option<f64>,
    pub rho_prod: Option<f64>,
    pub feature_len_sum: usize,
    pub feature_len_product: usize,
    pub feature_len_total: usize,
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    pub bounds: Vec<(f64, f64)>,
    pub label_probs: Vec<f64>,
    pub privacy: Option<PrivacyReport>,
    pub epochs: Vec<EpochReport>,
    pub final_loss: f64,
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: usize,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(shapes: &[(usize, usize)], lr: f64) -> Self {
        Adam {
            m: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            v: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(&mut self.v))
        {
            m.zip_mut_with(grad, |mi, &g| *mi = Self::BETA1 * *mi + (1.0 - Self::BETA1) * g);
            v.zip_mut_with(grad, |vi, &g| {
                *vi = Self::BETA2 * *vi + (1.0 - Self::BETA2) * g * g
            });
            ndarray::Zip::from(&mut **param)
                .and(&*m)
                .and(&*v)
                .for_each(|p, &mi, &vi| {
                    *p -= self.lr * (mi / bc1) / ((vi / bc2).sqrt() + Self::EPS);
                });
        }
    }
}

/// Min–max bounds per feature; zero-width features map to 0.5.
fn resolve_bounds(data: ArrayView2<'_, f64>, config: &TrainConfig) -> Result<Vec<(f64, f64)>> {
    match &config.bounds {
        BoundsSource::Explicit(b) => {
            if b.len() != data.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: data.ncols(),
                    got: b.len(),
                });
            }
            for &(lo, hi) in b {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(Error::invalid(format!("invalid feature bounds ({lo}, {hi})")));
                }
            }
            Ok(b.clone())
        }
        BoundsSource::FromData => {
            if config.privacy.is_private() {
                return Err(Error::invalid(
                    "private training requires a-priori feature bounds; \
                     data-derived bounds would leak",
                ));
            }
            let mut bounds = Vec::with_capacity(data.ncols());
            for col in data.columns() {
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                bounds.push(if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) });
            }
            Ok(bounds)
        }
    }
}

fn normalize(data: ArrayView2<'_, f64>, bounds: &[(f64, f64)]) -> Array2<f64> {
    let mut out = data.to_owned();
    for (mut col, &(lo, hi)) in out.columns_mut().into_iter().zip(bounds) {
        let width = hi - lo;
        col.mapv_inplace(|v| ((v - lo) / width).clamp(0.0, 1.0));
    }
    out
}

/// Map normalized features back to the original ranges.
pub fn denormalize(data: ArrayView2<'_, f64>, bounds: &[(f64, f64)]) -> Result<Array2<f64>> {
    if data.ncols() != bounds.len() {
        return Err(Error::DimensionMismatch {
            expected: bounds.len(),
            got: data.ncols(),
        });
    }
    let mut out = data.to_owned();
    for (mut col, &(lo, hi)) in out.columns_mut().into_iter().zip(bounds) {
        col.mapv_inplace(|v| lo + v * (hi - lo));
    }
    Ok(out)
}

fn sample_label<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

struct HermiteSpecs {
    sum: SumMapSpec,
    rho_sum: f64,
    prod_basis: HermiteBasis,
    rho_prod: f64,
}

fn build_hermite_specs(
    length_scale: f64,
    input_dim: usize,
    config: &TrainConfig,
) -> Result<HermiteSpecs> {
    let sum_scale = match config.sum_kernel_scale {
        SumKernelScale::Global => length_scale,
        SumKernelScale::AmGm => length_scale / (input_dim as f64).sqrt(),
    };
    let rho_sum = rho_from_length_scale(sum_scale)?.clamp(RHO_MIN, RHO_MAX);
    let rho_prod = rho_from_length_scale(length_scale)?.clamp(RHO_MIN, RHO_MAX);
    Ok(HermiteSpecs {
        sum: SumMapSpec::shared(HermiteBasis::new(rho_sum, config.order_sum)?, input_dim)?,
        rho_sum,
        prod_basis: HermiteBasis::new(rho_prod, config.order_prod)?,
        rho_prod,
    })
}

/// Train a generator against the (optionally privatized) mean embeddings of
/// `data`. Fully deterministic given `(data, labels, config)`.
pub fn train(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<(GeneratorModel, RunReport)> {
    let m = data.nrows();
    if m == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: labels.len(),
        });
    }
    if !(config.batch_rate > 0.0 && config.batch_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "batch rate must lie in (0, 1], got {}",
            config.batch_rate
        )));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("need at least one epoch"));
    }
    let input_dim = data.ncols();
    if config.arch.output_dim() != input_dim {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            got: config.arch.output_dim(),
        });
    }
    if config.arch.class_count != num_classes {
        return Err(Error::DimensionMismatch {
            expected: num_classes,
            got: config.arch.class_count,
        });
    }

    let bounds = resolve_bounds(data, config)?;
    let normalized = normalize(data, &bounds);

    let length_scale = match config.rho_source {
        RhoSource::Median { max_pairs } => {
            let mut rng = substream(config.seed, Stream::Eval, 0);
            median_heuristic(normalized.view(), max_pairs, &mut rng)?
        }
        RhoSource::LengthScale(l) => l,
        RhoSource::Rho(rho) => crate::hermite::length_scale_from_rho(rho)?,
    };

    // Label sampler.
    let label_fraction = match &config.label_sampling {
        LabelSampling::Privatized { budget_fraction } => {
            if !config.privacy.is_private() {
                return Err(Error::invalid(
                    "privatized label sampling requires a privacy budget",
                ));
            }
            if !(*budget_fraction > 0.0 && *budget_fraction < 1.0) {
                return Err(Error::invalid(
                    "label budget fraction must lie strictly inside (0, 1)",
                ));
            }
            *budget_fraction
        }
        LabelSampling::Empirical => {
            if config.privacy.is_private() {
                return Err(Error::invalid(
                    "empirical label frequencies leak counts; use uniform or privatized",
                ));
            }
            0.0
        }
        LabelSampling::Uniform => 0.0,
    };

    match config.feature_family {
        FeatureFamily::Hermite => train_hermite(
            normalized.view(),
            labels,
            num_classes,
            config,
            length_scale,
            bounds,
            label_fraction,
        ),
        FeatureFamily::RandomFourier { num_features } => train_rff(
            normalized.view(),
            labels,
            num_classes,
            config,
            length_scale,
            bounds,
            num_features,
            label_fraction,
        ),
    }
}

struct LoopPlan {
    batch_size: usize,
    steps_per_epoch: usize,
}

fn loop_plan(m: usize, config: &TrainConfig) -> LoopPlan {
    let batch_size = ((config.batch_rate * m as f64).round() as usize).max(1);
    let steps_per_epoch = (1.0 / config.batch_rate).ceil() as usize;
    LoopPlan {
        batch_size,
        steps_per_epoch,
    }
}

fn resolve_label_probs<R: Rng>(
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
    label_budget: Option<(f64, f64)>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match &config.label_sampling {
        LabelSampling::Uniform => Ok(vec![1.0 / num_classes as f64; num_classes]),
        LabelSampling::Empirical => {
            let mut probs = vec![0.0; num_classes];
            for &y in labels {
                probs[y] += 1.0 / labels.len() as f64;
            }
            Ok(probs)
        }
        LabelSampling::Privatized { .. } => {
            let (eps, delta) = label_budget.expect("budget checked earlier");
            release_class_frequencies(labels, num_classes, eps, delta, rng)
        }
    }
}

fn maybe_override(calib: NoiseCalibration, config: &TrainConfig) -> NoiseCalibration {
    match config.noise_scale_override {
        Some(sigma) => NoiseCalibration { sigma, ..calib },
        None => calib,
    }
}

#[allow(clippy::too_many_arguments)]
fn train_hermite(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
    length_scale: f64,
    bounds: Vec<(f64, f64)>,
    label_fraction: f64,
) -> Result<(GeneratorModel, RunReport)> {
    let m = data.nrows();
    let input_dim = data.ncols();
    if config.prod_dims == 0 || config.prod_dims > input_dim {
        return Err(Error::invalid(format!(
            "prod_dims {} out of range for {input_dim} input dimensions",
            config.prod_dims
        )));
    }
    let specs = build_hermite_specs(length_scale, input_dim, config)?;
    let sensitivity = sensitivity_bound(m, EmbeddingPart::Sum)?;

    // The product embedding is released once when the coordinate set can
    // never change, otherwise once per epoch.
    let resubsample = config.resubsample_every_epoch && config.prod_dims < input_dim;
    let product_releases = if resubsample { config.epochs } else { 1 };

    let (sum_calib, prod_calib, privacy_report, label_budget) = match &config.privacy {
        PrivacySetting::NonPrivate => (
            NoiseCalibration::noiseless(),
            NoiseCalibration::noiseless(),
            None,
            None,
        ),
        PrivacySetting::Private {
            epsilon,
            delta,
            split_fraction,
        } => {
            let budget = PrivacyBudget::new(*epsilon, *delta, *split_fraction, product_releases)?;
            let ((eps1, delta1), (eps2, delta2)) = split_budget(&budget);
            // The optional label release spends a slice of the sum share.
            let (label_budget, eps1, delta1) = if label_fraction > 0.0 {
                (
                    Some((eps1 * label_fraction, delta1 * label_fraction)),
                    eps1 * (1.0 - label_fraction),
                    delta1 * (1.0 - label_fraction),
                )
            } else {
                (None, eps1, delta1)
            };
            let sum_calib = maybe_override(
                calibrate_sigma(eps1, delta1, CalibrationMethod::Analytic)?,
                config,
            )
            .with_sensitivity(sensitivity)?;
            let prod_calib = maybe_override(
                compose_product_releases(product_releases, eps2, delta2)?,
                config,
            )
            .with_sensitivity(sensitivity)?;
            let report = PrivacyReport {
                epsilon_total: *epsilon,
                delta_total: *delta,
                split_fraction: *split_fraction,
                num_product_releases: product_releases,
                sigma_sum: sum_calib.sigma,
                sigma_product_per_release: prod_calib.sigma,
                method: "analytic".into(),
            };
            (sum_calib, prod_calib, Some(report), label_budget)
        }
    };

    let mut noise_rng = substream(config.seed, Stream::Noise, 0);
    let label_probs = resolve_label_probs(labels, num_classes, config, label_budget, &mut noise_rng)?;

    // One-shot sum embedding.
    let sum_spec = FeatureMapSpec::Sum(specs.sum.clone());
    let mut sum_emb = mean_embedding_single(data, labels, &sum_spec, num_classes)?;
    if config.privacy.is_private() {
        sum_emb = privatize(&sum_emb, &sum_calib, &mut noise_rng)?;
    }

    let plan = loop_plan(m, config);
    let mut model = init_generator(&config.arch, config.seed)?;
    let mut adam = Adam::new(&param_shapes(&model), config.learning_rate);
    let mut latent_rng = substream(config.seed, Stream::Latent, 0);
    let mut epoch_reports = Vec::with_capacity(config.epochs);
    let mut final_loss = f64::NAN;

    let mut current: Option<(ProductMapSpec, LabeledMeanEmbedding)> = None;
    for epoch in 0..config.epochs {
        if current.is_none() || resubsample {
            let mut sub_rng = substream(config.seed, Stream::Subsample, epoch as u64);
            let dims = subsample_dims(input_dim, config.prod_dims, &mut sub_rng)?;
            let prod_spec = ProductMapSpec::new(specs.prod_basis, dims, input_dim)?;
            let fm = FeatureMapSpec::Product(prod_spec.clone());
            let mut prod_emb = mean_embedding_single(data, labels, &fm, num_classes)?;
            if config.privacy.is_private() {
                prod_emb = privatize(&prod_emb, &prod_calib, &mut noise_rng)?;
            }
            current = Some((prod_spec, prod_emb));
        }
        let (prod_spec, prod_emb) = current.as_ref().unwrap();

        let mut epoch_loss = 0.0;
        for step in 0..plan.steps_per_epoch {
            let loss = train_step(
                &mut model,
                &mut adam,
                &mut latent_rng,
                &label_probs,
                plan.batch_size,
                |tape, out, batch_labels| {
                    let hp = tape.hermite_product(out, prod_spec)?;
                    let hs = tape.hermite_sum(out, &specs.sum)?;
                    let lp = tape.embedding_frobenius_loss(
                        hp,
                        batch_labels,
                        num_classes,
                        prod_emb.matrix(),
                    )?;
                    let ls = tape.embedding_frobenius_loss(
                        hs,
                        batch_labels,
                        num_classes,
                        sum_emb.matrix(),
                    )?;
                    match config.gamma_target {
                        GammaTarget::Product => tape.add_scaled(lp, ls, config.gamma, 1.0),
                        GammaTarget::Sum => tape.add_scaled(lp, ls, 1.0, config.gamma),
                    }
                },
            )?;
            if !loss.is_finite() {
                return Err(Error::NumericalAbort {
                    epoch,
                    step,
                    reason: format!("loss became {loss}"),
                });
            }
            epoch_loss += loss;
            final_loss = loss;
        }
        epoch_reports.push(EpochReport {
            epoch,
            subsampled_dims: current.as_ref().unwrap().0.dims().to_vec(),
            mean_loss: epoch_loss / plan.steps_per_epoch as f64,
        });
    }

    let report = RunReport {
        version: 1,
        seed: config.seed,
        config_hash: String::new(),
        input_dim,
        num_classes,
        sample_count: m,
        feature_family: "hermite".into(),
        length_scale,
        rho_sum: Some(specs.rho_sum),
        rho_prod: Some(specs.rho_prod),
        feature_len_sum: specs.sum.output_len(),
        feature_len_product: specs.prod_basis.feature_len().pow(config.prod_dims as u32),
        feature_len_total: specs.sum.output_len()
            + specs.prod_basis.feature_len().pow(config.prod_dims as u32),
        batch_size: plan.batch_size,
        steps_per_epoch: plan.steps_per_epoch,
        bounds,
        label_probs,
        privacy: privacy_report,
        epochs: epoch_reports,
        final_loss,
    };
    Ok((model, report))
}

#[allow(clippy::too_many_arguments)]
fn train_rff(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
    length_scale: f64,
    bounds: Vec<(f64, f64)>,
    num_features: usize,
    label_fraction: f64,
) -> Result<(GeneratorModel, RunReport)> {
    let m = data.nrows();
    let input_dim = data.ncols();
    let spec = RffSpec::new(input_dim, num_features, length_scale, config.seed)?;
    let sensitivity = sensitivity_bound(m, EmbeddingPart::Rff)?;

    // A single release carries the whole budget: the frequencies are fixed,
    // so the data embedding is privatized exactly once.
    let (calib, privacy_report, label_budget) = match &config.privacy {
        PrivacySetting::NonPrivate => (NoiseCalibration::noiseless(), None, None),
        PrivacySetting::Private { epsilon, delta, .. } => {
            let (label_budget, eps, delta_rest) = if label_fraction > 0.0 {
                (
                    Some((epsilon * label_fraction, delta * label_fraction)),
                    epsilon * (1.0 - label_fraction),
                    delta * (1.0 - label_fraction),
                )
            } else {
                (None, *epsilon, *delta)
            };
            let calib = maybe_override(
                calibrate_sigma(eps, delta_rest, CalibrationMethod::Analytic)?,
                config,
            )
            .with_sensitivity(sensitivity)?;
            let report = PrivacyReport {
                epsilon_total: *epsilon,
                delta_total: *delta,
                split_fraction: 1.0,
                num_product_releases: 0,
                sigma_sum: calib.sigma,
                sigma_product_per_release: 0.0,
                method: "analytic".into(),
            };
            (calib, Some(report), label_budget)
        }
    };

    let mut noise_rng = substream(config.seed, Stream::Noise, 0);
    let label_probs = resolve_label_probs(labels, num_classes, config, label_budget, &mut noise_rng)?;

    let fm = FeatureMapSpec::RandomFourier(spec.clone());
    let mut emb = mean_embedding_single(data, labels, &fm, num_classes)?;
    if config.privacy.is_private() {
        emb = privatize(&emb, &calib, &mut noise_rng)?;
    }

    let plan = loop_plan(m, config);
    let mut model = init_generator(&config.arch, config.seed)?;
    let mut adam = Adam::new(&param_shapes(&model), config.learning_rate);
    let mut latent_rng = substream(config.seed, Stream::Latent, 0);
    let mut epoch_reports = Vec::with_capacity(config.epochs);
    let mut final_loss = f64::NAN;

    for epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        for step in 0..plan.steps_per_epoch {
            let loss = train_step(
                &mut model,
                &mut adam,
                &mut latent_rng,
                &label_probs,
                plan.batch_size,
                |tape, out, batch_labels| {
                    let h = tape.rff(out, &spec)?;
                    tape.embedding_frobenius_loss(h, batch_labels, num_classes, emb.matrix())
                },
            )?;
            if !loss.is_finite() {
                return Err(Error::NumericalAbort {
                    epoch,
                    step,
                    reason: format!("loss became {loss}"),
                });
            }
            epoch_loss += loss;
            final_loss = loss;
        }
        epoch_reports.push(EpochReport {
            epoch,
            subsampled_dims: Vec::new(),
            mean_loss: epoch_loss / plan.steps_per_epoch as f64,
        });
    }

    let report = RunReport {
        version: 1,
        seed: config.seed,
        config_hash: String::new(),
        input_dim,
        num_classes,
        sample_count: m,
        feature_family: "random_fourier".into(),
        length_scale,
        rho_sum: None,
        rho_prod: None,
        feature_len_sum: 0,
        feature_len_product: 0,
        feature_len_total: num_features,
        batch_size: plan.batch_size,
        steps_per_epoch: plan.steps_per_epoch,
        bounds,
        label_probs,
        privacy: privacy_report,
        epochs: epoch_reports,
        final_loss,
    };
    Ok((model, report))
}

fn param_shapes(model: &GeneratorModel) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    for (w, b) in model.weights.iter().zip(&model.biases) {
        shapes.push(w.dim());
        shapes.push(b.dim());
    }
    shapes
}

/// One optimizer step: draw a labeled latent batch, build the forward graph,
/// attach the loss closure, backprop, and update in place.
fn train_step<R, F>(
    model: &mut GeneratorModel,
    adam: &mut Adam,
    latent_rng: &mut R,
    label_probs: &[f64],
    batch_size: usize,
    attach_loss: F,
) -> Result<f64>
where
    R: Rng,
    F: FnOnce(&mut Tape, NodeId, &[usize]) -> Result<NodeId>,
{
    let num_classes = model.arch.class_count;
    let latent_dim = model.arch.latent_dim;
    let batch_labels: Vec<usize> = (0..batch_size)
        .map(|_| sample_label(label_probs, latent_rng))
        .collect();
    let mut joined = Array2::zeros((batch_size, latent_dim + num_classes));
    for i in 0..batch_size {
        for j in 0..latent_dim {
            joined[[i, j]] = StandardNormal.sample(latent_rng);
        }
        joined[[i, latent_dim + batch_labels[i]]] = 1.0;
    }
    let mut tape = Tape::new();
    let input = tape.input(joined);
    let (out, params) = model.build_graph(&mut tape, input)?;
    let loss = attach_loss(&mut tape, out, &batch_labels)?;
    let loss_value = tape.scalar(loss)?;
    tape.backward(loss)?;
    let grads: Vec<Array2<f64>> = params
        .iter()
        .map(|&p| tape.grad(p).map(|g| g.to_owned()))
        .collect::<Result<_>>()?;
    let mut refs: Vec<&mut Array2<f64>> = Vec::with_capacity(grads.len());
    for (w, b) in model.weights.iter_mut().zip(&mut model.biases) {
        refs.push(w);
        refs.push(b);
    }
    adam.step(&mut refs, &grads);
    Ok(loss_value)
}

/// Sampling mode for categorical output blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Draw the category from the softmax probabilities.
    Sample,
    /// Take the most probable category.
    Argmax,
}

/// Draw `n` labeled samples in the encoded (normalized) space. Softmax
/// blocks come out as hard one-hot vectors.
pub fn generate<R: Rng>(
    model: &GeneratorModel,
    n: usize,
    label_probs: &[f64],
    mode: SampleMode,
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if label_probs.len() != model.arch.class_count {
        return Err(Error::DimensionMismatch {
            expected: model.arch.class_count,
            got: label_probs.len(),
        });
    }
    let labels: Vec<usize> = (0..n).map(|_| sample_label(label_probs, rng)).collect();
    let mut latent = Array2::zeros((n, model.arch.latent_dim));
    latent.mapv_inplace(|_| StandardNormal.sample(rng));
    if n == 0 {
        return Ok((Array2::zeros((0, model.arch.output_dim())), labels));
    }
    let mut out = forward(model, latent.view(), &labels)?;
    // Harden categorical blocks.
    let mut offset = 0;
    for block in &model.arch.output_blocks {
        if block.decoder == Decoder::Softmax {
            for i in 0..n {
                let probs: Vec<f64> = (0..block.width).map(|j| out[[i, offset + j]]).collect();
                let pick = match mode {
                    SampleMode::Sample => sample_label(&probs, rng),
                    SampleMode::Argmax => {
                        probs
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probs"))
                            .map(|(k, _)| k)
                            .unwrap_or(0)
                    }
                };
                for j in 0..block.width {
                    out[[i, offset + j]] = if j == pick { 1.0 } else { 0.0 };
                }
            }
        }
        offset += block.width;
    }
    Ok((out, labels))
}

/// Mean embedding of a generated batch, for loss cross-checks.
pub fn batch_embedding(
    batch: ArrayView2<'_, f64>,
    labels: &[usize],
    spec: &FeatureMapSpec,
    num_classes: usize,
) -> Result<LabeledMeanEmbedding> {
    mean_embedding_single(batch, labels, spec, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::augmented_loss;
    use ndarray::array;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blob_arch(latent: usize, hidden: Vec<usize>, out: usize, classes: usize) -> GeneratorArch {
        GeneratorArch {
            latent_dim: latent,
            class_count: classes,
            hidden,
            activation: Activation::Relu,
            output_blocks: vec![OutputBlock {
                decoder: Decoder::Sigmoid,
                width: out,
            }],
        }
    }

    /// Two well-separated 2-D blobs, one per class.
    fn blob_data(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let center = if class == 0 { 0.25 } else { 0.75 };
            data[[i, 0]] = center + 0.05 * rng.gen_range(-1.0..1.0f64);
            data[[i, 1]] = center + 0.05 * rng.gen_range(-1.0..1.0f64);
            labels.push(class);
        }
        (data, labels)
    }

    fn quick_config(seed: u64) -> TrainConfig {
        let mut config = TrainConfig::new(blob_arch(4, vec![32], 2, 2));
        config.epochs = 6;
        config.batch_rate = 0.25;
        config.order_sum = 10;
        config.order_prod = 10;
        config.prod_dims = 2;
        config.rho_source = RhoSource::LengthScale(0.25);
        config.seed = seed;
        config
    }

    #[test]
    fn init_is_deterministic_and_fan_bounded() {
        let arch = blob_arch(3, vec![8, 5], 2, 2);
        let a = init_generator(&arch, 7).unwrap();
        let b = init_generator(&arch, 7).unwrap();
        for (wa, wb) in a.weights().iter().zip(b.weights()) {
            assert_eq!(wa, wb);
        }
        for (i, w) in a.weights().iter().enumerate() {
            let (fan_in, fan_out) = w.dim();
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            assert!(
                w.iter().all(|v| v.abs() <= bound),
                "layer {i} exceeds Glorot bound"
            );
        }
        for b in a.biases() {
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_hidden_config_is_single_affine() {
        let arch = blob_arch(3, vec![], 4, 2);
        let model = init_generator(&arch, 1).unwrap();
        assert_eq!(model.weights().len(), 1);
        assert_eq!(model.weights()[0].dim(), (5, 4));
    }

    #[test]
    fn forward_shapes_and_ranges() {
        let arch = GeneratorArch {
            latent_dim: 3,
            class_count: 2,
            hidden: vec![8],
            activation: Activation::Tanh,
            output_blocks: vec![
                OutputBlock {
                    decoder: Decoder::Sigmoid,
                    width: 2,
                },
                OutputBlock {
                    decoder: Decoder::Softmax,
                    width: 3,
                },
            ],
        };
        let model = init_generator(&arch, 3).unwrap();
        let z = array![[0.1, -0.4, 0.9]];
        let out = forward(&model, z.view(), &[1]).unwrap();
        assert_eq!(out.dim(), (1, 5));
        for j in 0..2 {
            assert!(out[[0, j]] > 0.0 && out[[0, j]] < 1.0);
        }
        let softmax_sum: f64 = (2..5).map(|j| out[[0, j]]).sum();
        assert!((softmax_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_loss_decreases_on_blobs() {
        let (data, labels) = blob_data(400, 5);
        let config = quick_config(11);
        let (_, report) = train(data.view(), &labels, 2, &config).unwrap();
        let losses: Vec<f64> = report.epochs.iter().map(|e| e.mean_loss).collect();
        for i in 0..4 {
            assert!(
                losses[i + 1] < losses[i],
                "epoch losses not decreasing: {losses:?}"
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (data, labels) = blob_data(200, 6);
        let config = quick_config(42);
        let (ma, ra) = train(data.view(), &labels, 2, &config).unwrap();
        let (mb, rb) = train(data.view(), &labels, 2, &config).unwrap();
        assert_eq!(ma.flatten_params(), mb.flatten_params());
        assert_eq!(
            serde_json::to_string(&ra).unwrap(),
            serde_json::to_string(&rb).unwrap()
        );
    }

    #[test]
    fn private_with_zero_noise_matches_non_private() {
        let (data, labels) = blob_data(200, 9);
        let mut non_private = quick_config(13);
        non_private.bounds = BoundsSource::Explicit(vec![(0.0, 1.0), (0.0, 1.0)]);
        let mut private = non_private.clone();
        private.privacy = PrivacySetting::Private {
            epsilon: 1.0,
            delta: 1e-5,
            split_fraction: 0.5,
        };
        private.noise_scale_override = Some(0.0);
        let (ma, _) = train(data.view(), &labels, 2, &non_private).unwrap();
        let (mb, rb) = train(data.view(), &labels, 2, &private).unwrap();
        assert_eq!(ma.flatten_params(), mb.flatten_params());
        assert!(rb.privacy.is_some());
    }

    #[test]
    fn epoch_schedule_counts_releases() {
        // 3 input dims, 2 selected, resubsampled every epoch: E = epochs.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((60, 3), |_| rng.gen_range(0.0..1.0f64));
        let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
        let mut config = TrainConfig::new(GeneratorArch {
            latent_dim: 3,
            class_count: 2,
            hidden: vec![16],
            activation: Activation::Relu,
            output_blocks: vec![OutputBlock {
                decoder: Decoder::Sigmoid,
                width: 3,
            }],
        });
        config.epochs = 4;
        config.batch_rate = 0.5;
        config.order_sum = 5;
        config.order_prod = 5;
        config.prod_dims = 2;
        config.rho_source = RhoSource::LengthScale(0.3);
        config.privacy = PrivacySetting::Private {
            epsilon: 1.0,
            delta: 1e-5,
            split_fraction: 0.8,
        };
        config.bounds = BoundsSource::Explicit(vec![(0.0, 1.0); 3]);
        config.seed = 21;
        let (_, report) = train(data.view(), &labels, 2, &config).unwrap();
        let privacy = report.privacy.unwrap();
        assert_eq!(privacy.num_product_releases, 4);
        // Dims were actually redrawn: at least two distinct selections in 4
        // epochs of choosing 2 of 3 coordinates is near-certain.
        let distinct: std::collections::HashSet<Vec<usize>> = report
            .epochs
            .iter()
            .map(|e| e.subsampled_dims.clone())
            .collect();
        assert!(distinct.len() > 1);
        // σ_product carries the √E composition factor.
        let single = compose_product_releases(1, 0.2, 2e-6).unwrap().sigma;
        assert!((privacy.sigma_product_per_release - single * 2.0).abs() < 1e-9);

        // Full coordinate set: nothing to redraw, one release.
        config.prod_dims = 3;
        let (_, report) = train(data.view(), &labels, 2, &config).unwrap();
        assert_eq!(report.privacy.unwrap().num_product_releases, 1);
    }

    #[test]
    fn private_training_requires_explicit_bounds() {
        let (data, labels) = blob_data(50, 2);
        let mut config = quick_config(1);
        config.privacy = PrivacySetting::Private {
            epsilon: 1.0,
            delta: 1e-5,
            split_fraction: 0.5,
        };
        config.bounds = BoundsSource::FromData;
        assert!(train(data.view(), &labels, 2, &config).is_err());
    }

    #[test]
    fn tape_loss_matches_embedding_loss() {
        // The differentiable loss and the plain embedding arithmetic agree.
        let (data, labels) = blob_data(64, 14);
        let basis = HermiteBasis::new(0.5, 6).unwrap();
        let sum_spec = SumMapSpec::shared(basis, 2).unwrap();
        let prod_spec = ProductMapSpec::new(basis, vec![0, 1], 2).unwrap();
        let sum_fm = FeatureMapSpec::Sum(sum_spec.clone());
        let prod_fm = FeatureMapSpec::Product(prod_spec.clone());
        let data_sum = mean_embedding_single(data.view(), &labels, &sum_fm, 2).unwrap();
        let data_prod = mean_embedding_single(data.view(), &labels, &prod_fm, 2).unwrap();

        let (batch, batch_labels) = blob_data(32, 15);
        let gen_sum = mean_embedding_single(batch.view(), &batch_labels, &sum_fm, 2).unwrap();
        let gen_prod = mean_embedding_single(batch.view(), &batch_labels, &prod_fm, 2).unwrap();
        let gamma = 0.37;
        let reference = augmented_loss(
            &data_prod,
            &data_sum,
            &gen_prod,
            &gen_sum,
            gamma,
            GammaTarget::Product,
        )
        .unwrap();

        let mut tape = Tape::new();
        let x = tape.input(batch.clone());
        let hp = tape.hermite_product(x, &prod_spec).unwrap();
        let hs = tape.hermite_sum(x, &sum_spec).unwrap();
        let lp = tape
            .embedding_frobenius_loss(hp, &batch_labels, 2, data_prod.matrix())
            .unwrap();
        let ls = tape
            .embedding_frobenius_loss(hs, &batch_labels, 2, data_sum.matrix())
            .unwrap();
        let loss = tape.add_scaled(lp, ls, gamma, 1.0).unwrap();
        assert!((tape.scalar(loss).unwrap() - reference).abs() < 1e-12);

        // Identical embeddings injected: zero loss at any gamma.
        let self_loss = augmented_loss(
            &data_prod,
            &data_sum,
            &data_prod,
            &data_sum,
            gamma,
            GammaTarget::Product,
        )
        .unwrap();
        assert_eq!(self_loss, 0.0);
    }

    #[test]
    fn generate_basics() {
        let arch = GeneratorArch {
            latent_dim: 4,
            class_count: 3,
            hidden: vec![16],
            activation: Activation::Relu,
            output_blocks: vec![
                OutputBlock {
                    decoder: Decoder::Sigmoid,
                    width: 2,
                },
                OutputBlock {
                    decoder: Decoder::Softmax,
                    width: 4,
                },
            ],
        };
        let model = init_generator(&arch, 5).unwrap();
        let probs = [0.2, 0.3, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (empty, labels) = generate(&model, 0, &probs, SampleMode::Sample, &mut rng).unwrap();
        assert_eq!(empty.nrows(), 0);
        assert!(labels.is_empty());

        let n = 10_000;
        let (out, labels) = generate(&model, n, &probs, SampleMode::Sample, &mut rng).unwrap();
        assert_eq!(out.dim(), (n, 6));
        // Continuous block strictly inside (0, 1).
        for i in 0..n {
            assert!(out[[i, 0]] > 0.0 && out[[i, 0]] < 1.0);
            assert!(out[[i, 1]] > 0.0 && out[[i, 1]] < 1.0);
            // Categorical block is hard one-hot.
            let block: Vec<f64> = (2..6).map(|j| out[[i, j]]).collect();
            assert_eq!(block.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(block.iter().filter(|&&v| v == 0.0).count(), 3);
        }
        // Label histogram within 3σ binomial bounds.
        for (k, &p) in probs.iter().enumerate() {
            let count = labels.iter().filter(|&&y| y == k).count() as f64;
            let std = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (count - n as f64 * p).abs() <= 3.0 * std,
                "class {k}: {count} of {n}"
            );
        }
        // Deterministic given the generator state.
        let (a, la) = generate(&model, 5, &probs, SampleMode::Sample, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let (b, lb) = generate(&model, 5, &probs, SampleMode::Sample, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn denormalize_inverts_bounds() {
        let bounds = vec![(-1.0, 5.0), (0.0, 10.0)];
        let norm = array![[0.0, 1.0], [0.5, 0.25]];
        let out = denormalize(norm.view(), &bounds).unwrap();
        assert_eq!(out[[0, 0]], -1.0);
        assert_eq!(out[[0, 1]], 10.0);
        assert_eq!(out[[1, 0]], 2.0);
        assert_eq!(out[[1, 1]], 2.5);
    }
}
