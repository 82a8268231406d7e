//! Multi-dimensional feature maps built from the 1-D eigenfunction features.
//!
//! Three Hermite constructions are provided: the sum map (one block per
//! coordinate, scaled by 1/√D), the product map (vectorized tensor product
//! over a subsampled coordinate set), and their concatenation. A random
//! Fourier map serves as the baseline. All maps expose the exact kernel they
//! approximate through [`approx_error`].

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hp_features_into, HermiteBasis};
use crate::rng::{self, Stream};

/// Hard cap on product-map size; tensor products explode exponentially.
pub const DEFAULT_PRODUCT_CAP: usize = 1_000_000;

/// Per-coordinate eigenfunction blocks scaled by 1/√D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumMapSpec {
    bases: Vec<HermiteBasis>,
}

impl SumMapSpec {
    /// One shared basis for every coordinate.
    pub fn shared(basis: HermiteBasis, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        Ok(SumMapSpec {
            bases: vec![basis; input_dim],
        })
    }

    /// A distinct basis per coordinate.
    pub fn per_dim(bases: Vec<HermiteBasis>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::invalid("need at least one coordinate basis"));
        }
        Ok(SumMapSpec { bases })
    }

    pub fn input_dim(&self) -> usize {
        self.bases.len()
    }

    pub fn output_len(&self) -> usize {
        self.bases.iter().map(|b| b.feature_len()).sum()
    }

    pub fn bases(&self) -> &[HermiteBasis] {
        &self.bases
    }
}

/// Tensor-product map over a subsampled set of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMapSpec {
    basis: HermiteBasis,
    dims: Vec<usize>,
    input_dim: usize,
    cap: usize,
}

impl ProductMapSpec {
    pub fn new(basis: HermiteBasis, mut dims: Vec<usize>, input_dim: usize) -> Result<Self> {
        Self::with_cap(basis, {
            dims.sort_unstable();
            dims
        }, input_dim, DEFAULT_PRODUCT_CAP)
    }

    pub fn with_cap(
        basis: HermiteBasis,
        mut dims: Vec<usize>,
        input_dim: usize,
        cap: usize,
    ) -> Result<Self> {
        dims.sort_unstable();
        if dims.is_empty() {
            return Err(Error::invalid("product map needs at least one coordinate"));
        }
        if dims.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("subsampled indices must be distinct"));
        }
        if *dims.last().unwrap() >= input_dim {
            return Err(Error::invalid(format!(
                "subsampled index {} out of range for dimension {input_dim}",
                dims.last().unwrap()
            )));
        }
        let width = basis.feature_len();
        let mut size: usize = 1;
        for _ in 0..dims.len() {
            size = size.checked_mul(width).unwrap_or(usize::MAX);
            if size > cap {
                return Err(Error::CapacityExceeded {
                    requested: size,
                    cap,
                });
            }
        }
        Ok(ProductMapSpec {
            basis,
            dims,
            input_dim,
            cap,
        })
    }

    pub fn basis(&self) -> &HermiteBasis {
        &self.basis
    }

    /// Selected coordinates in ascending original-dimension order; the first
    /// is the slowest-varying index of the vectorized tensor.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_len(&self) -> usize {
        self.basis.feature_len().pow(self.dims.len() as u32)
    }
}

/// Product block stacked on top of a sum block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedMapSpec {
    pub product: ProductMapSpec,
    pub sum: SumMapSpec,
}

impl CombinedMapSpec {
    pub fn new(product: ProductMapSpec, sum: SumMapSpec) -> Result<Self> {
        if product.input_dim() != sum.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: sum.input_dim(),
                got: product.input_dim(),
            });
        }
        Ok(CombinedMapSpec { product, sum })
    }

    pub fn input_dim(&self) -> usize {
        self.sum.input_dim()
    }

    pub fn output_len(&self) -> usize {
        self.product.output_len() + self.sum.output_len()
    }
}

/// Random Fourier features for the Gaussian kernel with length scale `l`.
///
/// The frequency matrix is regenerated deterministically from the stored
/// seed, so specs stay small on disk while pinning the exact draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "RffParams", into = "RffParams")]
pub struct RffSpec {
    dim: usize,
    num_features: usize,
    length_scale: f64,
    seed: u64,
    omega: Array2<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RffParams {
    dim: usize,
    num_features: usize,
    length_scale: f64,
    seed: u64,
}

impl From<RffParams> for RffSpec {
    fn from(p: RffParams) -> Self {
        RffSpec::new(p.dim, p.num_features, p.length_scale, p.seed)
            .expect("serialized RffSpec parameters must be valid")
    }
}

impl From<RffSpec> for RffParams {
    fn from(s: RffSpec) -> Self {
        RffParams {
            dim: s.dim,
            num_features: s.num_features,
            length_scale: s.length_scale,
            seed: s.seed,
        }
    }
}

impl PartialEq for RffSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.num_features == other.num_features
            && self.length_scale == other.length_scale
            && self.seed == other.seed
    }
}

impl RffSpec {
    /// `num_features` must be even: half cosine features, half sine.
    pub fn new(dim: usize, num_features: usize, length_scale: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if num_features == 0 || num_features % 2 != 0 {
            return Err(Error::invalid(format!(
                "feature count must be positive and even, got {num_features}"
            )));
        }
        if !length_scale.is_finite() || length_scale <= 0.0 {
            return Err(Error::invalid(format!(
                "length scale must be positive, got {length_scale}"
            )));
        }
        let normal = Normal::new(0.0, 1.0 / length_scale).expect("valid scale");
        let mut rng = rng::substream(seed, Stream::Frequencies, 0);
        let omega = Array2::from_shape_fn((num_features / 2, dim), |_| normal.sample(&mut rng));
        Ok(RffSpec {
            dim,
            num_features,
            length_scale,
            seed,
            omega,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn output_len(&self) -> usize {
        self.num_features
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Frequency matrix of shape (A/2) × D.
    pub fn omega(&self) -> ArrayView2<'_, f64> {
        self.omega.view()
    }
}

/// Tagged description of a feature map, fully determining its evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMapSpec {
    Sum(SumMapSpec),
    Product(ProductMapSpec),
    Combined(CombinedMapSpec),
    RandomFourier(RffSpec),
}

impl FeatureMapSpec {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMapSpec::Sum(s) => s.input_dim(),
            FeatureMapSpec::Product(s) => s.input_dim(),
            FeatureMapSpec::Combined(s) => s.input_dim(),
            FeatureMapSpec::RandomFourier(s) => s.input_dim(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            FeatureMapSpec::Sum(s) => s.output_len(),
            FeatureMapSpec::Product(s) => s.output_len(),
            FeatureMapSpec::Combined(s) => s.output_len(),
            FeatureMapSpec::RandomFourier(s) => s.output_len(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureMapSpec::Sum(s) => sum_map(x, s),
            FeatureMapSpec::Product(s) => product_map(x, s),
            FeatureMapSpec::Combined(s) => combined_map(x, s),
            FeatureMapSpec::RandomFourier(s) => rff_map(x, s),
        }
    }

    /// Stable hash over the full spec, including subsampled dimensions and
    /// frequency seeds. Embeddings refuse comparison across fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_string(self).expect("specs always serialize");
        rng::fnv1a64(json.as_bytes())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Concatenation of per-coordinate features scaled by 1/√D.
pub fn sum_map(x: &[f64], spec: &SumMapSpec) -> Result<Vec<f64>> {
    check_dim(spec.input_dim(), x.len())?;
    let scale = 1.0 / (spec.input_dim() as f64).sqrt();
    let mut out = vec![0.0; spec.output_len()];
    let mut offset = 0;
    for (basis, &xd) in spec.bases.iter().zip(x) {
        let len = basis.feature_len();
        hp_features_into(xd, basis, &mut out[offset..offset + len])?;
        for v in &mut out[offset..offset + len] {
            *v *= scale;
        }
        offset += len;
    }
    Ok(out)
}

/// Vectorized tensor product of per-coordinate features over the selected
/// dimensions; the first selected coordinate varies slowest.
pub fn product_map(x: &[f64], spec: &ProductMapSpec) -> Result<Vec<f64>> {
    check_dim(spec.input_dim(), x.len())?;
    let width = spec.basis.feature_len();
    let mut out = vec![1.0];
    let mut block = vec![0.0; width];
    for &d in &spec.dims {
        hp_features_into(x[d], &spec.basis, &mut block)?;
        let mut next = vec![0.0; out.len() * width];
        for (i, &o) in out.iter().enumerate() {
            for (j, &b) in block.iter().enumerate() {
                next[i * width + j] = o * b;
            }
        }
        out = next;
    }
    Ok(out)
}

/// Draw `d_prod` distinct coordinates uniformly without replacement.
/// Returned in ascending order; deterministic given the generator state.
pub fn subsample_dims<R: Rng>(dim: usize, d_prod: usize, rng: &mut R) -> Result<Vec<usize>> {
    if d_prod == 0 || d_prod > dim {
        return Err(Error::invalid(format!(
            "cannot subsample {d_prod} of {dim} dimensions"
        )));
    }
    // Partial Fisher-Yates over the index vector.
    let mut pool: Vec<usize> = (0..dim).collect();
    for i in 0..d_prod {
        let j = rng.gen_range(i..dim);
        pool.swap(i, j);
    }
    let mut picked = pool[..d_prod].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// `[product block; sum block]`.
pub fn combined_map(x: &[f64], spec: &CombinedMapSpec) -> Result<Vec<f64>> {
    let mut out = product_map(x, &spec.product)?;
    out.extend(sum_map(x, &spec.sum)?);
    Ok(out)
}

/// √(2/A)·cos(ω_jᵀx) for the first half, √(2/A)·sin(ω_jᵀx) for the second.
pub fn rff_map(x: &[f64], spec: &RffSpec) -> Result<Vec<f64>> {
    check_dim(spec.dim, x.len())?;
    let half = spec.num_features / 2;
    let scale = (2.0 / spec.num_features as f64).sqrt();
    let mut out = vec![0.0; spec.num_features];
    for j in 0..half {
        let dot: f64 = spec
            .omega
            .row(j)
            .iter()
            .zip(x)
            .map(|(w, xi)| w * xi)
            .sum();
        out[j] = scale * dot.cos();
        out[half + j] = scale * dot.sin();
    }
    Ok(out)
}

/// exp(-‖x-y‖²/(2l²)).
pub fn gaussian_kernel(x: &[f64], y: &[f64], length_scale: f64) -> Result<f64> {
    if !length_scale.is_finite() || length_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "length scale must be positive, got {length_scale}"
        )));
    }
    check_dim(x.len(), y.len())?;
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-sq / (2.0 * length_scale * length_scale)).exp())
}

/// Mean absolute deviation between the exact Gaussian kernel and the feature
/// inner product, over all rows(X) × rows(Y) pairs.
pub fn approx_error(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    spec: &FeatureMapSpec,
    length_scale: f64,
) -> Result<f64> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::invalid("approx_error needs non-empty sample sets"));
    }
    let fx: Vec<Vec<f64>> = x
        .rows()
        .into_iter()
        .map(|r| spec.evaluate(r.as_slice().expect("contiguous row")))
        .collect::<Result<_>>()?;
    let fy: Vec<Vec<f64>> = y
        .rows()
        .into_iter()
        .map(|r| spec.evaluate(r.as_slice().expect("contiguous row")))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (i, xi) in x.rows().into_iter().enumerate() {
        for (j, yj) in y.rows().into_iter().enumerate() {
            let exact = gaussian_kernel(
                xi.as_slice().expect("contiguous row"),
                yj.as_slice().expect("contiguous row"),
                length_scale,
            )?;
            let inner: f64 = fx[i].iter().zip(&fy[j]).map(|(a, b)| a * b).sum();
            total += (exact - inner).abs();
        }
    }
    Ok(total / (x.nrows() * y.nrows()) as f64)
}
