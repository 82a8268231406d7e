//! Labeled mean embeddings and the MMD quantities built on them.
//!
//! A labeled mean embedding averages the outer products h(x_i)·f(y_i)ᵀ of
//! input features with one-hot labels; column k holds the (class-frequency
//! weighted) mean feature vector of class k. The data-side embedding is the
//! only statistic that ever touches real records, which is what makes the
//! one-shot privatization scheme work.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featuremaps::FeatureMapSpec;
use crate::rng::fnv1a64;

/// Which kernel part an embedding belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingPart {
    Sum,
    Product,
    Rff,
    CombinedSumBlock,
    CombinedProductBlock,
}

impl EmbeddingPart {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingPart::Sum => "sum",
            EmbeddingPart::Product => "product",
            EmbeddingPart::Rff => "rff",
            EmbeddingPart::CombinedSumBlock => "combined-sum-block",
            EmbeddingPart::CombinedProductBlock => "combined-product-block",
        }
    }
}

/// Feature-length × class-count matrix of averaged outer products, plus the
/// metadata needed to refuse meaningless comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledMeanEmbedding {
    matrix: Array2<f64>,
    sample_count: usize,
    part: EmbeddingPart,
    fingerprint: u64,
    privatized: bool,
    noise_sigma: Option<f64>,
}

impl LabeledMeanEmbedding {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn part(&self) -> EmbeddingPart {
        self.part
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn feature_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_privatized(&self) -> bool {
        self.privatized
    }

    pub fn noise_sigma(&self) -> Option<f64> {
        self.noise_sigma
    }

    /// Used by the privacy module; keeps all other metadata intact.
    pub(crate) fn with_noise(mut self, matrix: Array2<f64>, sigma: f64) -> Self {
        self.matrix = matrix;
        self.privatized = true;
        self.noise_sigma = Some(sigma);
        self
    }

    /// An embedding built directly from a feature matrix (rows = samples)
    /// and labels; the generated-batch path uses this with batch features.
    pub fn from_features(
        features: ArrayView2<'_, f64>,
        labels: &[usize],
        num_classes: usize,
        part: EmbeddingPart,
        fingerprint: u64,
    ) -> Result<Self> {
        let m = features.nrows();
        if m == 0 {
            return Err(Error::invalid("cannot embed an empty dataset"));
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: labels.len(),
            });
        }
        let mut matrix = Array2::zeros((features.ncols(), num_classes));
        for (row, &label) in features.rows().into_iter().zip(labels) {
            if label >= num_classes {
                return Err(Error::invalid(format!(
                    "label {label} out of range for {num_classes} classes"
                )));
            }
            let mut col = matrix.column_mut(label);
            col.iter_mut().zip(row.iter()).for_each(|(m, &v)| *m += v);
        }
        matrix /= m as f64;
        Ok(LabeledMeanEmbedding {
            matrix,
            sample_count: m,
            part,
            fingerprint,
            privatized: false,
            noise_sigma: None,
        })
    }
}

/// Standard basis vector e_y in R^K.
pub fn one_hot(y: usize, num_classes: usize) -> Result<Vec<f64>> {
    if y >= num_classes {
        return Err(Error::invalid(format!(
            "class index {y} out of range for {num_classes} classes"
        )));
    }
    let mut v = vec![0.0; num_classes];
    v[y] = 1.0;
    Ok(v)
}

fn part_fingerprint(spec: &FeatureMapSpec, part: EmbeddingPart, num_classes: usize) -> u64 {
    let spec_hash = spec.fingerprint();
    let tagged = format!("{spec_hash:016x}/{}/{num_classes}", part.as_str());
    fnv1a64(tagged.as_bytes())
}

/// Mean embedding of a labeled dataset under a feature map.
///
/// Normalization divides by the total sample count, so class columns carry
/// the empirical class frequencies. A combined spec yields its product and
/// sum blocks as two separate embeddings (in that order); every other spec
/// yields one.
pub fn mean_embedding(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    spec: &FeatureMapSpec,
    num_classes: usize,
) -> Result<Vec<LabeledMeanEmbedding>> {
    let m = data.nrows();
    if m == 0 {
        return Err(Error::invalid("cannot embed an empty dataset"));
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: labels.len(),
        });
    }
    if data.ncols() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim(),
            got: data.ncols(),
        });
    }
    match spec {
        FeatureMapSpec::Combined(combined) => {
            let product = accumulate(
                data,
                labels,
                num_classes,
                combined.product.output_len(),
                |x, out| {
                    out.copy_from_slice(&crate::featuremaps::product_map(x, &combined.product)?);
                    Ok(())
                },
            )?;
            let sum = accumulate(
                data,
                labels,
                num_classes,
                combined.sum.output_len(),
                |x, out| {
                    out.copy_from_slice(&crate::featuremaps::sum_map(x, &combined.sum)?);
                    Ok(())
                },
            )?;
            Ok(vec![
                finish(product, m, EmbeddingPart::CombinedProductBlock, spec, num_classes),
                finish(sum, m, EmbeddingPart::CombinedSumBlock, spec, num_classes),
            ])
        }
        _ => {
            let part = match spec {
                FeatureMapSpec::Sum(_) => EmbeddingPart::Sum,
                FeatureMapSpec::Product(_) => EmbeddingPart::Product,
                FeatureMapSpec::RandomFourier(_) => EmbeddingPart::Rff,
                FeatureMapSpec::Combined(_) => unreachable!(),
            };
            let acc = accumulate(data, labels, num_classes, spec.output_len(), |x, out| {
                out.copy_from_slice(&spec.evaluate(x)?);
                Ok(())
            })?;
            Ok(vec![finish(acc, m, part, spec, num_classes)])
        }
    }
}

/// Convenience wrapper for non-combined specs.
pub fn mean_embedding_single(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    spec: &FeatureMapSpec,
    num_classes: usize,
) -> Result<LabeledMeanEmbedding> {
    if matches!(spec, FeatureMapSpec::Combined(_)) {
        return Err(Error::invalid(
            "combined specs produce two embedding blocks; use mean_embedding",
        ));
    }
    Ok(mean_embedding(data, labels, spec, num_classes)?.remove(0))
}

fn accumulate<F>(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    feature_len: usize,
    mut eval: F,
) -> Result<Array2<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let mut acc = Array2::zeros((feature_len, num_classes));
    let mut features = vec![0.0; feature_len];
    for (row, &label) in data.rows().into_iter().zip(labels) {
        if label >= num_classes {
            return Err(Error::invalid(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        eval(row.as_slice().expect("contiguous row"), &mut features)?;
        let mut col = acc.column_mut(label);
        col.iter_mut().zip(&features).for_each(|(a, &v)| *a += v);
    }
    Ok(acc)
}

fn finish(
    mut acc: Array2<f64>,
    m: usize,
    part: EmbeddingPart,
    spec: &FeatureMapSpec,
    num_classes: usize,
) -> LabeledMeanEmbedding {
    acc /= m as f64;
    LabeledMeanEmbedding {
        matrix: acc,
        sample_count: m,
        part,
        fingerprint: part_fingerprint(spec, part, num_classes),
        privatized: false,
        noise_sigma: None,
    }
}

/// Squared Frobenius distance between two embeddings of the same part.
pub fn mmd_sq_features(a: &LabeledMeanEmbedding, b: &LabeledMeanEmbedding) -> Result<f64> {
    if a.fingerprint != b.fingerprint {
        return Err(Error::IncompatibleEmbedding {
            left: a.fingerprint,
            right: b.fingerprint,
        });
    }
    if a.matrix.dim() != b.matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.matrix.len(),
            got: b.matrix.len(),
        });
    }
    Ok(a.matrix
        .iter()
        .zip(b.matrix.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Quadratic-time biased estimator (diagonal included):
/// (1/m²)ΣΣ k(x_i,x_j) + (1/n²)ΣΣ k(x'_i,x'_j) − (2/mn)ΣΣ k(x_i,x'_j).
pub fn mmd_sq_full<T, F>(x: &[T], y: &[T], kernel: F) -> Result<f64>
where
    F: Fn(&T, &T) -> f64,
{
    let m = x.len();
    let n = y.len();
    if m == 0 || n == 0 {
        return Err(Error::invalid("both sample sets must be non-empty"));
    }
    let mut kxx = 0.0;
    for a in x {
        for b in x {
            kxx += kernel(a, b);
        }
    }
    let mut kyy = 0.0;
    for a in y {
        for b in y {
            kyy += kernel(a, b);
        }
    }
    let mut kxy = 0.0;
    for a in x {
        for b in y {
            kxy += kernel(a, b);
        }
    }
    Ok(kxx / (m * m) as f64 + kyy / (n * n) as f64 - 2.0 * kxy / (m * n) as f64)
}

/// Which term the γ weight multiplies in the augmented objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaTarget {
    /// γ‖μ̂ᵖ_P − μ̂ᵖ_Q‖² + ‖μ̂ˢ_P − μ̂ˢ_Q‖².
    #[default]
    Product,
    /// ‖μ̂ᵖ_P − μ̂ᵖ_Q‖² + γ‖μ̂ˢ_P − μ̂ˢ_Q‖².
    Sum,
}

/// Weighted two-part objective over product- and sum-kernel embeddings.
pub fn augmented_loss(
    data_product: &LabeledMeanEmbedding,
    data_sum: &LabeledMeanEmbedding,
    synth_product: &LabeledMeanEmbedding,
    synth_sum: &LabeledMeanEmbedding,
    gamma: f64,
    target: GammaTarget,
) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let product_dist = mmd_sq_features(data_product, synth_product)?;
    let sum_dist = mmd_sq_features(data_sum, synth_sum)?;
    Ok(match target {
        GammaTarget::Product => gamma * product_dist + sum_dist,
        GammaTarget::Sum => product_dist + gamma * sum_dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featuremaps::{ProductMapSpec, SumMapSpec};
    use crate::hermite::HermiteBasis;
    use ndarray::array;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sum_spec(rho: f64, order: usize, dim: usize) -> FeatureMapSpec {
        FeatureMapSpec::Sum(
            SumMapSpec::shared(HermiteBasis::new(rho, order).unwrap(), dim).unwrap(),
        )
    }

    #[test]
    fn one_hot_basics() {
        assert_eq!(one_hot(0, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot(2, 3).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(one_hot(3, 3).is_err());
    }

    #[test]
    fn single_sample_fills_one_column() {
        let spec = sum_spec(0.5, 3, 2);
        let data = array![[0.4, -0.2]];
        let embs = mean_embedding(data.view(), &[1], &spec, 2).unwrap();
        assert_eq!(embs.len(), 1);
        let m = embs[0].matrix();
        let h = spec.evaluate(&[0.4, -0.2]).unwrap();
        for (i, &v) in h.iter().enumerate() {
            assert_eq!(m[[i, 0]], 0.0);
            assert_eq!(m[[i, 1]], v);
        }
    }

    #[test]
    fn label_flip_swaps_columns() {
        let spec = sum_spec(0.5, 4, 1);
        let data = array![[0.3], [-0.8], [1.2], [0.1]];
        let a = mean_embedding_single(data.view(), &[0, 1, 0, 1], &spec, 2).unwrap();
        let b = mean_embedding_single(data.view(), &[1, 0, 1, 0], &spec, 2).unwrap();
        assert_eq!(a.matrix().column(0), b.matrix().column(1));
        assert_eq!(a.matrix().column(1), b.matrix().column(0));
    }

    #[test]
    fn three_sample_embedding_matches_brute_force() {
        let spec = sum_spec(0.6, 5, 2);
        let data = array![[0.2, 0.9], [-0.5, 0.0], [1.5, -1.1]];
        let labels = [0usize, 2, 0];
        let emb = mean_embedding_single(data.view(), &labels, &spec, 3).unwrap();
        // Brute force: sum the outer products by hand.
        let mut expected = Array2::<f64>::zeros((spec.output_len(), 3));
        for (i, &label) in labels.iter().enumerate() {
            let h = spec
                .evaluate(data.row(i).as_slice().unwrap())
                .unwrap();
            for (f, &v) in h.iter().enumerate() {
                expected[[f, label]] += v / 3.0;
            }
        }
        for (a, b) in emb.matrix().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let spec = sum_spec(0.5, 3, 1);
        let data = Array2::<f64>::zeros((0, 1));
        assert!(mean_embedding(data.view(), &[], &spec, 2).is_err());
    }

    #[test]
    fn combined_spec_yields_two_blocks() {
        let basis = HermiteBasis::new(0.5, 4).unwrap();
        let spec = FeatureMapSpec::Combined(
            crate::featuremaps::CombinedMapSpec::new(
                ProductMapSpec::new(basis, vec![0, 1], 2).unwrap(),
                SumMapSpec::shared(basis, 2).unwrap(),
            )
            .unwrap(),
        );
        let data = array![[0.2, -0.4], [0.9, 0.6]];
        let embs = mean_embedding(data.view(), &[0, 1], &spec, 2).unwrap();
        assert_eq!(embs.len(), 2);
        assert_eq!(embs[0].part(), EmbeddingPart::CombinedProductBlock);
        assert_eq!(embs[1].part(), EmbeddingPart::CombinedSumBlock);
        assert_ne!(embs[0].fingerprint(), embs[1].fingerprint());
        assert!(mean_embedding_single(data.view(), &[0, 1], &spec, 2).is_err());
    }

    #[test]
    fn embedding_frobenius_norm_at_most_one() {
        let spec = sum_spec(0.7, 20, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((40, 3), |_| rng.gen_range(-3.0..3.0));
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let emb = mean_embedding_single(data.view(), &labels, &spec, 4).unwrap();
        let frob: f64 = emb.matrix().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(frob <= 1.0 + 1e-12);
    }

    #[test]
    fn embedding_is_linear_in_dataset_concatenation() {
        let spec = sum_spec(0.4, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Array2::from_shape_fn((7, 2), |_| rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_fn((13, 2), |_| rng.gen_range(-1.0..1.0));
        let la: Vec<usize> = (0..7).map(|i| i % 2).collect();
        let lb: Vec<usize> = (0..13).map(|i| (i + 1) % 2).collect();
        let ea = mean_embedding_single(a.view(), &la, &spec, 2).unwrap();
        let eb = mean_embedding_single(b.view(), &lb, &spec, 2).unwrap();
        let mut all = Array2::zeros((20, 2));
        all.slice_mut(ndarray::s![..7, ..]).assign(&a);
        all.slice_mut(ndarray::s![7.., ..]).assign(&b);
        let labels: Vec<usize> = la.iter().chain(lb.iter()).copied().collect();
        let eall = mean_embedding_single(all.view(), &labels, &spec, 2).unwrap();
        let blended = (7.0 * &ea.matrix().to_owned() + 13.0 * &eb.matrix().to_owned()) / 20.0;
        for (x, y) in eall.matrix().iter().zip(blended.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn feature_distance_basics() {
        let spec = sum_spec(0.5, 8, 1);
        let data = array![[0.4], [1.0]];
        let emb = mean_embedding_single(data.view(), &[0, 1], &spec, 2).unwrap();
        assert_eq!(mmd_sq_features(&emb, &emb).unwrap(), 0.0);

        // Singleton datasets with the same label: distance is ‖h(x)-h(x')‖².
        let ex = mean_embedding_single(array![[0.4]].view(), &[0], &spec, 2).unwrap();
        let ey = mean_embedding_single(array![[1.0]].view(), &[0], &spec, 2).unwrap();
        let hx = spec.evaluate(&[0.4]).unwrap();
        let hy = spec.evaluate(&[1.0]).unwrap();
        let expected: f64 = hx.iter().zip(&hy).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((mmd_sq_features(&ex, &ey).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn feature_distance_rejects_mismatched_fingerprints() {
        let a = mean_embedding_single(array![[0.1]].view(), &[0], &sum_spec(0.5, 3, 1), 2).unwrap();
        let b = mean_embedding_single(array![[0.1]].view(), &[0], &sum_spec(0.6, 3, 1), 2).unwrap();
        assert!(matches!(
            mmd_sq_features(&a, &b),
            Err(Error::IncompatibleEmbedding { .. })
        ));
    }

    #[test]
    fn quadratic_estimator_basics() {
        let x = vec![[0.0f64], [1.0], [2.0]];
        let kernel =
            |a: &[f64; 1], b: &[f64; 1]| crate::featuremaps::gaussian_kernel(a, b, 1.0).unwrap();
        assert!(mmd_sq_full(&x, &x, kernel).unwrap().abs() < 1e-15);

        // Two singletons at distance 1 under the unit Gaussian kernel.
        let a = vec![[0.0f64]];
        let b = vec![[1.0f64]];
        let v = mmd_sq_full(&a, &b, kernel).unwrap();
        assert!((v - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-12);
        assert!((v - 0.786939).abs() < 1e-6);

        let empty: Vec<[f64; 1]> = vec![];
        assert!(mmd_sq_full(&empty, &b, kernel).is_err());
    }

    #[test]
    fn feature_estimator_agrees_with_quadratic_oracle() {
        // Labeled data under the induced kernel h(x)·h(x')·1[y=y'].
        let spec = sum_spec(0.45, 10, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let m = rng.gen_range(1..=20);
            let n = rng.gen_range(1..=20);
            let gen = |rng: &mut ChaCha8Rng, count: usize| {
                let data = Array2::from_shape_fn((count, 2), |_| rng.gen_range(-2.0..2.0));
                let labels: Vec<usize> = (0..count).map(|_| rng.gen_range(0..3)).collect();
                (data, labels)
            };
            let (xa, la) = gen(&mut rng, m);
            let (xb, lb) = gen(&mut rng, n);
            let ea = mean_embedding_single(xa.view(), &la, &spec, 3).unwrap();
            let eb = mean_embedding_single(xb.view(), &lb, &spec, 3).unwrap();
            let feat = mmd_sq_features(&ea, &eb).unwrap();

            let pa: Vec<(Vec<f64>, usize)> = (0..m)
                .map(|i| (xa.row(i).to_vec(), la[i]))
                .collect();
            let pb: Vec<(Vec<f64>, usize)> = (0..n)
                .map(|i| (xb.row(i).to_vec(), lb[i]))
                .collect();
            let induced = |a: &(Vec<f64>, usize), b: &(Vec<f64>, usize)| {
                if a.1 != b.1 {
                    return 0.0;
                }
                let ha = spec.evaluate(&a.0).unwrap();
                let hb = spec.evaluate(&b.0).unwrap();
                ha.iter().zip(&hb).map(|(u, v)| u * v).sum()
            };
            let full = mmd_sq_full(&pa, &pb, induced).unwrap();
            assert!(
                (feat - full).abs() <= 1e-10,
                "trial {trial}: {feat} vs {full}"
            );
        }
    }

    #[test]
    fn feature_distance_is_a_squared_metric() {
        let spec = sum_spec(0.5, 6, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let mk = |rng: &mut ChaCha8Rng| {
                let data = Array2::from_shape_fn((5, 1), |_| rng.gen_range(-2.0..2.0));
                let labels: Vec<usize> = (0..5).map(|_| rng.gen_range(0..2)).collect();
                mean_embedding_single(data.view(), &labels, &spec, 2).unwrap()
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let dab = mmd_sq_features(&a, &b).unwrap();
            let dba = mmd_sq_features(&b, &a).unwrap();
            assert!(dab >= 0.0);
            assert!((dab - dba).abs() < 1e-15);
            // Triangle inequality on the induced norm.
            let (ab, bc, ac) = (
                dab.sqrt(),
                mmd_sq_features(&b, &c).unwrap().sqrt(),
                mmd_sq_features(&a, &c).unwrap().sqrt(),
            );
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn augmented_loss_arithmetic() {
        let basis = HermiteBasis::new(0.5, 2).unwrap();
        let pspec = FeatureMapSpec::Product(ProductMapSpec::new(basis, vec![0], 1).unwrap());
        let sspec = FeatureMapSpec::Sum(SumMapSpec::shared(basis, 1).unwrap());
        let dp = mean_embedding_single(array![[0.3]].view(), &[0], &pspec, 2).unwrap();
        let ds = mean_embedding_single(array![[0.3]].view(), &[0], &sspec, 2).unwrap();
        let sp = mean_embedding_single(array![[-0.9]].view(), &[0], &pspec, 2).unwrap();
        let ss = mean_embedding_single(array![[-0.9]].view(), &[0], &sspec, 2).unwrap();

        let p = mmd_sq_features(&dp, &sp).unwrap();
        let s = mmd_sq_features(&ds, &ss).unwrap();
        let plain = augmented_loss(&dp, &ds, &sp, &ss, 1.0, GammaTarget::Product).unwrap();
        assert!((plain - (p + s)).abs() < 1e-15);

        let weighted = augmented_loss(&dp, &ds, &sp, &ss, 0.1, GammaTarget::Product).unwrap();
        assert!((weighted - (0.1 * p + s)).abs() < 1e-15);
        let on_sum = augmented_loss(&dp, &ds, &sp, &ss, 0.1, GammaTarget::Sum).unwrap();
        assert!((on_sum - (p + 0.1 * s)).abs() < 1e-15);

        let zero = augmented_loss(&dp, &ds, &dp, &ds, 7.3, GammaTarget::Product).unwrap();
        assert_eq!(zero, 0.0);
        assert!(augmented_loss(&dp, &ds, &sp, &ss, 0.0, GammaTarget::Product).is_err());
    }

    #[test]
    fn gamma_arithmetic_fixed_values() {
        // distances 2.0 (product) and 3.0 (sum) at gamma 0.1 combine to 3.2.
        assert_eq!(0.1f64 * 2.0 + 3.0, 3.2);
    }

    #[test]
    fn embedding_round_trips_through_json() {
        let spec = sum_spec(0.5, 4, 2);
        let data = array![[0.4, 0.2], [0.0, -0.7]];
        let emb = mean_embedding_single(data.view(), &[0, 1], &spec, 2).unwrap();
        let json = serde_json::to_string(&emb).unwrap();
        let back: LabeledMeanEmbedding = serde_json::from_str(&json).unwrap();
        assert_eq!(back.fingerprint(), emb.fingerprint());
        assert_eq!(back.matrix(), emb.matrix());
        assert_eq!(back.sample_count(), emb.sample_count());
    }
}
