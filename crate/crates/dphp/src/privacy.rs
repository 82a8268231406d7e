//! Sensitivity accounting and Gaussian-mechanism noise calibration.
//!
//! Every labeled mean embedding here has replace-one sensitivity at most 2/m
//! in Frobenius norm, because each per-sample feature vector has norm at most
//! one and the one-hot label selects a single column. Noise is calibrated
//! either by the classical σ = √(2 ln(1.25/δ))/ε rule (valid for ε ≤ 1) or by
//! bisecting the exact Gaussian-mechanism condition
//!
//! ```text
//! Φ(1/(2σ) − εσ) − e^ε Φ(−1/(2σ) − εσ) ≤ δ      (unit sensitivity)
//! ```
//!
//! Repeated product-embedding releases compose as one Gaussian mechanism of
//! sensitivity Δ√E, which gives the per-release σ a √E factor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::embedding::{EmbeddingPart, LabeledMeanEmbedding};
use crate::error::{Error, Result};

/// Default fraction of ε (and δ) assigned to the one-shot sum embedding.
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;

/// Total (ε, δ) target, its split, and the number of product releases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon_total: f64,
    pub delta_total: f64,
    /// Fraction of ε (and of δ) spent on the sum embedding; the remainder is
    /// spread over the product-embedding releases.
    pub split_fraction: f64,
    /// Number of composed product-embedding releases, one per epoch. Zero
    /// means the product part is unused.
    pub num_product_releases: usize,
}

impl PrivacyBudget {
    pub fn new(
        epsilon_total: f64,
        delta_total: f64,
        split_fraction: f64,
        num_product_releases: usize,
    ) -> Result<Self> {
        if !epsilon_total.is_finite() || epsilon_total <= 0.0 {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon_total}"
            )));
        }
        if !delta_total.is_finite() || delta_total <= 0.0 || delta_total >= 1.0 {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {delta_total}"
            )));
        }
        if !split_fraction.is_finite() || split_fraction <= 0.0 || split_fraction >= 1.0 {
            return Err(Error::invalid(format!(
                "split fraction must lie strictly inside (0, 1), got {split_fraction}"
            )));
        }
        Ok(PrivacyBudget {
            epsilon_total,
            delta_total,
            split_fraction,
            num_product_releases,
        })
    }
}

/// How σ was derived from the (ε, δ) target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMethod {
    Classical,
    Analytic,
}

/// Noise multiplier σ for a unit-sensitivity release, together with the
/// sensitivity it will be scaled by at noise time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub sigma: f64,
    pub sensitivity: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub method: CalibrationMethod,
}

impl NoiseCalibration {
    /// Per-entry noise standard deviation σ·Δ.
    pub fn noise_std(&self) -> f64 {
        self.sigma * self.sensitivity
    }

    pub fn with_sensitivity(mut self, sensitivity: f64) -> Result<Self> {
        if !sensitivity.is_finite() || sensitivity < 0.0 {
            return Err(Error::invalid(format!(
                "sensitivity must be non-negative, got {sensitivity}"
            )));
        }
        self.sensitivity = sensitivity;
        Ok(self)
    }

    /// Zero-noise calibration; the non-private code path of the trainer.
    pub fn noiseless() -> Self {
        NoiseCalibration {
            sigma: 0.0,
            sensitivity: 0.0,
            epsilon: f64::INFINITY,
            delta: 1.0,
            method: CalibrationMethod::Analytic,
        }
    }
}

/// Replace-one Frobenius sensitivity of a labeled mean embedding: 2/m for
/// the sum, product, and random-Fourier parts alike (each per-sample feature
/// vector has norm ≤ 1).
pub fn sensitivity_bound(sample_count: usize, _part: EmbeddingPart) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(2.0 / sample_count as f64)
}

/// Standard normal CDF.
fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// δ achieved by a unit-sensitivity Gaussian mechanism with multiplier σ at
/// privacy level ε. Strictly decreasing in σ.
pub fn gaussian_mechanism_delta(sigma: f64, epsilon: f64) -> f64 {
    normal_cdf(1.0 / (2.0 * sigma) - epsilon * sigma)
        - epsilon.exp() * normal_cdf(-1.0 / (2.0 * sigma) - epsilon * sigma)
}

fn validate_target(epsilon: f64, delta: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Noise multiplier for one unit-sensitivity release at (ε, δ).
pub fn calibrate_sigma(
    epsilon: f64,
    delta: f64,
    method: CalibrationMethod,
) -> Result<NoiseCalibration> {
    validate_target(epsilon, delta)?;
    let sigma = match method {
        CalibrationMethod::Classical => {
            if epsilon > 1.0 {
                return Err(Error::Unsupported(format!(
                    "classical calibration is only valid for epsilon <= 1 (got {epsilon}); \
                     use the analytic method"
                )));
            }
            (2.0 * (1.25 / delta).ln()).sqrt() / epsilon
        }
        CalibrationMethod::Analytic => analytic_sigma(epsilon, delta)?,
    };
    Ok(NoiseCalibration {
        sigma,
        sensitivity: 1.0,
        epsilon,
        delta,
        method,
    })
}

/// Smallest σ satisfying the exact Gaussian-mechanism condition, by
/// bisection on the (monotone) achieved δ.
fn analytic_sigma(epsilon: f64, delta: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut grow = 0;
    while gaussian_mechanism_delta(hi, epsilon) > delta {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Numeric(
                "analytic calibration failed to bracket from above".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    let mut shrink = 0;
    while gaussian_mechanism_delta(lo, epsilon) <= delta {
        lo /= 2.0;
        shrink += 1;
        if shrink > 1100 {
            // δ(σ) stays below the target all the way down to subnormal σ;
            // the condition is slack even with no noise at this (ε, δ).
            return Ok(0.0);
        }
    }
    // Invariant: δ(lo) > delta >= δ(hi). Bisect until the interval collapses
    // to adjacent floats; return the satisfying endpoint.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gaussian_mechanism_delta(mid, epsilon) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Split (ε, δ) into the sum-embedding share and the product share.
pub fn split_budget(budget: &PrivacyBudget) -> ((f64, f64), (f64, f64)) {
    let f = budget.split_fraction;
    (
        (budget.epsilon_total * f, budget.delta_total * f),
        (
            budget.epsilon_total * (1.0 - f),
            budget.delta_total * (1.0 - f),
        ),
    )
}

/// Per-release noise multiplier for E composed product-embedding releases at
/// (ε₂, δ₂): the E releases behave as one Gaussian mechanism of sensitivity
/// Δ√E, so each release carries σ(ε₂, δ₂)·√E.
pub fn compose_product_releases(
    num_releases: usize,
    epsilon2: f64,
    delta2: f64,
) -> Result<NoiseCalibration> {
    if num_releases == 0 {
        return Err(Error::invalid(
            "composition needs at least one release; set the product budget unused instead",
        ));
    }
    let base = calibrate_sigma(epsilon2, delta2, CalibrationMethod::Analytic)?;
    Ok(NoiseCalibration {
        sigma: base.sigma * (num_releases as f64).sqrt(),
        ..base
    })
}

/// Add i.i.d. N(0, (σΔ)²) noise to every matrix entry, in row-major order.
///
/// Refuses when the calibration's sensitivity does not match the embedding's
/// bound, so nothing can be released under-noised by accident.
pub fn privatize<R: Rng>(
    embedding: &LabeledMeanEmbedding,
    calibration: &NoiseCalibration,
    rng: &mut R,
) -> Result<LabeledMeanEmbedding> {
    let required = sensitivity_bound(embedding.sample_count(), embedding.part())?;
    let rel = (calibration.sensitivity - required).abs() / required;
    if rel > 1e-12 {
        return Err(Error::SensitivityMismatch {
            calibrated: calibration.sensitivity,
            required,
        });
    }
    let std = calibration.noise_std();
    let (rows, cols) = (embedding.feature_len(), embedding.num_classes());
    let mut noisy = embedding.matrix().to_owned();
    if std > 0.0 {
        let normal = Normal::new(0.0, std).map_err(|e| Error::Numeric(e.to_string()))?;
        for i in 0..rows {
            for j in 0..cols {
                noisy[[i, j]] += normal.sample(rng);
            }
        }
    } else {
        // Keep the draw count identical so downstream streams never shift.
        for _ in 0..rows * cols {
            let _: f64 = rng.gen();
        }
    }
    Ok(embedding.clone().with_noise(noisy, std))
}

/// Noisy class frequencies for the optional private label sampler.
///
/// The frequency vector counts/m changes by √2/m under replacement of one
/// record, so a Gaussian release at that sensitivity is (ε, δ)-DP. Negative
/// noisy entries are clamped and the vector renormalized.
pub fn release_class_frequencies<R: Rng>(
    labels: &[usize],
    num_classes: usize,
    epsilon: f64,
    delta: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::invalid("cannot release frequencies of no labels"));
    }
    let m = labels.len() as f64;
    let mut freq = vec![0.0; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::invalid(format!(
                "label {y} out of range for {num_classes} classes"
            )));
        }
        freq[y] += 1.0 / m;
    }
    let calib = calibrate_sigma(epsilon, delta, CalibrationMethod::Analytic)?
        .with_sensitivity(std::f64::consts::SQRT_2 / m)?;
    let normal = Normal::new(0.0, calib.noise_std()).map_err(|e| Error::Numeric(e.to_string()))?;
    for f in &mut freq {
        *f = (*f + normal.sample(rng)).max(0.0);
    }
    let total: f64 = freq.iter().sum();
    if total <= 0.0 {
        return Ok(vec![1.0 / num_classes as f64; num_classes]);
    }
    for f in &mut freq {
        *f /= total;
    }
    Ok(freq)
}

/// Noise parameters echoed into run reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub epsilon_total: f64,
    pub delta_total: f64,
    pub split_fraction: f64,
    pub num_product_releases: usize,
    pub sigma_sum: f64,
    pub sigma_product_per_release: f64,
    pub method: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::mean_embedding_single;
    use crate::featuremaps::{FeatureMapSpec, ProductMapSpec, RffSpec, SumMapSpec};
    use crate::hermite::HermiteBasis;
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sensitivity_bound_values() {
        assert_eq!(sensitivity_bound(100, EmbeddingPart::Sum).unwrap(), 0.02);
        assert_eq!(sensitivity_bound(1, EmbeddingPart::Product).unwrap(), 2.0);
        assert!(sensitivity_bound(0, EmbeddingPart::Rff).is_err());
    }

    #[test]
    fn empirical_sensitivity_never_exceeds_bound() {
        // Replace-one neighbors at m = 50 must stay below 0.04 in Frobenius
        // norm, for each embedding part.
        let m = 50;
        let dim = 3;
        let num_classes = 2;
        let basis = HermiteBasis::new(0.6, 8).unwrap();
        let specs = vec![
            FeatureMapSpec::Sum(SumMapSpec::shared(basis, dim).unwrap()),
            FeatureMapSpec::Product(ProductMapSpec::new(basis, vec![0, 2], dim).unwrap()),
            FeatureMapSpec::RandomFourier(RffSpec::new(dim, 30, 1.0, 7).unwrap()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for spec in specs {
            let mut max_diff: f64 = 0.0;
            for _ in 0..200 {
                let data = Array2::from_shape_fn((m, dim), |_| rng.gen_range(-4.0..4.0));
                let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..num_classes)).collect();
                let mut data2 = data.clone();
                let mut labels2 = labels.clone();
                let idx = rng.gen_range(0..m);
                for d in 0..dim {
                    data2[[idx, d]] = rng.gen_range(-4.0..4.0);
                }
                labels2[idx] = rng.gen_range(0..num_classes);
                let e1 = mean_embedding_single(data.view(), &labels, &spec, num_classes).unwrap();
                let e2 = mean_embedding_single(data2.view(), &labels2, &spec, num_classes).unwrap();
                let diff: f64 = e1
                    .matrix()
                    .iter()
                    .zip(e2.matrix().iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                max_diff = max_diff.max(diff);
            }
            assert!(max_diff <= 2.0 / m as f64, "max diff {max_diff}");
        }
    }

    #[test]
    fn classical_sigma_matches_direct_arithmetic() {
        let calib = calibrate_sigma(1.0, 1e-5, CalibrationMethod::Classical).unwrap();
        let oracle = (2.0 * (1.25f64 / 1e-5).ln()).sqrt();
        assert!((calib.sigma - oracle).abs() < 1e-12);
        assert!((calib.sigma - 4.844805).abs() < 1e-4);
    }

    #[test]
    fn classical_rejects_large_epsilon() {
        assert!(matches!(
            calibrate_sigma(1.5, 1e-5, CalibrationMethod::Classical),
            Err(Error::Unsupported(_))
        ));
        assert!(calibrate_sigma(1.5, 1e-5, CalibrationMethod::Analytic).is_ok());
    }

    #[test]
    fn analytic_sigma_is_tight_and_below_classical() {
        for &(eps, delta) in &[(1.0, 1e-5), (0.5, 1e-6), (1.0, 1e-3), (0.2, 1e-5)] {
            let analytic = calibrate_sigma(eps, delta, CalibrationMethod::Analytic).unwrap();
            let classical = calibrate_sigma(eps, delta, CalibrationMethod::Classical).unwrap();
            assert!(
                analytic.sigma <= classical.sigma,
                "({eps}, {delta}): {} > {}",
                analytic.sigma,
                classical.sigma
            );
            // The condition holds at σ and fails just below: minimality.
            let achieved = gaussian_mechanism_delta(analytic.sigma, eps);
            assert!(achieved <= delta);
            assert!((achieved - delta).abs() <= 1e-9);
            assert!(gaussian_mechanism_delta(0.999 * analytic.sigma, eps) > delta);
        }
    }

    #[test]
    fn analytic_sigma_monotone_in_delta() {
        let loose = calibrate_sigma(1.0, 0.5, CalibrationMethod::Analytic).unwrap();
        let tight = calibrate_sigma(1.0, 1e-5, CalibrationMethod::Analytic).unwrap();
        assert!(loose.sigma < tight.sigma);
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        assert!(calibrate_sigma(0.0, 1e-5, CalibrationMethod::Analytic).is_err());
        assert!(calibrate_sigma(-1.0, 1e-5, CalibrationMethod::Classical).is_err());
        assert!(calibrate_sigma(1.0, 0.0, CalibrationMethod::Analytic).is_err());
        assert!(calibrate_sigma(1.0, 1.0, CalibrationMethod::Analytic).is_err());
    }

    #[test]
    fn budget_split_arithmetic() {
        let half = PrivacyBudget::new(1.0, 1e-5, 0.5, 3).unwrap();
        let ((e1, d1), (e2, d2)) = split_budget(&half);
        assert_eq!((e1, e2), (0.5, 0.5));
        assert!((d1 - 5e-6).abs() < 1e-20 && (d2 - 5e-6).abs() < 1e-20);

        let skew = PrivacyBudget::new(1.0, 1e-5, 0.8, 3).unwrap();
        let ((e1, d1), (e2, d2)) = split_budget(&skew);
        assert!((e1 - 0.8).abs() < 1e-15 && (e2 - 0.2).abs() < 1e-15);
        assert!((d1 - 8e-6).abs() < 1e-20 && (d2 - 2e-6).abs() < 1e-20);
        assert!((e1 + e2 - 1.0).abs() < 1e-15);
        assert!((d1 + d2 - 1e-5).abs() < 1e-20);

        assert!(PrivacyBudget::new(1.0, 1e-5, 1.0, 3).is_err());
        assert!(PrivacyBudget::new(1.0, 1e-5, 0.0, 3).is_err());
    }

    #[test]
    fn composition_reduces_to_single_release() {
        let single = compose_product_releases(1, 0.4, 1e-6).unwrap();
        let base = calibrate_sigma(0.4, 1e-6, CalibrationMethod::Analytic).unwrap();
        assert_eq!(single.sigma, base.sigma);
        assert!(compose_product_releases(0, 0.4, 1e-6).is_err());
    }

    #[test]
    fn four_releases_double_per_release_sigma() {
        let one = compose_product_releases(1, 0.3, 2e-6).unwrap();
        let four = compose_product_releases(4, 0.3, 2e-6).unwrap();
        assert!((four.sigma - 2.0 * one.sigma).abs() < 1e-12);
    }

    #[test]
    fn composition_as_single_mechanism_oracle() {
        // E releases of sensitivity Δ with per-release std σ_per·Δ equal one
        // mechanism of sensitivity Δ√E and multiplier σ_per·Δ/(Δ√E); that
        // multiplier must satisfy the condition at (ε₂, δ₂).
        for &releases in &[2usize, 5, 9] {
            let (eps2, delta2) = (0.25, 3e-6);
            let per = compose_product_releases(releases, eps2, delta2).unwrap();
            let effective = per.sigma / (releases as f64).sqrt();
            let achieved = gaussian_mechanism_delta(effective, eps2);
            assert!(achieved <= delta2 + 1e-12, "E={releases}: {achieved}");
        }
    }

    #[test]
    fn composition_monotone_in_releases_and_epsilon() {
        let a = compose_product_releases(1, 0.3, 1e-6).unwrap().sigma;
        let b = compose_product_releases(2, 0.3, 1e-6).unwrap().sigma;
        let c = compose_product_releases(2, 0.15, 1e-6).unwrap().sigma;
        assert!(a < b && b < c);
    }

    fn toy_embedding(m: usize) -> LabeledMeanEmbedding {
        let spec = FeatureMapSpec::Sum(
            SumMapSpec::shared(HermiteBasis::new(0.5, 9).unwrap(), 2).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((m, 2), |_| rng.gen_range(-1.0..1.0));
        let labels: Vec<usize> = (0..m).map(|i| i % 5).collect();
        mean_embedding_single(data.view(), &labels, &spec, 5).unwrap()
    }

    #[test]
    fn privatize_with_zero_sigma_is_identity() {
        let emb = toy_embedding(20);
        let calib = NoiseCalibration {
            sigma: 0.0,
            sensitivity: sensitivity_bound(20, emb.part()).unwrap(),
            epsilon: f64::INFINITY,
            delta: 1.0,
            method: CalibrationMethod::Analytic,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noisy = privatize(&emb, &calib, &mut rng).unwrap();
        assert_eq!(noisy.matrix(), emb.matrix());
        assert!(noisy.is_privatized());
        assert_eq!(noisy.sample_count(), emb.sample_count());
        assert_eq!(noisy.fingerprint(), emb.fingerprint());
    }

    #[test]
    fn privatize_refuses_wrong_sensitivity() {
        let emb = toy_embedding(20);
        let calib = calibrate_sigma(1.0, 1e-5, CalibrationMethod::Analytic)
            .unwrap()
            .with_sensitivity(0.5)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            privatize(&emb, &calib, &mut rng),
            Err(Error::SensitivityMismatch { .. })
        ));
    }

    #[test]
    fn privatize_noise_scale_is_calibrated() {
        // 10 classes × large feature length gives ~1e5 entries.
        let spec = FeatureMapSpec::Sum(
            SumMapSpec::shared(HermiteBasis::new(0.5, 999).unwrap(), 10).unwrap(),
        );
        let m = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((m, 10), |_| rng.gen_range(-1.0..1.0));
        let labels: Vec<usize> = (0..m).map(|i| i % 10).collect();
        let emb = mean_embedding_single(data.view(), &labels, &spec, 10).unwrap();
        let calib = calibrate_sigma(1.0, 1e-5, CalibrationMethod::Analytic)
            .unwrap()
            .with_sensitivity(sensitivity_bound(m, emb.part()).unwrap())
            .unwrap();
        let noisy = privatize(&emb, &calib, &mut rng).unwrap();
        let n = emb.matrix().len() as f64;
        let var: f64 = noisy
            .matrix()
            .iter()
            .zip(emb.matrix().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        let expected = calib.noise_std();
        assert!(n >= 1e5);
        assert!(
            (var.sqrt() - expected).abs() / expected < 0.02,
            "std {} vs {expected}",
            var.sqrt()
        );

        // Privatizing twice doubles the variance.
        let twice = privatize(&noisy, &calib, &mut rng).unwrap();
        let var2: f64 = twice
            .matrix()
            .iter()
            .zip(emb.matrix().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        let expected2 = 2.0 * expected * expected;
        assert!((var2 - expected2).abs() / expected2 < 0.03, "var {var2} vs {expected2}");
    }

    #[test]
    fn privatize_is_deterministic_given_seed() {
        let emb = toy_embedding(15);
        let calib = calibrate_sigma(0.7, 1e-5, CalibrationMethod::Analytic)
            .unwrap()
            .with_sensitivity(sensitivity_bound(15, emb.part()).unwrap())
            .unwrap();
        let a = privatize(&emb, &calib, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = privatize(&emb, &calib, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn class_frequency_release_is_a_distribution() {
        let labels: Vec<usize> = (0..500).map(|i| i % 3).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let freq = release_class_frequencies(&labels, 3, 0.5, 1e-6, &mut rng).unwrap();
        assert_eq!(freq.len(), 3);
        assert!((freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(freq.iter().all(|&f| f >= 0.0));
        // With 500 samples and moderate ε the noise is small.
        for f in &freq {
            assert!((f - 1.0 / 3.0).abs() < 0.1, "{freq:?}");
        }
    }
}
