//! Eigen-decomposition of the 1-D Gaussian kernel.
//!
//! For |ρ| < 1 the Gaussian kernel factorizes as
//!
//! ```text
//! exp(-ρ(x-y)²/(1-ρ²)) = Σ_c λ_c f_c(x) f_c(y),   λ_c = (1-ρ)ρ^c,
//! ```
//!
//! where `f_c` is a Hermite polynomial damped by a Gaussian envelope. This
//! module evaluates the rescaled eigenfunction features φ_c = √λ_c · f_c
//! through a three-term recursion that never touches the raw polynomials
//! (which overflow past order ~300), plus their input derivatives and the
//! length-scale bookkeeping around ρ.

use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated eigen-expansion for one coordinate: correlation ρ and cutoff
/// order C. The feature vector has length C+1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteBasis {
    rho: f64,
    order: usize,
}

impl HermiteBasis {
    /// Requires 0 < ρ < 1 (expansion validity).
    pub fn new(rho: f64, order: usize) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 || rho >= 1.0 {
            return Err(Error::invalid(format!(
                "rho must lie in the open interval (0, 1), got {rho}"
            )));
        }
        Ok(HermiteBasis { rho, order })
    }

    /// Basis whose induced kernel is the Gaussian kernel with length scale `l`.
    ///
    /// ρ outside [1e-6, 1-1e-6] is clamped, since the boundaries make the
    /// expansion degenerate.
    pub fn from_length_scale(l: f64, order: usize) -> Result<Self> {
        let rho = rho_from_length_scale(l)?;
        let clamped = rho.clamp(RHO_MIN, RHO_MAX);
        HermiteBasis::new(clamped, order)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn feature_len(&self) -> usize {
        self.order + 1
    }
}

/// Clamp bounds applied by callers that derive ρ from data.
pub const RHO_MIN: f64 = 1e-6;
pub const RHO_MAX: f64 = 1.0 - 1e-6;

/// Solve ρ/(1-ρ²) = 1/(2l²) for ρ ∈ (0, 1).
///
/// With a = 1/(2l²) the positive root of aρ² + ρ - a is
/// ρ = (-1 + √(1+4a²))/(2a), evaluated here in the conjugate form
/// 2a/(1 + √(1+4a²)) which stays accurate as a → 0.
pub fn rho_from_length_scale(l: f64) -> Result<f64> {
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::invalid(format!(
            "length scale must be positive and finite, got {l}"
        )));
    }
    let a = 1.0 / (2.0 * l * l);
    Ok(2.0 * a / (1.0 + (1.0 + 4.0 * a * a).sqrt()))
}

/// Inverse of [`rho_from_length_scale`]: the length scale implied by ρ.
pub fn length_scale_from_rho(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho <= 0.0 || rho >= 1.0 {
        return Err(Error::invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    let a = rho / (1.0 - rho * rho);
    Ok((1.0 / (2.0 * a)).sqrt())
}

/// The c-th eigenvalue λ_c = (1-ρ)ρ^c.
pub fn eigenvalue(c: usize, rho: f64) -> f64 {
    (1.0 - rho) * rho.powi(c as i32)
}

/// Rescaled eigenfunction features φ_c(x) = √λ_c f_c(x) for c = 0..=C.
///
/// Seeds φ_0, φ_1 in closed form and advances with
/// φ_{k+1} = √(ρ/(2(k+1)))·2x·φ_k − ρ·√(k/(k+1))·φ_{k-1}.
/// Every entry satisfies |φ_c(x)| ≤ 1, so the recursion is stable at any
/// order.
pub fn hp_features(x: f64, basis: &HermiteBasis) -> Result<Vec<f64>> {
    let mut out = vec![0.0; basis.feature_len()];
    hp_features_into(x, basis, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`hp_features`]; `out` must have length C+1.
pub fn hp_features_into(x: f64, basis: &HermiteBasis, out: &mut [f64]) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("input must be finite, got {x}")));
    }
    debug_assert_eq!(out.len(), basis.feature_len());
    let rho = basis.rho;
    let envelope = (1.0 - rho * rho).powf(0.25) * (-rho * x * x / (1.0 + rho)).exp();
    out[0] = envelope;
    if basis.order == 0 {
        return Ok(());
    }
    out[1] = (rho / 2.0).sqrt() * 2.0 * x * envelope;
    for k in 1..basis.order {
        let a = (rho / (2.0 * (k as f64 + 1.0))).sqrt() * 2.0 * x;
        let b = rho * (k as f64 / (k as f64 + 1.0)).sqrt();
        out[k + 1] = a * out[k] - b * out[k - 1];
    }
    Ok(())
}

/// Features and their derivatives dφ_c/dx, via the differentiated recursion.
pub fn hp_features_with_grad(x: f64, basis: &HermiteBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = basis.feature_len();
    let mut phi = vec![0.0; len];
    let mut dphi = vec![0.0; len];
    hp_features_with_grad_into(x, basis, &mut phi, &mut dphi)?;
    Ok((phi, dphi))
}

/// Allocation-free variant of [`hp_features_with_grad`].
pub fn hp_features_with_grad_into(
    x: f64,
    basis: &HermiteBasis,
    phi: &mut [f64],
    dphi: &mut [f64],
) -> Result<()> {
    hp_features_into(x, basis, phi)?;
    let rho = basis.rho;
    // dφ_0 = -(2ρx/(1+ρ)) φ_0;  φ_1 = √(ρ/2)·2x·φ_0 differentiates by product rule.
    dphi[0] = -(2.0 * rho * x / (1.0 + rho)) * phi[0];
    if basis.order == 0 {
        return Ok(());
    }
    let s1 = (rho / 2.0).sqrt();
    dphi[1] = s1 * (2.0 * phi[0] + 2.0 * x * dphi[0]);
    for k in 1..basis.order {
        let a = (rho / (2.0 * (k as f64 + 1.0))).sqrt();
        let b = rho * (k as f64 / (k as f64 + 1.0)).sqrt();
        dphi[k + 1] = a * (2.0 * phi[k] + 2.0 * x * dphi[k]) - b * dphi[k - 1];
    }
    Ok(())
}

/// Median of pairwise Euclidean distances over distinct pairs i < j.
///
/// When n(n-1)/2 exceeds `max_pairs`, that many pairs are drawn uniformly
/// with the provided generator instead. Errors if fewer than two rows are
/// given or if the median distance is zero (degenerate data; supply a length
/// scale explicitly in that case).
pub fn median_heuristic<R: Rng>(
    data: ArrayView2<'_, f64>,
    max_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "median heuristic needs at least 2 rows, got {n}"
        )));
    }
    let total_pairs = n * (n - 1) / 2;
    let mut dists: Vec<f64> = if total_pairs <= max_pairs {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| row_distance(&data, i, j))
            .collect()
    } else {
        (0..max_pairs)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                row_distance(&data, i, j)
            })
            .collect()
    };
    dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median <= 0.0 {
        return Err(Error::DegenerateData(
            "median pairwise distance is zero; supply a length scale explicitly".into(),
        ));
    }
    Ok(median)
}

fn row_distance(data: &ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    let a = data.row(i);
    let b = data.row(j);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
