//! Grid Gaussian mixture ground truth.
//!
//! Clusters sit on a g×g grid with isotropic standard deviation σ. There are
//! g classes; cluster (row r, col c) belongs to class (r + c) mod g, so every
//! class owns exactly one cluster per row and its clusters are spread across
//! the grid. Sample quality is scored by the negative log-likelihood under
//! the known mixture and by per-mode coverage counts.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid mixture description: g² clusters, g classes, shared isotropic σ
/// (standard deviation, so the covariance is σ²·I).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    grid: usize,
    spacing: f64,
    origin: f64,
    std: f64,
}

impl Default for GmmSpec {
    /// 25 clusters on the {0..4}² integer grid, σ = 0.2, 5 classes.
    fn default() -> Self {
        GmmSpec {
            grid: 5,
            spacing: 1.0,
            origin: 0.0,
            std: 0.2,
        }
    }
}

impl GmmSpec {
    pub fn new(grid: usize, spacing: f64, origin: f64, std: f64) -> Result<Self> {
        if grid < 2 {
            return Err(Error::invalid("grid must be at least 2×2"));
        }
        if !(spacing.is_finite() && spacing > 0.0) || !(std.is_finite() && std > 0.0) {
            return Err(Error::invalid("spacing and std must be positive"));
        }
        Ok(GmmSpec {
            grid,
            spacing,
            origin,
            std,
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn num_clusters(&self) -> usize {
        self.grid * self.grid
    }

    pub fn num_classes(&self) -> usize {
        self.grid
    }

    /// Cluster index is row-major over the grid.
    pub fn mean(&self, cluster: usize) -> (f64, f64) {
        let row = cluster / self.grid;
        let col = cluster % self.grid;
        (
            self.origin + self.spacing * row as f64,
            self.origin + self.spacing * col as f64,
        )
    }

    /// Latin-square assignment: one cluster per row for every class.
    pub fn class_of(&self, cluster: usize) -> usize {
        let row = cluster / self.grid;
        let col = cluster % self.grid;
        (row + col) % self.grid
    }

    pub fn clusters_of_class(&self, class: usize) -> Vec<usize> {
        (0..self.num_clusters())
            .filter(|&c| self.class_of(c) == class)
            .collect()
    }

    /// A-priori feature bounds that contain essentially all samples
    /// (grid extent padded by 5σ on both sides).
    pub fn feature_bounds(&self) -> Vec<(f64, f64)> {
        let lo = self.origin - 5.0 * self.std;
        let hi = self.origin + self.spacing * (self.grid - 1) as f64 + 5.0 * self.std;
        vec![(lo, hi); 2]
    }
}

/// Draw `n` points from a single cluster.
pub fn sample_cluster<R: Rng>(
    spec: &GmmSpec,
    cluster: usize,
    n: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if cluster >= spec.num_clusters() {
        return Err(Error::invalid(format!(
            "cluster {cluster} out of range for {}",
            spec.num_clusters()
        )));
    }
    let (mx, my) = spec.mean(cluster);
    let mut out = Array2::zeros((n, 2));
    for i in 0..n {
        let zx: f64 = StandardNormal.sample(rng);
        let zy: f64 = StandardNormal.sample(rng);
        out[[i, 0]] = mx + spec.std * zx;
        out[[i, 1]] = my + spec.std * zy;
    }
    Ok(out)
}

/// Draw `n_total` labeled samples, split equally over clusters; any
/// remainder goes to the lowest-indexed clusters, one extra sample each.
pub fn gmm_sample<R: Rng>(
    spec: &GmmSpec,
    n_total: usize,
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<usize>)> {
    let clusters = spec.num_clusters();
    let base = n_total / clusters;
    let remainder = n_total % clusters;
    let mut data = Array2::zeros((n_total, 2));
    let mut labels = Vec::with_capacity(n_total);
    let mut row = 0;
    for cluster in 0..clusters {
        let count = base + usize::from(cluster < remainder);
        let chunk = sample_cluster(spec, cluster, count, rng)?;
        data.slice_mut(ndarray::s![row..row + count, ..]).assign(&chunk);
        labels.extend(std::iter::repeat(spec.class_of(cluster)).take(count));
        row += count;
    }
    Ok((data, labels))
}

/// Shuffle and split into (train, test) with the given test fraction.
pub fn train_test_split<R: Rng>(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    test_fraction: f64,
    rng: &mut R,
) -> Result<((Array2<f64>, Vec<usize>), (Array2<f64>, Vec<usize>))> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::invalid("test fraction must lie in [0, 1)"));
    }
    let n = data.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    let take = |idx: &[usize]| {
        let mut x = Array2::zeros((idx.len(), data.ncols()));
        let mut y = Vec::with_capacity(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            x.row_mut(row).assign(&data.row(i));
            y.push(labels[i]);
        }
        (x, y)
    };
    let test = take(&order[..n_test]);
    let train = take(&order[n_test..]);
    Ok((train, test))
}

/// Mean negative log-likelihood of labeled samples under the mixture:
/// −log Σ_{j ∈ clusters(y)} (1/g²)·N(x | μ_j, σ²I₂), log-sum-exp stabilized.
pub fn gmm_nll(data: ArrayView2<'_, f64>, labels: &[usize], spec: &GmmSpec) -> Result<f64> {
    if data.nrows() == 0 {
        return Err(Error::invalid("cannot score an empty sample set"));
    }
    if data.ncols() != 2 || labels.len() != data.nrows() {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.ncols(),
        });
    }
    let var = spec.std * spec.std;
    let log_norm = -(spec.num_clusters() as f64).ln()
        - (2.0 * std::f64::consts::PI * var).ln();
    let mut total = 0.0;
    for (row, &label) in data.rows().into_iter().zip(labels) {
        if label >= spec.num_classes() {
            return Err(Error::invalid(format!(
                "label {label} out of range for {} classes",
                spec.num_classes()
            )));
        }
        let log_terms: Vec<f64> = spec
            .clusters_of_class(label)
            .into_iter()
            .map(|j| {
                let (mx, my) = spec.mean(j);
                let d2 = (row[0] - mx).powi(2) + (row[1] - my).powi(2);
                log_norm - d2 / (2.0 * var)
            })
            .collect();
        let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + log_terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        total -= lse;
    }
    Ok(total / data.nrows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoverageParams {
    /// Samples count toward a mode within this radius of its mean.
    pub radius: f64,
    /// A mode is covered once this many same-class samples are inside.
    pub min_count: usize,
}

impl ModeCoverageParams {
    pub fn for_spec(spec: &GmmSpec) -> Self {
        ModeCoverageParams {
            radius: 2.0 * spec.std(),
            min_count: 3,
        }
    }
}

/// Number of mixture modes with at least `min_count` samples of the mode's
/// class within `radius` of its mean.
pub fn mode_coverage(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    spec: &GmmSpec,
    params: ModeCoverageParams,
) -> Result<usize> {
    if data.ncols() != 2 && data.nrows() > 0 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.ncols(),
        });
    }
    let r2 = params.radius * params.radius;
    let mut counts = vec![0usize; spec.num_clusters()];
    for (row, &label) in data.rows().into_iter().zip(labels) {
        if label >= spec.num_classes() {
            continue;
        }
        for cluster in spec.clusters_of_class(label) {
            let (mx, my) = spec.mean(cluster);
            let d2 = (row[0] - mx).powi(2) + (row[1] - my).powi(2);
            if d2 <= r2 {
                counts[cluster] += 1;
            }
        }
    }
    Ok(counts.iter().filter(|&&c| c >= params.min_count).count())
}
