//! Marginal-accuracy and downstream-classifier metrics.

use std::collections::{HashMap, HashSet};

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataeval::tabular::{Cell, Table};
use crate::error::{Error, Result};

/// Mean total-variation distance over α-column marginals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaWayReport {
    pub alpha: usize,
    pub mean_tv: f64,
    pub subsets_evaluated: usize,
    /// Whether every subset was evaluated or a seeded sample of them.
    pub exhaustive: bool,
}

/// Total variation ½‖p−q‖₁ between two histograms over arbitrary keys.
pub fn histogram_tv<K: std::hash::Hash + Eq>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut tv = 0.0;
    for (key, &pv) in p {
        tv += (pv - q.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, &qv) in q {
        if !p.contains_key(key) {
            tv += qv;
        }
    }
    tv / 2.0
}

fn discrete_feature_positions(table: &Table) -> Result<Vec<usize>> {
    let label_idx = table.schema.label_index()?;
    let mut positions = Vec::new();
    for (i, col) in table.schema.columns.iter().enumerate() {
        if i == label_idx {
            continue;
        }
        if !col.kind.is_discrete() {
            return Err(Error::Schema(format!(
                "column {:?} is numeric; marginal accuracy needs discretized data",
                col.name
            )));
        }
        positions.push(i);
    }
    Ok(positions)
}

fn marginal_histogram(table: &Table, cols: &[usize]) -> HashMap<Vec<usize>, f64> {
    let mut hist: HashMap<Vec<usize>, f64> = HashMap::new();
    let weight = 1.0 / table.len() as f64;
    for row in &table.rows {
        let key: Vec<usize> = cols
            .iter()
            .map(|&c| match row[c] {
                Cell::Cat(code) => code,
                Cell::Num(_) => unreachable!("columns pre-checked discrete"),
            })
            .collect();
        *hist.entry(key).or_insert(0.0) += weight;
    }
    hist
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: usize = 1;
    for i in 0..k {
        result = result.saturating_mul(n - i) / (i + 1);
    }
    result
}

/// All k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Mean TV distance between real and synthetic α-way marginals over the
/// discrete feature columns. Enumerates every subset when there are at most
/// `max_subsets`, otherwise draws that many distinct subsets with the given
/// generator.
pub fn alpha_way_error<R: Rng>(
    real: &Table,
    synth: &Table,
    alpha: usize,
    max_subsets: usize,
    rng: &mut R,
) -> Result<AlphaWayReport> {
    if real.schema != synth.schema {
        return Err(Error::Schema(
            "real and synthetic tables use different schemas".into(),
        ));
    }
    if real.is_empty() || synth.is_empty() {
        return Err(Error::invalid("both tables must be non-empty"));
    }
    let positions = discrete_feature_positions(real)?;
    if alpha == 0 || alpha > positions.len() {
        return Err(Error::invalid(format!(
            "alpha {alpha} out of range for {} discrete columns",
            positions.len()
        )));
    }
    if max_subsets == 0 {
        return Err(Error::invalid("subset cap must be positive"));
    }
    let total = binomial(positions.len(), alpha);
    let (subsets, exhaustive): (Vec<Vec<usize>>, bool) = if total <= max_subsets {
        (combinations(positions.len(), alpha), true)
    } else {
        let mut chosen: HashSet<Vec<usize>> = HashSet::new();
        while chosen.len() < max_subsets {
            let pick = crate::featuremaps::subsample_dims(positions.len(), alpha, rng)?;
            chosen.insert(pick);
        }
        let mut list: Vec<Vec<usize>> = chosen.into_iter().collect();
        list.sort();
        (list, false)
    };
    let mut total_tv = 0.0;
    for subset in &subsets {
        let cols: Vec<usize> = subset.iter().map(|&i| positions[i]).collect();
        let p = marginal_histogram(real, &cols);
        let q = marginal_histogram(synth, &cols);
        total_tv += histogram_tv(&p, &q);
    }
    Ok(AlphaWayReport {
        alpha,
        mean_tv: total_tv / subsets.len() as f64,
        subsets_evaluated: subsets.len(),
        exhaustive,
    })
}

/// Metrics of the built-in downstream classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DownstreamReport {
    pub accuracy: f64,
    /// Rank-statistic AUC; binary tasks only.
    pub roc_auc: Option<f64>,
    pub f1_macro: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

/// Multinomial logistic regression by full-batch gradient descent
/// (deterministic: zero initialization, fixed epoch count), trained on one
/// set and scored on the other.
pub fn downstream_logreg(
    train_x: ArrayView2<'_, f64>,
    train_y: &[usize],
    test_x: ArrayView2<'_, f64>,
    test_y: &[usize],
    num_classes: usize,
    epochs: usize,
    learning_rate: f64,
) -> Result<DownstreamReport> {
    let n = train_x.nrows();
    let d = train_x.ncols();
    if n == 0 || test_x.nrows() == 0 {
        return Err(Error::invalid("train and test sets must be non-empty"));
    }
    if train_y.len() != n || test_y.len() != test_x.nrows() || test_x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: train_y.len(),
        });
    }
    if num_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if train_y.iter().chain(test_y).any(|&y| y >= num_classes) {
        return Err(Error::invalid("label out of range"));
    }

    let mut weights = Array2::<f64>::zeros((d, num_classes));
    let mut bias = Array1::<f64>::zeros(num_classes);
    let softmax_scores = |x: ArrayView2<'_, f64>, w: &Array2<f64>, b: &Array1<f64>| {
        let mut scores = x.dot(w);
        scores += b;
        for mut row in scores.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row.mapv_inplace(|v| v / total);
        }
        scores
    };
    for _ in 0..epochs {
        let probs = softmax_scores(train_x, &weights, &bias);
        // Cross-entropy gradient: (P − Y)/n.
        let mut delta = probs;
        for (i, &y) in train_y.iter().enumerate() {
            delta[[i, y]] -= 1.0;
        }
        delta /= n as f64;
        let grad_w = train_x.t().dot(&delta);
        let grad_b = delta.sum_axis(ndarray::Axis(0));
        weights.zip_mut_with(&grad_w, |w, &g| *w -= learning_rate * g);
        bias.zip_mut_with(&grad_b, |b, &g| *b -= learning_rate * g);
    }

    let probs = softmax_scores(test_x, &weights, &bias);
    let predictions: Vec<usize> = probs
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(k, _)| k)
                .unwrap_or(0)
        })
        .collect();
    let accuracy = predictions
        .iter()
        .zip(test_y)
        .filter(|(p, y)| p == y)
        .count() as f64
        / test_y.len() as f64;

    // Macro F1 over classes present in the test labels.
    let mut f1_total = 0.0;
    let mut f1_classes = 0;
    for k in 0..num_classes {
        let tp = predictions
            .iter()
            .zip(test_y)
            .filter(|(p, y)| **p == k && **y == k)
            .count() as f64;
        let fp = predictions
            .iter()
            .zip(test_y)
            .filter(|(p, y)| **p == k && **y != k)
            .count() as f64;
        let fn_ = predictions
            .iter()
            .zip(test_y)
            .filter(|(p, y)| **p != k && **y == k)
            .count() as f64;
        if tp + fn_ == 0.0 {
            continue; // class absent from the test set
        }
        f1_classes += 1;
        if tp > 0.0 {
            let precision = tp / (tp + fp);
            let recall = tp / (tp + fn_);
            f1_total += 2.0 * precision * recall / (precision + recall);
        }
    }
    let f1_macro = if f1_classes > 0 {
        f1_total / f1_classes as f64
    } else {
        0.0
    };

    let roc_auc = if num_classes == 2 {
        Some(rank_auc(
            &probs.column(1).to_vec(),
            &test_y.iter().map(|&y| y == 1).collect::<Vec<bool>>(),
        ))
    } else {
        None
    };

    Ok(DownstreamReport {
        accuracy,
        roc_auc,
        f1_macro,
        epochs,
        learning_rate,
    })
}

/// Mann–Whitney AUC with midranks for ties; 0.5 for degenerate score sets.
fn rank_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = ranks
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(r, _)| r)
        .sum();
    (rank_sum - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataeval::tabular::{Column, ColumnKind, TabularSchema};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn discrete_schema(cols: usize, cardinality: usize) -> TabularSchema {
        let mut columns: Vec<Column> = (0..cols)
            .map(|i| Column {
                name: format!("c{i}"),
                kind: ColumnKind::Categorical { cardinality },
            })
            .collect();
        columns.push(Column {
            name: "y".into(),
            kind: ColumnKind::Categorical { cardinality: 2 },
        });
        TabularSchema {
            columns,
            label: "y".into(),
        }
    }

    fn table_from_codes(schema: &TabularSchema, rows: Vec<Vec<usize>>) -> Table {
        Table {
            schema: schema.clone(),
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(Cell::Cat).collect())
                .collect(),
        }
    }

    #[test]
    fn identical_tables_have_zero_error() {
        let schema = discrete_schema(3, 2);
        let rows = vec![vec![0, 1, 0, 0], vec![1, 1, 1, 1], vec![0, 0, 1, 0]];
        let t = table_from_codes(&schema, rows);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = alpha_way_error(&t, &t, 2, 1000, &mut rng).unwrap();
        assert_eq!(report.mean_tv, 0.0);
        assert!(report.exhaustive);
        assert_eq!(report.subsets_evaluated, 3);
    }

    #[test]
    fn disjoint_single_column_support_maximizes_tv() {
        let schema = discrete_schema(1, 4);
        let real = table_from_codes(&schema, vec![vec![0, 0], vec![1, 0]]);
        let synth = table_from_codes(&schema, vec![vec![2, 0], vec![3, 0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = alpha_way_error(&real, &synth, 1, 10, &mut rng).unwrap();
        assert_eq!(report.mean_tv, 1.0);
    }

    #[test]
    fn two_column_contingency_matches_hand_computation() {
        let schema = discrete_schema(2, 2);
        // Real: (0,0)×2, (1,1)×2 → cells {00: .5, 11: .5}.
        // Synth: (0,0), (0,1), (1,0), (1,1) → all cells .25.
        // TV = ½(|.5−.25| + |0−.25| + |0−.25| + |.5−.25|) = 0.5.
        let real = table_from_codes(
            &schema,
            vec![vec![0, 0, 0], vec![0, 0, 0], vec![1, 1, 0], vec![1, 1, 0]],
        );
        let synth = table_from_codes(
            &schema,
            vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0]],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = alpha_way_error(&real, &synth, 2, 10, &mut rng).unwrap();
        assert!((report.mean_tv - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let schema = discrete_schema(2, 2);
        let t = table_from_codes(&schema, vec![vec![0, 0, 0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(alpha_way_error(&t, &t, 3, 10, &mut rng).is_err());
        assert!(alpha_way_error(&t, &t, 0, 10, &mut rng).is_err());
    }

    #[test]
    fn subset_sampling_is_seeded_and_capped() {
        let schema = discrete_schema(8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<usize>> = (0..40)
            .map(|_| (0..9).map(|_| rng.gen_range(0..2)).collect())
            .collect();
        let t = table_from_codes(&schema, rows);
        let a = alpha_way_error(&t, &t, 3, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = alpha_way_error(&t, &t, 3, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(!a.exhaustive);
        assert_eq!(a.subsets_evaluated, 10);
        assert_eq!(a.mean_tv, b.mean_tv);
    }

    #[test]
    fn tv_is_convex_under_mixing() {
        // TV(p, λp + (1−λ)q) = (1−λ)·TV(p, q) ≤ TV(p, q).
        let mut p = HashMap::new();
        let mut q = HashMap::new();
        p.insert(vec![0usize], 0.7);
        p.insert(vec![1usize], 0.3);
        q.insert(vec![0usize], 0.2);
        q.insert(vec![1usize], 0.5);
        q.insert(vec![2usize], 0.3);
        let base = histogram_tv(&p, &q);
        for lambda in [0.0, 0.3, 0.8, 1.0] {
            let mixed: HashMap<Vec<usize>, f64> = {
                let mut m = HashMap::new();
                for (k, &v) in &p {
                    *m.entry(k.clone()).or_insert(0.0) += lambda * v;
                }
                for (k, &v) in &q {
                    *m.entry(k.clone()).or_insert(0.0) += (1.0 - lambda) * v;
                }
                m
            };
            let tv = histogram_tv(&p, &mixed);
            assert!(tv <= base + 1e-12);
            assert!((tv - (1.0 - lambda) * base).abs() < 1e-12);
        }
    }

    #[test]
    fn logreg_separates_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let center = if class == 0 { -2.0 } else { 2.0 };
            x[[i, 0]] = center + rng.gen_range(-0.5..0.5);
            x[[i, 1]] = center + rng.gen_range(-0.5..0.5);
            y.push(class);
        }
        let report = downstream_logreg(x.view(), &y, x.view(), &y, 2, 500, 0.5).unwrap();
        assert!(report.accuracy >= 0.99, "accuracy {}", report.accuracy);
        assert!(report.roc_auc.unwrap() > 0.99);
        assert!(report.f1_macro >= 0.99);
    }

    #[test]
    fn constant_scores_give_half_auc() {
        let scores = vec![0.5; 10];
        let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(rank_auc(&scores, &labels), 0.5);
    }

    #[test]
    fn label_permutation_drops_to_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 400;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let class = if i % 4 == 0 { 1 } else { 0 }; // 75/25 majority split
            let center = if class == 0 { -2.0 } else { 2.0 };
            x[[i, 0]] = center + rng.gen_range(-0.5..0.5);
            x[[i, 1]] = center + rng.gen_range(-0.5..0.5);
            y.push(class);
        }
        // Shuffle the training labels only.
        let mut y_perm = y.clone();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            y_perm.swap(i, j);
        }
        let report = downstream_logreg(x.view(), &y_perm, x.view(), &y, 2, 300, 0.5).unwrap();
        let majority = 0.75;
        assert!(
            (report.accuracy - majority).abs() < 0.15,
            "accuracy {} should be near the majority rate {majority}",
            report.accuracy
        );
    }
}
