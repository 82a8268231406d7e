//! Minimal reverse-mode differentiation over matrix-valued nodes.
//!
//! A [`Tape`] records a directed acyclic computation: every operation only
//! refers to earlier node ids, so cycles cannot be constructed, and shapes
//! are checked when a node is created. Values are `batch × width` matrices;
//! losses are 1×1. The backward pass walks the tape in reverse and
//! accumulates exact gradients into every node that requires them.
//!
//! Besides the usual dense-network pieces, the tape knows how to
//! differentiate through the eigenfunction feature maps: those layers cache
//! the per-coordinate feature derivatives from the forward pass and apply
//! the product rule across tensor-product axes on the way back.

use ndarray::{Array2, ArrayView2, Axis};

use crate::embedding::one_hot;
use crate::error::{Error, Result};
use crate::featuremaps::{ProductMapSpec, RffSpec, SumMapSpec};
use crate::hermite::hp_features_with_grad_into;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    Affine {
        x: NodeId,
        w: NodeId,
        b: NodeId,
    },
    Relu {
        x: NodeId,
    },
    Tanh {
        x: NodeId,
    },
    Sigmoid {
        x: NodeId,
    },
    Softmax {
        x: NodeId,
    },
    ConcatCols {
        parts: Vec<NodeId>,
    },
    SliceCols {
        x: NodeId,
        start: usize,
        len: usize,
    },
    HermiteSum {
        x: NodeId,
        /// d out[i, f] / d x[i, dim(f)], including the 1/√D scale.
        dphi: Array2<f64>,
        block_lens: Vec<usize>,
    },
    HermiteProduct {
        x: NodeId,
        dims: Vec<usize>,
        /// Per selected coordinate: n × (C+1) features and derivatives.
        phi: Vec<Array2<f64>>,
        dphi: Vec<Array2<f64>>,
    },
    Rff {
        x: NodeId,
        omega: Array2<f64>,
    },
    EmbeddingLoss {
        h: NodeId,
        onehot: Array2<f64>,
        /// 2/n · (μ − target), cached from the forward pass.
        scaled_diff: Array2<f64>,
    },
    AddScaled {
        a: NodeId,
        b: NodeId,
        ca: f64,
        cb: f64,
    },
}

struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Recorded computation; build forward with the methods below, then call
/// [`Tape::backward`] on a scalar node.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Array2<f64>, requires_grad: bool, op: Op) -> NodeId {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> ArrayView2<'_, f64> {
        self.node(id).value.view()
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> Result<f64> {
        let v = &self.node(id).value;
        if v.dim() != (1, 1) {
            return Err(Error::GraphShape(format!(
                "expected a scalar node, got shape {:?}",
                v.dim()
            )));
        }
        Ok(v[[0, 0]])
    }

    /// Gradient accumulated by the last [`Tape::backward`] call.
    pub fn grad(&self, id: NodeId) -> Result<ArrayView2<'_, f64>> {
        self.node(id)
            .grad
            .as_ref()
            .map(|g| g.view())
            .ok_or_else(|| Error::GraphShape("node has no gradient; run backward first".into()))
    }

    /// Constant input; no gradient is tracked into it.
    pub fn input(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, false, Op::Leaf)
    }

    /// Trainable leaf; gradients accumulate here.
    pub fn param(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, true, Op::Leaf)
    }

    /// x·W + b with b broadcast over rows. W is in×out, b is 1×out.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xn, xw) = self.node(x).value.dim();
        let (wi, wo) = self.node(w).value.dim();
        let (bn, bo) = self.node(b).value.dim();
        if xw != wi || bn != 1 || bo != wo {
            return Err(Error::GraphShape(format!(
                "affine shapes incompatible: x {xn}×{xw}, w {wi}×{wo}, b {bn}×{bo}"
            )));
        }
        let mut value = self.node(x).value.dot(&self.node(w).value);
        value += &self.node(b).value.row(0);
        let rg = self.any_requires(&[x, w, b]);
        Ok(self.push(value, rg, Op::Affine { x, w, b }))
    }

    /// max(0, x); the subgradient at 0 is fixed to 0.
    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.node(x).value.mapv(|v| v.max(0.0));
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::Relu { x }))
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.node(x).value.mapv(f64::tanh);
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::Tanh { x }))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.node(x).value.mapv(|v| 1.0 / (1.0 + (-v).exp()));
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::Sigmoid { x }))
    }

    /// Row-wise softmax over all columns of the node.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let mut value = self.node(x).value.clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row.mapv_inplace(|v| v / total);
        }
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::Softmax { x }))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::GraphShape("concat of zero parts".into()));
        }
        let rows = self.node(parts[0]).value.nrows();
        let mut width = 0;
        for &p in parts {
            if self.node(p).value.nrows() != rows {
                return Err(Error::GraphShape(
                    "concat parts disagree on row count".into(),
                ));
            }
            width += self.node(p).value.ncols();
        }
        let mut value = Array2::zeros((rows, width));
        let mut offset = 0;
        for &p in parts {
            let w = self.node(p).value.ncols();
            value
                .slice_mut(ndarray::s![.., offset..offset + w])
                .assign(&self.node(p).value);
            offset += w;
        }
        let rg = parts.iter().any(|&p| self.node(p).requires_grad);
        Ok(self.push(
            value,
            rg,
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
        ))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let cols = self.node(x).value.ncols();
        if start + len > cols {
            return Err(Error::GraphShape(format!(
                "slice {start}..{} out of {cols} columns",
                start + len
            )));
        }
        let value = self
            .node(x)
            .value
            .slice(ndarray::s![.., start..start + len])
            .to_owned();
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::SliceCols { x, start, len }))
    }

    /// Per-coordinate eigenfunction blocks scaled by 1/√D, batched over rows.
    pub fn hermite_sum(&mut self, x: NodeId, spec: &SumMapSpec) -> Result<NodeId> {
        let (n, d) = self.node(x).value.dim();
        if d != spec.input_dim() {
            return Err(Error::GraphShape(format!(
                "sum map expects {} columns, got {d}",
                spec.input_dim()
            )));
        }
        let out_len = spec.output_len();
        let scale = 1.0 / (d as f64).sqrt();
        let mut value = Array2::zeros((n, out_len));
        let mut dphi = Array2::zeros((n, out_len));
        let block_lens: Vec<usize> = spec.bases().iter().map(|b| b.feature_len()).collect();
        let max_len = block_lens.iter().copied().max().unwrap();
        let mut phi_buf = vec![0.0; max_len];
        let mut dphi_buf = vec![0.0; max_len];
        for i in 0..n {
            let mut offset = 0;
            for (dim, basis) in spec.bases().iter().enumerate() {
                let len = basis.feature_len();
                hp_features_with_grad_into(
                    self.node(x).value[[i, dim]],
                    basis,
                    &mut phi_buf[..len],
                    &mut dphi_buf[..len],
                )?;
                for c in 0..len {
                    value[[i, offset + c]] = scale * phi_buf[c];
                    dphi[[i, offset + c]] = scale * dphi_buf[c];
                }
                offset += len;
            }
        }
        let rg = self.node(x).requires_grad;
        Ok(self.push(
            value,
            rg,
            Op::HermiteSum {
                x,
                dphi,
                block_lens,
            },
        ))
    }

    /// Vectorized tensor-product features over the spec's selected
    /// coordinates, batched over rows.
    pub fn hermite_product(&mut self, x: NodeId, spec: &ProductMapSpec) -> Result<NodeId> {
        let (n, d) = self.node(x).value.dim();
        if d != spec.input_dim() {
            return Err(Error::GraphShape(format!(
                "product map expects {} columns, got {d}",
                spec.input_dim()
            )));
        }
        let width = spec.basis().feature_len();
        let dims = spec.dims().to_vec();
        let mut phi: Vec<Array2<f64>> = Vec::with_capacity(dims.len());
        let mut dphi: Vec<Array2<f64>> = Vec::with_capacity(dims.len());
        let mut pbuf = vec![0.0; width];
        let mut dbuf = vec![0.0; width];
        for &dim in &dims {
            let mut p = Array2::zeros((n, width));
            let mut dp = Array2::zeros((n, width));
            for i in 0..n {
                hp_features_with_grad_into(
                    self.node(x).value[[i, dim]],
                    spec.basis(),
                    &mut pbuf,
                    &mut dbuf,
                )?;
                p.row_mut(i).assign(&ndarray::ArrayView1::from(&pbuf[..]));
                dp.row_mut(i).assign(&ndarray::ArrayView1::from(&dbuf[..]));
            }
            phi.push(p);
            dphi.push(dp);
        }
        let out_len = spec.output_len();
        let mut value = Array2::zeros((n, out_len));
        let mut scratch = vec![0.0; out_len];
        for i in 0..n {
            tensor_product_row(&phi, i, &mut scratch);
            value
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&scratch[..]));
        }
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::HermiteProduct { x, dims, phi, dphi }))
    }

    /// Random Fourier features, batched over rows.
    pub fn rff(&mut self, x: NodeId, spec: &RffSpec) -> Result<NodeId> {
        let (n, d) = self.node(x).value.dim();
        if d != spec.input_dim() {
            return Err(Error::GraphShape(format!(
                "rff map expects {} columns, got {d}",
                spec.input_dim()
            )));
        }
        let omega = spec.omega().to_owned();
        let half = spec.output_len() / 2;
        let scale = (2.0 / spec.output_len() as f64).sqrt();
        let z = self.node(x).value.dot(&omega.t());
        let mut value = Array2::zeros((n, spec.output_len()));
        for i in 0..n {
            for j in 0..half {
                value[[i, j]] = scale * z[[i, j]].cos();
                value[[i, half + j]] = scale * z[[i, j]].sin();
            }
        }
        let rg = self.node(x).requires_grad;
        Ok(self.push(value, rg, Op::Rff { x, omega }))
    }

    /// Squared Frobenius distance between the batch mean embedding
    /// (1/n)·hᵀ·onehot(labels) and a fixed target matrix. Scalar node.
    pub fn embedding_frobenius_loss(
        &mut self,
        h: NodeId,
        labels: &[usize],
        num_classes: usize,
        target: ArrayView2<'_, f64>,
    ) -> Result<NodeId> {
        let (n, f) = self.node(h).value.dim();
        if labels.len() != n {
            return Err(Error::GraphShape(format!(
                "{} labels for a batch of {n}",
                labels.len()
            )));
        }
        if target.dim() != (f, num_classes) {
            return Err(Error::GraphShape(format!(
                "target shape {:?} does not match embedding {f}×{num_classes}",
                target.dim()
            )));
        }
        let mut onehot = Array2::zeros((n, num_classes));
        for (i, &y) in labels.iter().enumerate() {
            let row = one_hot(y, num_classes)?;
            onehot
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&row[..]));
        }
        let mu = self.node(h).value.t().dot(&onehot) / n as f64;
        let diff = &mu - &target;
        let loss = diff.iter().map(|v| v * v).sum::<f64>();
        let scaled_diff = diff * (2.0 / n as f64);
        let rg = self.node(h).requires_grad;
        Ok(self.push(
            Array2::from_elem((1, 1), loss),
            rg,
            Op::EmbeddingLoss {
                h,
                onehot,
                scaled_diff,
            },
        ))
    }

    /// ca·a + cb·b, elementwise over identical shapes.
    pub fn add_scaled(&mut self, a: NodeId, b: NodeId, ca: f64, cb: f64) -> Result<NodeId> {
        if self.node(a).value.dim() != self.node(b).value.dim() {
            return Err(Error::GraphShape("add of mismatched shapes".into()));
        }
        let value = ca * &self.node(a).value + cb * &self.node(b).value;
        let rg = self.any_requires(&[a, b]);
        Ok(self.push(value, rg, Op::AddScaled { a, b, ca, cb }))
    }

    fn any_requires(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|&id| self.node(id).requires_grad)
    }

    fn add_grad(&mut self, id: NodeId, delta: &Array2<f64>) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match self.nodes[id.0].grad.as_mut() {
            Some(g) => *g += delta,
            None => self.nodes[id.0].grad = Some(delta.clone()),
        }
    }

    /// Backpropagate from a scalar node; gradients land in every node with
    /// `requires_grad` reachable from it.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.node(loss).value.dim() != (1, 1) {
            return Err(Error::GraphShape(
                "backward starts from a scalar node".into(),
            ));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Array2::ones((1, 1)));
        for idx in (0..=loss.0).rev() {
            if self.nodes[idx].grad.is_none() || !self.nodes[idx].requires_grad {
                continue;
            }
            let grad = self.nodes[idx].grad.take().unwrap();
            self.propagate(idx, &grad);
            self.nodes[idx].grad = Some(grad);
        }
        Ok(())
    }

    fn propagate(&mut self, idx: usize, grad: &Array2<f64>) {
        // Take the op out so the node table can be mutated; restore after.
        let op = std::mem::replace(&mut self.nodes[idx].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                if self.node(*x).requires_grad {
                    let gx = grad.dot(&self.node(*w).value.t());
                    self.add_grad(*x, &gx);
                }
                if self.node(*w).requires_grad {
                    let gw = self.node(*x).value.t().dot(grad);
                    self.add_grad(*w, &gw);
                }
                if self.node(*b).requires_grad {
                    let gb = grad.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.add_grad(*b, &gb);
                }
            }
            Op::Relu { x } => {
                let mask = self
                    .node(*x)
                    .value
                    .mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                self.add_grad(*x, &(grad * &mask));
            }
            Op::Tanh { x } => {
                let deriv = self.nodes[idx].value.mapv(|t| 1.0 - t * t);
                self.add_grad(*x, &(grad * &deriv));
            }
            Op::Sigmoid { x } => {
                let deriv = self.nodes[idx].value.mapv(|s| s * (1.0 - s));
                self.add_grad(*x, &(grad * &deriv));
            }
            Op::Softmax { x } => {
                // Per row: g_in = p ⊙ g − p·(Σ p ⊙ g).
                let p = self.nodes[idx].value.clone();
                let mut gx = grad * &p;
                for (mut grow, prow) in gx.rows_mut().into_iter().zip(p.rows()) {
                    let dot: f64 = grow.sum();
                    grow.iter_mut()
                        .zip(prow.iter())
                        .for_each(|(g, &pv)| *g -= dot * pv);
                }
                self.add_grad(*x, &gx);
            }
            Op::ConcatCols { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.node(p).value.ncols();
                    let slice = grad.slice(ndarray::s![.., offset..offset + w]).to_owned();
                    self.add_grad(p, &slice);
                    offset += w;
                }
            }
            Op::SliceCols { x, start, len } => {
                let (rows, cols) = self.node(*x).value.dim();
                let mut gx = Array2::zeros((rows, cols));
                gx.slice_mut(ndarray::s![.., *start..start + len])
                    .assign(grad);
                self.add_grad(*x, &gx);
            }
            Op::HermiteSum {
                x,
                dphi,
                block_lens,
            } => {
                let (n, d) = self.node(*x).value.dim();
                let mut gx = Array2::zeros((n, d));
                for i in 0..n {
                    let mut offset = 0;
                    for (dim, &len) in block_lens.iter().enumerate() {
                        let mut acc = 0.0;
                        for c in 0..len {
                            acc += grad[[i, offset + c]] * dphi[[i, offset + c]];
                        }
                        gx[[i, dim]] = acc;
                        offset += len;
                    }
                }
                self.add_grad(*x, &gx);
            }
            Op::HermiteProduct { x, dims, phi, dphi } => {
                let (n, d) = self.node(*x).value.dim();
                let mut gx = Array2::zeros((n, d));
                let width = phi[0].ncols();
                let mut scratch = vec![0.0; grad.ncols()];
                for i in 0..n {
                    for (t, &dim) in dims.iter().enumerate() {
                        scratch
                            .iter_mut()
                            .zip(grad.row(i).iter())
                            .for_each(|(s, &g)| *s = g);
                        let mut size = grad.ncols();
                        // Contract trailing axes one at a time; axis t takes
                        // the derivative vector, the rest take the features.
                        for axis in (0..dims.len()).rev() {
                            let vec = if axis == t {
                                dphi[axis].row(i)
                            } else {
                                phi[axis].row(i)
                            };
                            size /= width;
                            for blk in 0..size {
                                let mut acc = 0.0;
                                for c in 0..width {
                                    acc += scratch[blk * width + c] * vec[c];
                                }
                                scratch[blk] = acc;
                            }
                        }
                        gx[[i, dim]] += scratch[0];
                    }
                }
                self.add_grad(*x, &gx);
            }
            Op::Rff { x, omega } => {
                let value = &self.nodes[idx].value;
                let half = value.ncols() / 2;
                let n = value.nrows();
                let mut gz = Array2::zeros((n, half));
                for i in 0..n {
                    for j in 0..half {
                        gz[[i, j]] = -grad[[i, j]] * value[[i, half + j]]
                            + grad[[i, half + j]] * value[[i, j]];
                    }
                }
                let gx = gz.dot(omega);
                self.add_grad(*x, &gx);
            }
            Op::EmbeddingLoss {
                h,
                onehot,
                scaled_diff,
            } => {
                let g = grad[[0, 0]];
                let gh = onehot.dot(&scaled_diff.t()) * g;
                self.add_grad(*h, &gh);
            }
            Op::AddScaled { a, b, ca, cb } => {
                self.add_grad(*a, &(grad * *ca));
                self.add_grad(*b, &(grad * *cb));
            }
        }
        self.nodes[idx].op = op;
    }
}

/// out[multi] = Π_axis phi[axis][row, c_axis], row-major with the first axis
/// slowest; matches the vectorization of the plain product map.
fn tensor_product_row(phi: &[Array2<f64>], row: usize, out: &mut [f64]) {
    let width = phi[0].ncols();
    out[0] = 1.0;
    let mut size = 1;
    for p in phi {
        let block = p.row(row);
        for i in (0..size).rev() {
            let base = out[i];
            for (j, &b) in block.iter().enumerate() {
                out[i * width + j] = base * b;
            }
        }
        size *= width;
    }
}
