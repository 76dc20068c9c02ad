//! Tape-based reverse-mode gradient engine over real tensors.
//!
//! A [`Tape`] records every primitive as a [`Node`] in append order, so a
//! node's parents always precede it. One backward sweep walks the nodes in
//! reverse, accumulating gradients; values consumed by several nodes
//! receive the sum of all path gradients. Tapes are rebuilt per batch and
//! are single-threaded; distinct tapes on distinct threads are independent.

use crate::error::{CoreError, Result};
use crate::tensor::{Real, Tensor};

/// Index of a node on its tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Primitive operation tags. Each stores whatever the backward rule needs
/// beyond parent values and the node's own forward value.
#[derive(Clone, Debug)]
pub enum Op<T> {
    /// Input, parameter or constant. No parents, no backward rule.
    Leaf,
    Add,
    Sub,
    Mul,
    /// `[n, c] + [c]`, bias broadcast over rows.
    AddBias,
    Matmul,
    /// Causal 1-D convolution along time: output at `t` sees positions
    /// `t-width+1 ..= t` only, with zero padding for the past.
    ConvCausal { width: usize },
    Sigmoid,
    Tanh,
    Relu,
    /// Softmax over the time axis of an `[n, 1]` score column; masked
    /// positions get weight zero and receive zero gradient.
    SoftmaxTime { mask: Vec<bool> },
    /// Mean over unmasked rows of `[n, c]`, producing `[1, c]`.
    MeanTime { mask: Vec<bool> },
    /// Max over unmasked rows of `[n, c]`; ties break toward the earliest
    /// time index and only the argmax rows receive gradient.
    MaxTime { mask: Vec<bool> },
    /// Stack parents along axis 0.
    ConcatRows,
    /// Stack parents along axis 1.
    ConcatCols,
    /// Concatenate two packed quaternion tensors unit-wise: each of the
    /// four component blocks of the output is the first parent's block
    /// followed by the second's, so the result is again a valid packed
    /// layout.
    ConcatPacked,
    /// Single row `t` of an `[n, c]` matrix as `[1, c]`.
    Row { index: usize },
    /// Rows in reverse time order.
    ReverseTime,
    Transpose,
    Neg,
    /// Multiply by a compile-time constant scalar.
    Scale(T),
    /// Row lookup: parent is a `[v, d]` table, output is `[ids.len(), d]`.
    /// Backward scatter-adds, so repeated ids accumulate.
    Gather { ids: Vec<usize> },
    /// Sum of all entries, producing a scalar.
    SumAll,
    /// L1 reduction `sum |x|`, producing a scalar.
    L1,
    /// L2 reduction `sum x^2`, producing a scalar.
    L2,
    /// Elementwise natural log.
    Log,
}

/// One recorded operation: tag, parent ids and the cached forward value.
#[derive(Clone, Debug)]
pub struct Node<T> {
    pub op: Op<T>,
    pub parents: Vec<NodeId>,
    pub value: Tensor<T>,
}

/// Gradients produced by one backward pass, indexed by node id.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of the root w.r.t. the given node, if any path reached it.
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient as a tensor, zero-filled when no path reached the node.
    pub fn get_or_zeros(&self, id: NodeId, shape: &[usize]) -> Tensor<T> {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

/// Append-only record of a forward computation.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn acc<T: Real>(slot: &mut Option<Tensor<T>>, delta: Tensor<T>) {
    match slot {
        Some(g) => g.add_assign(&delta),
        None => *slot = Some(delta),
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    /// Appends a node with a caller-computed forward value.
    pub fn record(&mut self, op: Op<T>, parents: Vec<NodeId>, value: Tensor<T>) -> Result<NodeId> {
        for p in &parents {
            if p.0 >= self.nodes.len() {
                return Err(CoreError::DanglingParent {
                    id: p.0,
                    len: self.nodes.len(),
                });
            }
        }
        self.nodes.push(Node { op, parents, value });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Appends an input/parameter/constant node.
    pub fn leaf(&mut self, value: Tensor<T>) -> NodeId {
        self.record(Op::Leaf, vec![], value).expect("leaf has no parents")
    }

    pub fn scalar(&mut self, v: T) -> NodeId {
        self.leaf(Tensor::scalar(v))
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(CoreError::ShapeMismatch {
                op,
                details: format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.record(Op::Add, vec![a, b], v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.record(Op::Sub, vec![a, b], v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.record(Op::Mul, vec![a, b], v)
    }

    /// `[n, c] + [c]` with the bias broadcast over rows.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (n, c) = self.value(x).as_2d();
        if self.value(bias).numel() != c {
            return Err(CoreError::ShapeMismatch {
                op: "add_bias",
                details: format!("bias {:?} for input {:?}", self.shape(bias), self.shape(x)),
            });
        }
        let xv = self.value(x);
        let bv = self.value(bias);
        let mut out = Vec::with_capacity(n * c);
        for r in 0..n {
            for j in 0..c {
                out.push(xv.data()[r * c + j] + bv.data()[j]);
            }
        }
        let shape = xv.shape().to_vec();
        self.record(Op::AddBias, vec![x, bias], Tensor::new(shape, out))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (_, k) = self.value(a).as_2d();
        let (k2, _) = self.value(b).as_2d();
        if k != k2 {
            return Err(CoreError::ShapeMismatch {
                op: "matmul",
                details: format!("{:?} x {:?}", self.shape(a), self.shape(b)),
            });
        }
        let v = self.value(a).matmul(self.value(b));
        self.record(Op::Matmul, vec![a, b], v)
    }

    /// Causal 1-D convolution: `x` is `[n, cin]`, `kernel` is
    /// `[width*cin, cout]` with tap `tau` occupying rows
    /// `tau*cin .. (tau+1)*cin`; tap `tau` reads `x[t-tau]`.
    pub fn conv_causal(&mut self, x: NodeId, kernel: NodeId, width: usize) -> Result<NodeId> {
        let (n, cin) = self.value(x).as_2d();
        let (rows, cout) = self.value(kernel).as_2d();
        if width == 0 || rows != width * cin {
            return Err(CoreError::ShapeMismatch {
                op: "conv_causal",
                details: format!(
                    "kernel {:?} for width {} and input {:?}",
                    self.shape(kernel),
                    width,
                    self.shape(x)
                ),
            });
        }
        let xv = self.value(x);
        let kv = self.value(kernel);
        let mut out = vec![T::zero(); n * cout];
        for t in 0..n {
            for tau in 0..width.min(t + 1) {
                let src = xv.row(t - tau);
                for (i, &xi) in src.iter().enumerate() {
                    if xi == T::zero() {
                        continue;
                    }
                    let krow = &kv.data()[(tau * cin + i) * cout..(tau * cin + i + 1) * cout];
                    let orow = &mut out[t * cout..(t + 1) * cout];
                    for (o, &kw) in orow.iter_mut().zip(krow) {
                        *o = *o + xi * kw;
                    }
                }
            }
        }
        self.record(
            Op::ConvCausal { width },
            vec![x, kernel],
            Tensor::matrix(n, cout, out),
        )
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| T::one() / (T::one() + (-v).exp()));
        self.record(Op::Sigmoid, vec![x], v)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| v.tanh());
        self.record(Op::Tanh, vec![x], v)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| if v > T::zero() { v } else { T::zero() });
        self.record(Op::Relu, vec![x], v)
    }

    fn check_mask(&self, op: &'static str, x: NodeId, mask: &[bool]) -> Result<()> {
        let (n, _) = self.value(x).as_2d();
        if mask.len() != n {
            return Err(CoreError::ShapeMismatch {
                op,
                details: format!("mask length {} for {} rows", mask.len(), n),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(CoreError::EmptySequence);
        }
        Ok(())
    }

    /// Masked softmax over the time axis of an `[n, 1]` score column.
    pub fn softmax_time(&mut self, scores: NodeId, mask: Vec<bool>) -> Result<NodeId> {
        self.check_mask("softmax_time", scores, &mask)?;
        let sv = self.value(scores);
        let (n, c) = sv.as_2d();
        if c != 1 {
            return Err(CoreError::ShapeMismatch {
                op: "softmax_time",
                details: format!("expected [n, 1] scores, got {:?}", sv.shape()),
            });
        }
        let mut hi = T::neg_infinity();
        for t in 0..n {
            if mask[t] && sv.data()[t] > hi {
                hi = sv.data()[t];
            }
        }
        let mut exps = vec![T::zero(); n];
        let mut denom = T::zero();
        for t in 0..n {
            if mask[t] {
                exps[t] = (sv.data()[t] - hi).exp();
                denom = denom + exps[t];
            }
        }
        let out: Vec<T> = exps.into_iter().map(|e| e / denom).collect();
        let shape = sv.shape().to_vec();
        self.record(Op::SoftmaxTime { mask }, vec![scores], Tensor::new(shape, out))
    }

    /// Mean over unmasked rows, `[n, c] -> [1, c]`.
    pub fn mean_time(&mut self, x: NodeId, mask: Vec<bool>) -> Result<NodeId> {
        self.check_mask("mean_time", x, &mask)?;
        let xv = self.value(x);
        let (n, c) = xv.as_2d();
        let m = mask.iter().filter(|&&b| b).count();
        let inv = T::one() / T::from_f64(m as f64);
        let mut out = vec![T::zero(); c];
        for t in 0..n {
            if mask[t] {
                for j in 0..c {
                    out[j] = out[j] + xv.data()[t * c + j];
                }
            }
        }
        for o in out.iter_mut() {
            *o = *o * inv;
        }
        self.record(Op::MeanTime { mask }, vec![x], Tensor::matrix(1, c, out))
    }

    /// Max over unmasked rows, `[n, c] -> [1, c]`; earliest index wins ties.
    pub fn max_time(&mut self, x: NodeId, mask: Vec<bool>) -> Result<NodeId> {
        self.check_mask("max_time", x, &mask)?;
        let xv = self.value(x);
        let (n, c) = xv.as_2d();
        let mut out = vec![T::zero(); c];
        for j in 0..c {
            let mut best: Option<T> = None;
            for t in 0..n {
                if !mask[t] {
                    continue;
                }
                let v = xv.data()[t * c + j];
                if best.map_or(true, |b| v > b) {
                    best = Some(v);
                }
            }
            out[j] = best.expect("check_mask guarantees an unmasked row");
        }
        self.record(Op::MaxTime { mask }, vec![x], Tensor::matrix(1, c, out))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(CoreError::ShapeMismatch {
                op: "concat_rows",
                details: "no parts".into(),
            });
        }
        let (_, c0) = self.value(parts[0]).as_2d();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (n, c) = self.value(p).as_2d();
            if c != c0 {
                return Err(CoreError::ShapeMismatch {
                    op: "concat_rows",
                    details: format!("column counts {} vs {}", c0, c),
                });
            }
            rows += n;
            data.extend_from_slice(self.value(p).data());
        }
        self.record(Op::ConcatRows, parts.to_vec(), Tensor::matrix(rows, c0, data))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(CoreError::ShapeMismatch {
                op: "concat_cols",
                details: "no parts".into(),
            });
        }
        let (n0, _) = self.value(parts[0]).as_2d();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (n, c) = self.value(p).as_2d();
            if n != n0 {
                return Err(CoreError::ShapeMismatch {
                    op: "concat_cols",
                    details: format!("row counts {} vs {}", n0, n),
                });
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(n0 * total);
        for r in 0..n0 {
            for (&p, &_c) in parts.iter().zip(&widths) {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        self.record(Op::ConcatCols, parts.to_vec(), Tensor::matrix(n0, total, data))
    }

    /// Unit-wise concatenation of two packed tensors: output block layout
    /// is `[ra|rb | xa|xb | ya|yb | za|zb]`, a valid packed layout of
    /// `units(a) + units(b)` quaternions.
    pub fn concat_packed(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (na, ca) = self.value(a).as_2d();
        let (nb, cb) = self.value(b).as_2d();
        if na != nb || ca % 4 != 0 || cb % 4 != 0 {
            return Err(CoreError::ShapeMismatch {
                op: "concat_packed",
                details: format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            });
        }
        let (ha, hb) = (ca / 4, cb / 4);
        let c = ca + cb;
        let mut data = Vec::with_capacity(na * c);
        for r in 0..na {
            let ra = self.value(a).row(r);
            let rb = self.value(b).row(r);
            for comp in 0..4 {
                data.extend_from_slice(&ra[comp * ha..(comp + 1) * ha]);
                data.extend_from_slice(&rb[comp * hb..(comp + 1) * hb]);
            }
        }
        self.record(Op::ConcatPacked, vec![a, b], Tensor::matrix(na, c, data))
    }

    /// Row `t` of an `[n, c]` matrix as `[1, c]`.
    pub fn row(&mut self, x: NodeId, t: usize) -> Result<NodeId> {
        let (n, c) = self.value(x).as_2d();
        if t >= n {
            return Err(CoreError::ShapeMismatch {
                op: "row",
                details: format!("row {} of {} rows", t, n),
            });
        }
        let data = self.value(x).row(t).to_vec();
        self.record(Op::Row { index: t }, vec![x], Tensor::matrix(1, c, data))
    }

    pub fn reverse_time(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).reverse_rows();
        self.record(Op::ReverseTime, vec![x], v)
    }

    pub fn transpose(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).transpose();
        self.record(Op::Transpose, vec![x], v)
    }

    pub fn neg(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| -v);
        self.record(Op::Neg, vec![x], v)
    }

    pub fn scale(&mut self, x: NodeId, c: T) -> Result<NodeId> {
        let v = self.value(x).map(|v| v * c);
        self.record(Op::Scale(c), vec![x], v)
    }

    /// Row lookup into a `[v, d]` table.
    pub fn gather(&mut self, table: NodeId, ids: Vec<usize>) -> Result<NodeId> {
        let (v, d) = self.value(table).as_2d();
        for &id in &ids {
            if id >= v {
                return Err(CoreError::IdOutOfRange { id, vocab: v });
            }
        }
        let tv = self.value(table);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in &ids {
            data.extend_from_slice(tv.row(id));
        }
        let n = ids.len();
        self.record(Op::Gather { ids }, vec![table], Tensor::matrix(n, d, data))
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(x).sum());
        self.record(Op::SumAll, vec![x], v)
    }

    pub fn l1(&mut self, x: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(x).data().iter().map(|&v| v.abs()).sum());
        self.record(Op::L1, vec![x], v)
    }

    pub fn l2(&mut self, x: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(x).data().iter().map(|&v| v * v).sum());
        self.record(Op::L2, vec![x], v)
    }

    pub fn log(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| v.ln());
        self.record(Op::Log, vec![x], v)
    }

    /// Reverse-mode sweep from a scalar root. Returns the gradient of the
    /// root with respect to every node the root depends on.
    pub fn backward(&self, root: NodeId) -> Result<Gradients<T>> {
        if root.0 >= self.nodes.len() {
            return Err(CoreError::DanglingParent {
                id: root.0,
                len: self.nodes.len(),
            });
        }
        let root_val = &self.nodes[root.0].value;
        if !root_val.is_scalar() {
            return Err(CoreError::NonScalarRoot {
                shape: root_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::new(root_val.shape().to_vec(), vec![T::one()]));

        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            self.backprop_node(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let pid = |i: usize| node.parents[i].0;
        let pval = |i: usize| &self.nodes[node.parents[i].0].value;
        match &node.op {
            Op::Leaf => {}
            Op::Add => {
                acc(&mut grads[pid(0)], g.clone());
                acc(&mut grads[pid(1)], g.clone());
            }
            Op::Sub => {
                acc(&mut grads[pid(0)], g.clone());
                acc(&mut grads[pid(1)], g.map(|v| -v));
            }
            Op::Mul => {
                acc(&mut grads[pid(0)], g.zip_map(pval(1), |gv, b| gv * b));
                acc(&mut grads[pid(1)], g.zip_map(pval(0), |gv, a| gv * a));
            }
            Op::AddBias => {
                acc(&mut grads[pid(0)], g.clone());
                let (n, c) = g.as_2d();
                let mut db = vec![T::zero(); c];
                for t in 0..n {
                    for j in 0..c {
                        db[j] = db[j] + g.data()[t * c + j];
                    }
                }
                acc(
                    &mut grads[pid(1)],
                    Tensor::new(pval(1).shape().to_vec(), db),
                );
            }
            Op::Matmul => {
                let a = pval(0);
                let b = pval(1);
                let da = g.matmul(&b.transpose());
                let db = a.transpose().matmul(g);
                acc(&mut grads[pid(0)], Tensor::new(a.shape().to_vec(), da.into_data()));
                acc(&mut grads[pid(1)], Tensor::new(b.shape().to_vec(), db.into_data()));
            }
            Op::ConvCausal { width } => {
                let x = pval(0);
                let k = pval(1);
                let (n, cin) = x.as_2d();
                let (_, cout) = k.as_2d();
                let mut dx = vec![T::zero(); n * cin];
                let mut dk = vec![T::zero(); width * cin * cout];
                for t in 0..n {
                    let grow = &g.data()[t * cout..(t + 1) * cout];
                    for tau in 0..(*width).min(t + 1) {
                        let src = x.row(t - tau);
                        for i in 0..cin {
                            let krow = &k.data()[(tau * cin + i) * cout..(tau * cin + i + 1) * cout];
                            let mut s = T::zero();
                            for j in 0..cout {
                                s = s + grow[j] * krow[j];
                                dk[(tau * cin + i) * cout + j] =
                                    dk[(tau * cin + i) * cout + j] + src[i] * grow[j];
                            }
                            dx[(t - tau) * cin + i] = dx[(t - tau) * cin + i] + s;
                        }
                    }
                }
                acc(&mut grads[pid(0)], Tensor::new(x.shape().to_vec(), dx));
                acc(&mut grads[pid(1)], Tensor::new(k.shape().to_vec(), dk));
            }
            Op::Sigmoid => {
                let delta = g.zip_map(&node.value, |gv, s| gv * s * (T::one() - s));
                acc(&mut grads[pid(0)], delta);
            }
            Op::Tanh => {
                let delta = g.zip_map(&node.value, |gv, v| gv * (T::one() - v * v));
                acc(&mut grads[pid(0)], delta);
            }
            Op::Relu => {
                let delta = g.zip_map(pval(0), |gv, x| if x > T::zero() { gv } else { T::zero() });
                acc(&mut grads[pid(0)], delta);
            }
            Op::SoftmaxTime { mask } => {
                let w = &node.value;
                let n = mask.len();
                let mut dot = T::zero();
                for t in 0..n {
                    if mask[t] {
                        dot = dot + g.data()[t] * w.data()[t];
                    }
                }
                let mut ds = vec![T::zero(); n];
                for t in 0..n {
                    if mask[t] {
                        ds[t] = w.data()[t] * (g.data()[t] - dot);
                    }
                }
                acc(&mut grads[pid(0)], Tensor::new(pval(0).shape().to_vec(), ds));
            }
            Op::MeanTime { mask } => {
                let x = pval(0);
                let (n, c) = x.as_2d();
                let m = mask.iter().filter(|&&b| b).count();
                let inv = T::one() / T::from_f64(m as f64);
                let mut dx = vec![T::zero(); n * c];
                for t in 0..n {
                    if mask[t] {
                        for j in 0..c {
                            dx[t * c + j] = g.data()[j] * inv;
                        }
                    }
                }
                acc(&mut grads[pid(0)], Tensor::new(x.shape().to_vec(), dx));
            }
            Op::MaxTime { mask } => {
                let x = pval(0);
                let (n, c) = x.as_2d();
                let mut dx = vec![T::zero(); n * c];
                for j in 0..c {
                    let mut best: Option<(usize, T)> = None;
                    for t in 0..n {
                        if !mask[t] {
                            continue;
                        }
                        let v = x.data()[t * c + j];
                        if best.map_or(true, |(_, b)| v > b) {
                            best = Some((t, v));
                        }
                    }
                    let (t, _) = best.expect("forward enforced an unmasked row");
                    dx[t * c + j] = g.data()[j];
                }
                acc(&mut grads[pid(0)], Tensor::new(x.shape().to_vec(), dx));
            }
            Op::ConcatRows => {
                let (_, c) = node.value.as_2d();
                let mut offset = 0;
                for i in 0..node.parents.len() {
                    let (n, _) = pval(i).as_2d();
                    let slice = g.data()[offset * c..(offset + n) * c].to_vec();
                    acc(&mut grads[pid(i)], Tensor::new(pval(i).shape().to_vec(), slice));
                    offset += n;
                }
            }
            Op::ConcatCols => {
                let (n, total) = node.value.as_2d();
                let mut offset = 0;
                for i in 0..node.parents.len() {
                    let (_, c) = pval(i).as_2d();
                    let mut dp = Vec::with_capacity(n * c);
                    for r in 0..n {
                        dp.extend_from_slice(&g.data()[r * total + offset..r * total + offset + c]);
                    }
                    acc(&mut grads[pid(i)], Tensor::new(pval(i).shape().to_vec(), dp));
                    offset += c;
                }
            }
            Op::ConcatPacked => {
                let (n, _) = node.value.as_2d();
                let (_, ca) = pval(0).as_2d();
                let (_, cb) = pval(1).as_2d();
                let (ha, hb) = (ca / 4, cb / 4);
                let stride = ha + hb;
                let mut da = vec![T::zero(); n * ca];
                let mut db = vec![T::zero(); n * cb];
                for r in 0..n {
                    let grow = g.row(r);
                    for comp in 0..4 {
                        let base = comp * stride;
                        da[r * ca + comp * ha..r * ca + (comp + 1) * ha]
                            .copy_from_slice(&grow[base..base + ha]);
                        db[r * cb + comp * hb..r * cb + (comp + 1) * hb]
                            .copy_from_slice(&grow[base + ha..base + stride]);
                    }
                }
                acc(&mut grads[pid(0)], Tensor::new(pval(0).shape().to_vec(), da));
                acc(&mut grads[pid(1)], Tensor::new(pval(1).shape().to_vec(), db));
            }
            Op::Row { index } => {
                let x = pval(0);
                let (n, c) = x.as_2d();
                let mut dx = vec![T::zero(); n * c];
                dx[index * c..(index + 1) * c].copy_from_slice(g.data());
                acc(&mut grads[pid(0)], Tensor::new(x.shape().to_vec(), dx));
            }
            Op::ReverseTime => {
                acc(&mut grads[pid(0)], g.reverse_rows());
            }
            Op::Transpose => {
                let gt = g.transpose();
                acc(&mut grads[pid(0)], Tensor::new(pval(0).shape().to_vec(), gt.into_data()));
            }
            Op::Neg => {
                acc(&mut grads[pid(0)], g.map(|v| -v));
            }
            Op::Scale(c) => {
                let c = *c;
                acc(&mut grads[pid(0)], g.map(|v| v * c));
            }
            Op::Gather { ids } => {
                let table = pval(0);
                let (v, d) = table.as_2d();
                let mut dt = vec![T::zero(); v * d];
                for (row, &id) in ids.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] = dt[id * d + j] + g.data()[row * d + j];
                    }
                }
                acc(&mut grads[pid(0)], Tensor::new(table.shape().to_vec(), dt));
            }
            Op::SumAll => {
                let gs = g.item();
                acc(&mut grads[pid(0)], pval(0).map(|_| gs));
            }
            Op::L1 => {
                let gs = g.item();
                let delta = pval(0).map(|x| {
                    if x > T::zero() {
                        gs
                    } else if x < T::zero() {
                        -gs
                    } else {
                        T::zero()
                    }
                });
                acc(&mut grads[pid(0)], delta);
            }
            Op::L2 => {
                let gs = g.item();
                let two = T::from_f64(2.0);
                acc(&mut grads[pid(0)], pval(0).map(|x| two * x * gs));
            }
            Op::Log => {
                acc(&mut grads[pid(0)], g.zip_map(pval(0), |gv, x| gv / x));
            }
        }
    }
}
