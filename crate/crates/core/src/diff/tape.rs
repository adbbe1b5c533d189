//! Wengert tape: every primitive records its inputs and output value, and
//! `backward` replays the adjoint rules in reverse recording order.
//!
//! Shapes never broadcast. The only way to tile a row is the explicit
//! [`Tape::repeat_rows`] primitive.

use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{check_shape, numel};
use super::{DiffError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unary {
    Sigmoid,
    Tanh,
    Relu,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Aggregate(Var, Var),
    Binary(Binary, Var, Var),
    Unary(Unary, Var),
    Scale(Var, f64),
    Concat { parts: Vec<Var>, axis: usize },
    Narrow { x: Var, axis: usize, start: usize },
    GatherRows { x: Var, index: Vec<usize> },
    Reshape(Var),
    RepeatRows(Var),
    Sum(Var),
    MaskedSoftmax(Var),
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
    trainable: bool,
    grad: Option<Vec<f64>>,
}

/// Ordered record of executed primitives.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn ensure_finite(op: &'static str, values: &[f64]) -> Result<(), DiffError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DiffError::NonFinite { op })
    }
}

fn as_matrix(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [n] => Some((1, *n)),
        [r, c] => Some((*r, *c)),
        _ => None,
    }
}

/// Sum of `terms` after sorting them, so the result does not depend on the
/// order in which the terms were produced.
pub(crate) fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node. Outstanding `Var`s become invalid;
    /// tensors that were copied onto the tape are unaffected.
    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Accumulated gradient of a trainable leaf, if `backward` reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Copies a node out as a standalone tensor (without gradient).
    pub fn to_tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("tape values are finite")
    }

    pub fn zero_grads(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            needs_grad,
            trainable: false,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records a trainable leaf whose gradient is collected by `backward`.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        let v = self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, true);
        self.nodes[v.0].trainable = true;
        v
    }

    /// Records a constant: no gradient flows into it.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, false)
    }

    pub fn constant_from(
        &mut self,
        shape: impl Into<Vec<usize>>,
        values: Vec<f64>,
    ) -> Result<Var, DiffError> {
        let shape = shape.into();
        check_shape(&shape, values.len())?;
        ensure_finite("constant", &values)?;
        Ok(self.push(shape, values, Op::Leaf, false))
    }

    pub fn zeros(&mut self, shape: impl Into<Vec<usize>>) -> Result<Var, DiffError> {
        let shape = shape.into();
        let n = numel(&shape);
        self.constant_from(shape, vec![0.0; n])
    }

    /// Matrix product `a · b` of `[m×k]` and `[k×n]` operands.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (m, k, n) = self.matmul_dims("matmul", a, b)?;
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        ensure_finite("matmul", &out)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), ng))
    }

    /// Matrix product whose inner sums are accumulated in sorted order, so
    /// each output entry is independent of the ordering of the inner index.
    /// Used for neighbor aggregation, where the inner index is a
    /// pedestrian label.
    pub fn aggregate(&mut self, weights: Var, values: Var) -> Result<Var, DiffError> {
        let (m, k, n) = self.matmul_dims("aggregate", weights, values)?;
        let w = self.value(weights);
        let v = self.value(values);
        let mut out = vec![0.0; m * n];
        let mut terms = vec![0.0; k];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    terms[p] = w[i * k + p] * v[p * n + j];
                }
                out[i * n + j] = sorted_sum(&mut terms);
            }
        }
        ensure_finite("aggregate", &out)?;
        let ng = self.needs(weights) || self.needs(values);
        Ok(self.push(vec![m, n], out, Op::Aggregate(weights, values), ng))
    }

    fn matmul_dims(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
    ) -> Result<(usize, usize, usize), DiffError> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        match (sa, sb) {
            ([m, k], [k2, n]) if k == k2 => Ok((*m, *k, *n)),
            _ => Err(DiffError::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            }),
        }
    }

    pub fn binary(&mut self, kind: Binary, a: Var, b: Var) -> Result<Var, DiffError> {
        let name = match kind {
            Binary::Add => "add",
            Binary::Sub => "sub",
            Binary::Mul => "mul",
        };
        if self.shape(a) != self.shape(b) {
            return Err(DiffError::ShapeMismatch {
                op: name,
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let (x, y) = (self.value(a), self.value(b));
        let out: Vec<f64> = match kind {
            Binary::Add => x.iter().zip(y).map(|(p, q)| p + q).collect(),
            Binary::Sub => x.iter().zip(y).map(|(p, q)| p - q).collect(),
            Binary::Mul => x.iter().zip(y).map(|(p, q)| p * q).collect(),
        };
        ensure_finite(name, &out)?;
        let shape = self.shape(a).to_vec();
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(shape, out, Op::Binary(kind, a, b), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.binary(Binary::Mul, a, b)
    }

    pub fn unary(&mut self, kind: Unary, x: Var) -> Result<Var, DiffError> {
        let v = self.value(x);
        let (name, out): (&'static str, Vec<f64>) = match kind {
            Unary::Sigmoid => ("sigmoid", v.iter().map(|&t| sigmoid(t)).collect()),
            Unary::Tanh => ("tanh", v.iter().map(|&t| libm::tanh(t)).collect()),
            Unary::Relu => (
                "relu",
                v.iter().map(|&t| if t > 0.0 { t } else { 0.0 }).collect(),
            ),
            Unary::Exp => ("exp", v.iter().map(|&t| libm::exp(t)).collect()),
        };
        ensure_finite(name, &out)?;
        let shape = self.shape(x).to_vec();
        let ng = self.needs(x);
        Ok(self.push(shape, out, Op::Unary(kind, x), ng))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, DiffError> {
        self.unary(Unary::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, DiffError> {
        self.unary(Unary::Tanh, x)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, DiffError> {
        self.unary(Unary::Relu, x)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var, DiffError> {
        self.unary(Unary::Exp, x)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, DiffError> {
        let out: Vec<f64> = self.value(x).iter().map(|v| v * factor).collect();
        ensure_finite("scale", &out)?;
        let shape = self.shape(x).to_vec();
        let ng = self.needs(x);
        Ok(self.push(shape, out, Op::Scale(x, factor), ng))
    }

    /// Joins tensors along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, DiffError> {
        let first = *parts
            .first()
            .ok_or(DiffError::EmptyInput { op: "concat" })?;
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(DiffError::BadAxis {
                axis,
                rank: base.len(),
            });
        }
        let mut along = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(DiffError::ShapeMismatch {
                    op: "concat",
                    left: base,
                    right: s.to_vec(),
                });
            }
            along += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut shape = base.clone();
        shape[axis] = along;
        let mut out = Vec::with_capacity(numel(&shape));
        for o in 0..outer {
            for &p in parts {
                let chunk = self.shape(p)[axis] * inner;
                out.extend_from_slice(&self.value(p)[o * chunk..(o + 1) * chunk]);
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            shape,
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            ng,
        ))
    }

    /// Slice `[start, start+len)` along `axis`.
    pub fn narrow(
        &mut self,
        x: Var,
        axis: usize,
        start: usize,
        len: usize,
    ) -> Result<Var, DiffError> {
        let s = self.shape(x).to_vec();
        if axis >= s.len() {
            return Err(DiffError::BadAxis {
                axis,
                rank: s.len(),
            });
        }
        if len == 0 || start + len > s[axis] {
            return Err(DiffError::IndexOutOfBounds {
                index: start + len,
                len: s[axis],
            });
        }
        let outer: usize = s[..axis].iter().product();
        let inner: usize = s[axis + 1..].iter().product();
        let src = self.value(x);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * s[axis] * inner;
            out.extend_from_slice(&src[base + start * inner..base + (start + len) * inner]);
        }
        let mut shape = s;
        shape[axis] = len;
        let ng = self.needs(x);
        Ok(self.push(shape, out, Op::Narrow { x, axis, start }, ng))
    }

    /// Selects rows of a 2-D tensor; indices may repeat.
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Result<Var, DiffError> {
        let (rows, cols) = match self.shape(x) {
            [r, c] => (*r, *c),
            s => {
                return Err(DiffError::ShapeMismatch {
                    op: "gather_rows",
                    left: s.to_vec(),
                    right: vec![],
                })
            }
        };
        if index.is_empty() {
            return Err(DiffError::EmptyInput { op: "gather_rows" });
        }
        let src = self.value(x);
        let mut out = Vec::with_capacity(index.len() * cols);
        for &i in index {
            if i >= rows {
                return Err(DiffError::IndexOutOfBounds {
                    index: i,
                    len: rows,
                });
            }
            out.extend_from_slice(&src[i * cols..(i + 1) * cols]);
        }
        let ng = self.needs(x);
        Ok(self.push(
            vec![index.len(), cols],
            out,
            Op::GatherRows {
                x,
                index: index.to_vec(),
            },
            ng,
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: impl Into<Vec<usize>>) -> Result<Var, DiffError> {
        let shape = shape.into();
        check_shape(&shape, self.value(x).len())?;
        let out = self.value(x).to_vec();
        let ng = self.needs(x);
        Ok(self.push(shape, out, Op::Reshape(x), ng))
    }

    /// Tiles a single row (`[n]` or `[1×n]`) into `[rows×n]`.
    pub fn repeat_rows(&mut self, x: Var, rows: usize) -> Result<Var, DiffError> {
        let n = match self.shape(x) {
            [n] | [1, n] => *n,
            s => {
                return Err(DiffError::ShapeMismatch {
                    op: "repeat_rows",
                    left: s.to_vec(),
                    right: vec![1],
                })
            }
        };
        if rows == 0 {
            return Err(DiffError::EmptyInput { op: "repeat_rows" });
        }
        let src = self.value(x);
        let mut out = Vec::with_capacity(rows * n);
        for _ in 0..rows {
            out.extend_from_slice(src);
        }
        let ng = self.needs(x);
        Ok(self.push(vec![rows, n], out, Op::RepeatRows(x), ng))
    }

    /// Sum of all entries, as a `[1]` scalar.
    pub fn sum(&mut self, x: Var) -> Result<Var, DiffError> {
        let s: f64 = self.value(x).iter().sum();
        ensure_finite("sum", &[s])?;
        let ng = self.needs(x);
        Ok(self.push(vec![1], vec![s], Op::Sum(x), ng))
    }

    /// Row-wise softmax over the last axis restricted to `mask`. Masked
    /// entries are exactly zero. Each row is shifted by its largest unmasked
    /// logit and its normalizer is summed in sorted order.
    pub fn masked_softmax(&mut self, logits: Var, mask: &[bool]) -> Result<Var, DiffError> {
        let shape = self.shape(logits).to_vec();
        let (rows, cols) = as_matrix(&shape).ok_or_else(|| DiffError::ShapeMismatch {
            op: "masked_softmax",
            left: shape.clone(),
            right: vec![],
        })?;
        if mask.len() != rows * cols {
            return Err(DiffError::ShapeMismatch {
                op: "masked_softmax",
                left: shape,
                right: vec![mask.len()],
            });
        }
        let x = self.value(logits);
        let mut out = vec![0.0; rows * cols];
        let mut terms = Vec::with_capacity(cols);
        for r in 0..rows {
            let xs = &x[r * cols..(r + 1) * cols];
            let ms = &mask[r * cols..(r + 1) * cols];
            let max = xs
                .iter()
                .zip(ms)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(DiffError::EmptyNeighborSet { row: r });
            }
            let o = &mut out[r * cols..(r + 1) * cols];
            terms.clear();
            for c in 0..cols {
                if ms[c] {
                    let e = libm::exp(xs[c] - max);
                    o[c] = e;
                    terms.push(e);
                }
            }
            let z = sorted_sum(&mut terms);
            for c in 0..cols {
                if ms[c] {
                    o[c] /= z;
                }
            }
        }
        ensure_finite("masked_softmax", &out)?;
        let ng = self.needs(logits);
        Ok(self.push(shape, out, Op::MaskedSoftmax(logits), ng))
    }

    /// Replays adjoints from the scalar `root` and adds `∂root/∂leaf` into
    /// every reachable trainable leaf. Repeated calls accumulate.
    pub fn backward(&mut self, root: Var) -> Result<(), DiffError> {
        if self.nodes[root.0].value.len() != 1 {
            return Err(DiffError::NonScalarRoot {
                shape: self.nodes[root.0].shape.clone(),
            });
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(vec![1.0]);
        for i in (0..=root.0).rev() {
            let Some(d) = adj[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                let node = &mut self.nodes[i];
                if node.trainable {
                    match &mut node.grad {
                        Some(g) => g.iter_mut().zip(&d).for_each(|(g, d)| *g += d),
                        None => node.grad = Some(d),
                    }
                }
                continue;
            }
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) | Op::Aggregate(a, b) => {
                    let (a, b) = (*a, *b);
                    let (m, k) = (self.nodes[a.0].shape[0], self.nodes[a.0].shape[1]);
                    let n = self.nodes[b.0].shape[1];
                    if self.needs(a) {
                        // dA = dC · Bᵀ
                        let bv = &self.nodes[b.0].value;
                        let mut da = vec![0.0; m * k];
                        for r in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for c in 0..n {
                                    s += d[r * n + c] * bv[p * n + c];
                                }
                                da[r * k + p] = s;
                            }
                        }
                        accumulate(&mut adj, a, da);
                    }
                    if self.needs(b) {
                        // dB = Aᵀ · dC
                        let av = &self.nodes[a.0].value;
                        let mut db = vec![0.0; k * n];
                        for r in 0..m {
                            for p in 0..k {
                                let x = av[r * k + p];
                                if x == 0.0 {
                                    continue;
                                }
                                for c in 0..n {
                                    db[p * n + c] += x * d[r * n + c];
                                }
                            }
                        }
                        accumulate(&mut adj, b, db);
                    }
                }
                Op::Binary(kind, a, b) => {
                    let (kind, a, b) = (*kind, *a, *b);
                    match kind {
                        Binary::Add => {
                            if self.needs(a) {
                                accumulate(&mut adj, a, d.clone());
                            }
                            if self.needs(b) {
                                accumulate(&mut adj, b, d);
                            }
                        }
                        Binary::Sub => {
                            if self.needs(a) {
                                accumulate(&mut adj, a, d.clone());
                            }
                            if self.needs(b) {
                                accumulate(&mut adj, b, d.iter().map(|v| -v).collect());
                            }
                        }
                        Binary::Mul => {
                            if self.needs(a) {
                                let bv = &self.nodes[b.0].value;
                                let da = d.iter().zip(bv).map(|(g, y)| g * y).collect();
                                accumulate(&mut adj, a, da);
                            }
                            if self.needs(b) {
                                let av = &self.nodes[a.0].value;
                                let db = d.iter().zip(av).map(|(g, x)| g * x).collect();
                                accumulate(&mut adj, b, db);
                            }
                        }
                    }
                }
                Op::Unary(kind, x) => {
                    let y = &node.value;
                    let dx: Vec<f64> = match kind {
                        Unary::Sigmoid => d.iter().zip(y).map(|(g, s)| g * s * (1.0 - s)).collect(),
                        Unary::Tanh => d.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect(),
                        Unary::Exp => d.iter().zip(y).map(|(g, e)| g * e).collect(),
                        Unary::Relu => {
                            let xv = &self.nodes[x.0].value;
                            d.iter()
                                .zip(xv)
                                .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                                .collect()
                        }
                    };
                    let x = *x;
                    accumulate(&mut adj, x, dx);
                }
                Op::Scale(x, f) => {
                    let (x, f) = (*x, *f);
                    accumulate(&mut adj, x, d.iter().map(|g| g * f).collect());
                }
                Op::Concat { parts, axis } => {
                    let axis = *axis;
                    let parts = parts.clone();
                    let shape = &node.shape;
                    let outer: usize = shape[..axis].iter().product();
                    let inner: usize = shape[axis + 1..].iter().product();
                    let total = shape[axis] * inner;
                    let mut offset = 0;
                    for p in parts {
                        let chunk = self.nodes[p.0].shape[axis] * inner;
                        if self.needs(p) {
                            let mut dp = Vec::with_capacity(outer * chunk);
                            for o in 0..outer {
                                dp.extend_from_slice(
                                    &d[o * total + offset..o * total + offset + chunk],
                                );
                            }
                            accumulate(&mut adj, p, dp);
                        }
                        offset += chunk;
                    }
                }
                Op::Narrow { x, axis, start } => {
                    let (x, axis, start) = (*x, *axis, *start);
                    let src = &self.nodes[x.0].shape;
                    let outer: usize = src[..axis].iter().product();
                    let inner: usize = src[axis + 1..].iter().product();
                    let len = node.shape[axis];
                    let mut dx = vec![0.0; numel(src)];
                    for o in 0..outer {
                        let base = o * src[axis] * inner + start * inner;
                        dx[base..base + len * inner]
                            .copy_from_slice(&d[o * len * inner..(o + 1) * len * inner]);
                    }
                    accumulate(&mut adj, x, dx);
                }
                Op::GatherRows { x, index } => {
                    let x = *x;
                    let cols = node.shape[1];
                    let mut dx = vec![0.0; self.nodes[x.0].value.len()];
                    for (r, &i) in index.iter().enumerate() {
                        for c in 0..cols {
                            dx[i * cols + c] += d[r * cols + c];
                        }
                    }
                    accumulate(&mut adj, x, dx);
                }
                Op::Reshape(x) => {
                    let x = *x;
                    accumulate(&mut adj, x, d);
                }
                Op::RepeatRows(x) => {
                    let x = *x;
                    let n = node.shape[1];
                    let mut dx = vec![0.0; n];
                    for row in d.chunks(n) {
                        dx.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                    accumulate(&mut adj, x, dx);
                }
                Op::Sum(x) => {
                    let x = *x;
                    let n = self.nodes[x.0].value.len();
                    accumulate(&mut adj, x, vec![d[0]; n]);
                }
                Op::MaskedSoftmax(x) => {
                    let x = *x;
                    let (rows, cols) = as_matrix(&node.shape).expect("checked at record time");
                    let y = &node.value;
                    let mut dx = vec![0.0; rows * cols];
                    for r in 0..rows {
                        let ys = &y[r * cols..(r + 1) * cols];
                        let ds = &d[r * cols..(r + 1) * cols];
                        let dot: f64 = ys.iter().zip(ds).map(|(a, b)| a * b).sum();
                        for c in 0..cols {
                            dx[r * cols + c] = ys[c] * (ds[c] - dot);
                        }
                    }
                    accumulate(&mut adj, x, dx);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Vec<f64>>], v: Var, delta: Vec<f64>) {
    match &mut adj[v.0] {
        Some(g) => g.iter_mut().zip(&delta).for_each(|(g, d)| *g += d),
        slot @ None => *slot = Some(delta),
    }
}
