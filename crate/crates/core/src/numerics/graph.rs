//! Define-by-run computation graph with reverse-mode gradients.
//!
//! Every operation appends a node holding its output value and enough
//! bookkeeping to run its backward rule. Nodes are appended in evaluation
//! order, so the node list is already topologically sorted and the
//! backward pass is a single reverse sweep.

use super::kernels;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Tags accepted by [`Graph::elementwise`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseOp {
    Tanh,
    Sigmoid,
    Relu,
    Add,
    Mul,
    ConcatLastAxis,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Row { src: Var, index: usize },
    ScatterRows(Vec<(usize, Var)>),
    Reshape(Var),
    MaskedSoftmax(Var),
    Sum(Var),
    NegLogPick { src: Var, index: usize, floor: f64 },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0)?.as_deref()
    }

    pub fn tensor(&self, v: Var) -> Option<Tensor> {
        let g = self.get(v)?;
        Some(Tensor::from_parts(self.shapes[v.0].clone(), g.to_vec()))
    }

    /// Moves the gradient buffer out, leaving `None` behind.
    pub fn take(&mut self, v: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(v.0)?.take()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    /// `a · b` for `a: [m, k]` (or a `[k]` row vector) and `b: [k, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = kernels::matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    /// `a · bᵀ` for `a: [m, k]` and `b: [n, k]`.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[1] {
            return Err(Error::shape("matmul_bt", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[0]);
        let (da, db) = (self.data(a), self.data(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let ar = &da[i * k..(i + 1) * k];
            for j in 0..n {
                out[i * n + j] = kernels::dot(ar, &db[j * k..(j + 1) * k]);
            }
        }
        let value = Tensor::from_parts(vec![m, n], out);
        Ok(self.push(value, Op::MatMulBt(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip(a, b, "add", |x, y| x + y)?;
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    fn zip(&self, a: Var, b: Var, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(op, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor::from_parts(ta.shape().to_vec(), data))
    }

    /// Adds the vector `b: [n]` to every row of `a: [.., n]`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if tb.ndim() != 1 || ta.width() != tb.len() {
            return Err(Error::shape("add_row", ta.shape(), tb.shape()));
        }
        let w = tb.len();
        let bias = tb.data();
        let data = ta.data().iter().enumerate().map(|(i, &x)| x + bias[i % w]).collect();
        let value = Tensor::from_parts(ta.shape().to_vec(), data);
        Ok(self.push(value, Op::AddRow(a, b), &[a, b]))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(value, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(kernels::sigmoid);
        self.push(value, Op::Sigmoid(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push(value, Op::Relu(a), &[a])
    }

    /// Concatenates along the last axis; leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyInput("concat of zero tensors".into()))?;
        let lead = &self.shape(*first)[..self.shape(*first).len() - 1];
        for p in &parts[1..] {
            let s = self.shape(*p);
            if &s[..s.len() - 1] != lead {
                return Err(Error::shape("concat", self.shape(*first), s));
            }
        }
        let rows = self.value(*first).rows();
        let width: usize = parts.iter().map(|p| self.value(*p).width()).sum();
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let mut shape = lead.to_vec();
        shape.push(width);
        let value = Tensor::from_parts(shape, data);
        Ok(self.push(value, Op::Concat(parts.to_vec()), parts))
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(src);
        let w = t.width();
        if len == 0 || start + len > w {
            return Err(Error::shape("slice", t.shape(), &[start, start + len]));
        }
        let mut data = Vec::with_capacity(t.rows() * len);
        for r in 0..t.rows() {
            data.extend_from_slice(&t.row(r)[start..start + len]);
        }
        let mut shape = t.shape().to_vec();
        *shape.last_mut().unwrap() = len;
        let value = Tensor::from_parts(shape, data);
        Ok(self.push(value, Op::Slice { src, start }, &[src]))
    }

    /// Row `index` of a matrix, as a vector.
    pub fn row(&mut self, src: Var, index: usize) -> Result<Var> {
        let t = self.value(src);
        if t.ndim() != 2 || index >= t.shape()[0] {
            return Err(Error::shape("row", t.shape(), &[index]));
        }
        let value = Tensor::from_parts(vec![t.width()], t.row(index).to_vec());
        Ok(self.push(value, Op::Row { src, index }, &[src]))
    }

    /// Builds an `[n_rows, width]` matrix from vectors placed at the given
    /// row indices; rows not listed are zero.
    pub fn scatter_rows(&mut self, n_rows: usize, width: usize, rows: &[(usize, Var)]) -> Result<Var> {
        let mut data = vec![0.0; n_rows * width];
        let mut seen = vec![false; n_rows];
        for &(r, v) in rows {
            let t = self.value(v);
            if r >= n_rows || t.shape() != [width] || seen[r] {
                return Err(Error::shape("scatter_rows", &[n_rows, width], t.shape()));
            }
            seen[r] = true;
            data[r * width..(r + 1) * width].copy_from_slice(t.data());
        }
        let inputs: Vec<Var> = rows.iter().map(|&(_, v)| v).collect();
        let value = Tensor::from_parts(vec![n_rows, width], data);
        Ok(self.push(value, Op::ScatterRows(rows.to_vec()), &inputs))
    }

    pub fn reshape(&mut self, src: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(src).reshape(shape)?;
        Ok(self.push(value, Op::Reshape(src), &[src]))
    }

    /// Softmax over the slots where `mask` is true; masked slots are exactly 0.
    pub fn masked_softmax(&mut self, src: Var, mask: &[bool]) -> Result<Var> {
        let value = kernels::masked_softmax(self.value(src), mask)?;
        Ok(self.push(value, Op::MaskedSoftmax(src), &[src]))
    }

    pub fn softmax(&mut self, src: Var) -> Result<Var> {
        let mask = vec![true; self.value(src).len()];
        self.masked_softmax(src, &mask)
    }

    pub fn sum(&mut self, src: Var) -> Var {
        let total = self.value(src).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(src), &[src])
    }

    /// `-ln(max(src[index], floor))` as a scalar.
    pub fn neg_log_pick(&mut self, src: Var, index: usize, floor: f64) -> Result<Var> {
        let t = self.value(src);
        if t.ndim() != 1 || index >= t.len() {
            return Err(Error::shape("neg_log_pick", t.shape(), &[index]));
        }
        let loss = -t.data()[index].max(floor).ln();
        Ok(self.push(Tensor::scalar(loss), Op::NegLogPick { src, index, floor }, &[src]))
    }

    pub fn elementwise(&mut self, op: ElementwiseOp, operands: &[Var]) -> Result<Var> {
        let arity = |n: usize| -> Result<()> {
            if operands.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{op:?} takes {n} operand(s), got {}",
                    operands.len()
                )))
            }
        };
        match op {
            ElementwiseOp::Tanh => arity(1).map(|_| self.tanh(operands[0])),
            ElementwiseOp::Sigmoid => arity(1).map(|_| self.sigmoid(operands[0])),
            ElementwiseOp::Relu => arity(1).map(|_| self.relu(operands[0])),
            ElementwiseOp::Add => arity(2).and_then(|_| self.add(operands[0], operands[1])),
            ElementwiseOp::Mul => arity(2).and_then(|_| self.mul(operands[0], operands[1])),
            ElementwiseOp::ConcatLastAxis => self.concat(operands),
        }
    }

    /// Reverse sweep from a scalar `loss`. Every leaf created with
    /// `requires_grad` ends up with a gradient, zero if it did not
    /// influence the loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape("backward", self.shape(loss), &[1]));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop(node, &g, &mut grads);
            // Interior gradients are kept so callers may inspect them.
            grads[i] = Some(g);
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && grads[i].is_none() {
                grads[i] = Some(vec![0.0; node.value.len()]);
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn backprop(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (k, n) = (tb.shape()[0], tb.shape()[1]);
                let m = ta.len() / k;
                if let Some(ga) = self.slot(grads, *a) {
                    // dA = G · Bᵀ
                    for i in 0..m {
                        let gr = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            ga[i * k + p] += kernels::dot(gr, &tb.data()[p * n..(p + 1) * n]);
                        }
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    // dB = Aᵀ · G
                    let da = ta.data();
                    for i in 0..m {
                        let gr = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            kernels::axpy(da[i * k + p], gr, &mut gb[p * n..(p + 1) * n]);
                        }
                    }
                }
            }
            Op::MatMulBt(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[0]);
                if let Some(ga) = self.slot(grads, *a) {
                    // dA = G · B
                    for i in 0..m {
                        for j in 0..n {
                            let gij = g[i * n + j];
                            kernels::axpy(gij, &tb.data()[j * k..(j + 1) * k], &mut ga[i * k..(i + 1) * k]);
                        }
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    // dB = Gᵀ · A
                    for i in 0..m {
                        for j in 0..n {
                            let gij = g[i * n + j];
                            kernels::axpy(gij, &ta.data()[i * k..(i + 1) * k], &mut gb[j * k..(j + 1) * k]);
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(gv) = self.slot(grads, *v) {
                        kernels::axpy(1.0, g, gv);
                    }
                }
            }
            Op::AddRow(a, b) => {
                if let Some(ga) = self.slot(grads, *a) {
                    kernels::axpy(1.0, g, ga);
                }
                if let Some(gb) = self.slot(grads, *b) {
                    let w = gb.len();
                    for (i, &gi) in g.iter().enumerate() {
                        gb[i % w] += gi;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (da, db) = (self.data(*a), self.data(*b));
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * db[i];
                    }
                }
                if let Some(gb) = self.slot(grads, *b) {
                    for i in 0..g.len() {
                        gb[i] += g[i] * da[i];
                    }
                }
            }
            Op::Tanh(a) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * (1.0 - out[i] * out[i]);
                    }
                }
            }
            Op::Sigmoid(a) => {
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * out[i] * (1.0 - out[i]);
                    }
                }
            }
            Op::Relu(a) => {
                let x = self.data(*a);
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.len() {
                        if x[i] > 0.0 {
                            ga[i] += g[i];
                        }
                    }
                }
            }
            Op::Concat(parts) => {
                let width = node.value.width();
                let rows = node.value.rows();
                let mut offset = 0;
                for p in parts {
                    let w = self.value(*p).width();
                    if let Some(gp) = self.slot(grads, *p) {
                        for r in 0..rows {
                            let src = &g[r * width + offset..r * width + offset + w];
                            kernels::axpy(1.0, src, &mut gp[r * w..(r + 1) * w]);
                        }
                    }
                    offset += w;
                }
            }
            Op::Slice { src, start } => {
                let w_in = self.value(*src).width();
                let w_out = node.value.width();
                if let Some(gs) = self.slot(grads, *src) {
                    for r in 0..node.value.rows() {
                        let dst = &mut gs[r * w_in + start..r * w_in + start + w_out];
                        kernels::axpy(1.0, &g[r * w_out..(r + 1) * w_out], dst);
                    }
                }
            }
            Op::Row { src, index } => {
                let w = node.value.width();
                if let Some(gs) = self.slot(grads, *src) {
                    kernels::axpy(1.0, g, &mut gs[index * w..(index + 1) * w]);
                }
            }
            Op::ScatterRows(rows) => {
                let w = node.value.width();
                for &(r, v) in rows {
                    if let Some(gv) = self.slot(grads, v) {
                        kernels::axpy(1.0, &g[r * w..(r + 1) * w], gv);
                    }
                }
            }
            Op::Reshape(src) => {
                if let Some(gs) = self.slot(grads, *src) {
                    kernels::axpy(1.0, g, gs);
                }
            }
            Op::MaskedSoftmax(src) => {
                // dx_i = y_i (g_i - Σ_j y_j g_j); masked slots have y_i = 0.
                let inner = kernels::dot(out, g);
                if let Some(gs) = self.slot(grads, *src) {
                    for i in 0..g.len() {
                        gs[i] += out[i] * (g[i] - inner);
                    }
                }
            }
            Op::Sum(src) => {
                if let Some(gs) = self.slot(grads, *src) {
                    for v in gs.iter_mut() {
                        *v += g[0];
                    }
                }
            }
            Op::NegLogPick { src, index, floor } => {
                let p = self.data(*src)[*index];
                if let Some(gs) = self.slot(grads, *src) {
                    if p > *floor {
                        gs[*index] -= g[0] / p;
                    }
                }
            }
        }
    }

    /// Gradient buffer for `v`, allocated on first use; `None` when `v`
    /// does not require a gradient.
    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; node.value.len()]))
    }
}
