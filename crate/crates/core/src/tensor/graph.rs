use std::fmt;
use std::rc::Rc;

use super::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_LOG_EPS: f64 = 1e-7;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

type ElementFn = Rc<dyn Fn(f64) -> f64>;

#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Abs(Var),
    Square(Var),
    LogGuarded(Var, f64),
    ScalarMul(Var, f64),
    AddScalar(Var),
    Sum(Var),
    Mean(Var),
    Concat(Vec<Var>, usize),
    Gather(Var, Rc<Vec<usize>>),
    RowGroupSum(Var, Rc<Vec<Vec<usize>>>),
    Map(Var, ElementFn),
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Relu(..) => "relu",
            Op::Sigmoid(..) => "sigmoid",
            Op::Abs(..) => "abs",
            Op::Square(..) => "square",
            Op::LogGuarded(..) => "log_guarded",
            Op::ScalarMul(..) => "scalar_mul",
            Op::AddScalar(..) => "add_scalar",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::Concat(..) => "concat",
            Op::Gather(..) => "gather",
            Op::RowGroupSum(..) => "row_group_sum",
            Op::Map(..) => "map",
        };
        f.write_str(name)
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records a computation for reverse-mode differentiation.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every trainable leaf.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `var`; `None` for constants and non-leaf nodes.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
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

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let t = &self.nodes[a.0].value;
        let value = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|&x| f(x)).collect(),
        };
        let rg = self.needs(&[a]);
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape.len() != 2 || tb.shape.len() != 2 || ta.shape[1] != tb.shape[0] {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(&ta.data, &tb.data, &mut out, m, k, n);
        let rg = self.needs(&[a, b]);
        Ok(self.push(
            Tensor {
                shape: vec![m, n],
                data: out,
            },
            Op::MatMul(a, b),
            rg,
        ))
    }

    /// Elementwise sum of equal shapes, or a `[m, n]` matrix plus a bias of
    /// shape `[n]` / `[1, n]` added to every row.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let rg = self.needs(&[a, b]);
        if ta.shape == tb.shape {
            let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
            let shape = ta.shape.clone();
            return Ok(self.push(Tensor { shape, data }, Op::Add(a, b), rg));
        }
        let is_row = tb.shape.len() == 1 || (tb.shape.len() == 2 && tb.shape[0] == 1);
        if ta.shape.len() == 2 && is_row && tb.numel() == ta.shape[1] {
            let n = ta.shape[1];
            let data = ta.data.iter().enumerate().map(|(i, x)| x + tb.data[i % n]).collect();
            let shape = ta.shape.clone();
            return Ok(self.push(Tensor { shape, data }, Op::AddRow(a, b), rg));
        }
        Err(shape_err("add", ta, tb))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return Err(shape_err("sub", ta, tb));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x - y).collect();
        let shape = ta.shape.clone();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return Err(shape_err("mul", ta, tb));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let shape = ta.shape.clone();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Mul(a, b), rg))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, Op::Abs(a), f64::abs)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    /// `ln(max(x, eps))`; the gradient is zero where the guard is active.
    pub fn log_guarded(&mut self, a: Var, eps: f64) -> Result<Var> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Tensor(format!("log guard must be positive, got {eps}")));
        }
        Ok(self.unary(a, Op::LogGuarded(a, eps), move |x| x.max(eps).ln()))
    }

    pub fn scalar_mul(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::ScalarMul(a, c), move |x| c * x)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::AddScalar(a), move |x| x + c)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scalar_mul(a, -1.0)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        let rg = self.needs(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.numel() == 0 {
            return Err(Error::Tensor("mean of an empty tensor".into()));
        }
        let m = t.data.iter().sum::<f64>() / t.numel() as f64;
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor::scalar(m), Op::Mean(a), rg))
    }

    /// Concatenates 2-D tensors along `axis` (0 = rows, 1 = columns), or
    /// 1-D tensors along axis 0.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Tensor("concat of zero tensors".into()));
        };
        let t0 = self.value(first);
        let rank = t0.shape.len();
        if axis >= rank.max(1) || rank > 2 {
            return Err(Error::Tensor(format!("concat axis {axis} invalid for rank {rank}")));
        }
        for &p in &parts[1..] {
            let t = self.value(p);
            let compatible = t.shape.len() == rank
                && t.shape
                    .iter()
                    .zip(&t0.shape)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(shape_err("concat", t0, t));
            }
        }
        let value = if rank == 1 || axis == 0 {
            let mut shape = t0.shape.clone();
            shape[axis] = parts.iter().map(|&p| self.value(p).shape[axis]).sum();
            let data = parts.iter().flat_map(|&p| self.value(p).data.iter().copied()).collect();
            Tensor { shape, data }
        } else {
            let rows = t0.shape[0];
            let cols: usize = parts.iter().map(|&p| self.value(p).shape[1]).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row(r));
                }
            }
            Tensor {
                shape: vec![rows, cols],
                data,
            }
        };
        let rg = self.needs(parts);
        Ok(self.push(value, Op::Concat(parts.to_vec(), axis), rg))
    }

    /// `out.flat[t] = a.flat[indices[t]]`, reshaped to `shape`.
    pub fn gather(&mut self, a: Var, indices: Vec<usize>, shape: Vec<usize>) -> Result<Var> {
        let t = self.value(a);
        if shape.iter().product::<usize>() != indices.len() {
            return Err(Error::Tensor(format!(
                "gather: {} indices do not fill shape {shape:?}",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= t.numel()) {
            return Err(Error::Tensor(format!(
                "gather: index {bad} out of range for {} elements",
                t.numel()
            )));
        }
        let data = indices.iter().map(|&i| t.data[i]).collect();
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::Gather(a, Rc::new(indices)), rg))
    }

    /// Row `g` of the output is the sum of the rows of `a` listed in
    /// `groups[g]` (an empty group gives a zero row). Each column is summed
    /// in ascending value order, so the result does not depend on the order
    /// of the group members.
    pub fn row_group_sum(&mut self, a: Var, groups: Rc<Vec<Vec<usize>>>) -> Result<Var> {
        let t = self.value(a);
        if t.shape.len() != 2 {
            return Err(Error::Tensor(format!(
                "row_group_sum needs a matrix, got {:?}",
                t.shape
            )));
        }
        let (rows, cols) = (t.shape[0], t.shape[1]);
        if let Some(&r) = groups.iter().flatten().find(|&&r| r >= rows) {
            return Err(Error::Tensor(format!("row_group_sum: row {r} out of range {rows}")));
        }
        let mut data = vec![0.0; groups.len() * cols];
        let mut column = Vec::new();
        for (g, members) in groups.iter().enumerate() {
            let out = &mut data[g * cols..(g + 1) * cols];
            if members.len() <= 2 {
                // addition of two terms is already commutative
                for &r in members {
                    for (o, x) in out.iter_mut().zip(t.row(r)) {
                        *o += x;
                    }
                }
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                column.clear();
                column.extend(members.iter().map(|&r| t.data[r * cols + c]));
                column.sort_unstable_by(f64::total_cmp);
                *o = column.iter().sum();
            }
        }
        let shape = vec![groups.len(), cols];
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::RowGroupSum(a, groups), rg))
    }

    /// Elementwise map with a caller-supplied derivative.
    pub fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64 + 'static) -> Var {
        let d: ElementFn = Rc::new(df);
        self.unary(a, Op::Map(a, d), f)
    }

    /// Back-propagates from the one-element node `output`.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out_val = self.value(output);
        if out_val.numel() != 1 {
            return Err(Error::Tensor(format!(
                "backward needs a scalar output, got shape {:?}",
                out_val.shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        let mut leaves: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(vec![1.0]);

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else {
                if matches!(node.op, Op::Leaf) {
                    leaves[i] = Some(Tensor::zeros(&node.value.shape));
                }
                continue;
            };
            self.propagate(node, &g, &mut grads);
            if matches!(node.op, Op::Leaf) {
                leaves[i] = Some(Tensor {
                    shape: node.value.shape.clone(),
                    data: g,
                });
            }
        }
        for (i, node) in self.nodes.iter().enumerate().skip(output.0 + 1) {
            if node.requires_grad && matches!(node.op, Op::Leaf) {
                leaves[i] = Some(Tensor::zeros(&node.value.shape));
            }
        }
        Ok(Gradients { grads: leaves })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.numel()]);
            f(slot);
        };
        let val = |v: Var| &self.nodes[v.0].value;
        let y = &node.value.data;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
                acc(*a, &mut |da| {
                    for i in 0..m {
                        let gi = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let bp = &tb.data[p * n..(p + 1) * n];
                            da[i * k + p] += gi.iter().zip(bp).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                acc(*b, &mut |db| {
                    for i in 0..m {
                        let gi = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let x = ta.data[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for (d, gv) in db[p * n..(p + 1) * n].iter_mut().zip(gi) {
                                *d += x * gv;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |d| add_assign(d, g));
                acc(*b, &mut |d| add_assign(d, g));
            }
            Op::AddRow(a, b) => {
                acc(*a, &mut |d| add_assign(d, g));
                let n = val(*b).numel();
                acc(*b, &mut |d| {
                    for (i, gv) in g.iter().enumerate() {
                        d[i % n] += gv;
                    }
                });
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |d| add_assign(d, g));
                acc(*b, &mut |d| {
                    for (x, gv) in d.iter_mut().zip(g) {
                        *x -= gv;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                acc(*a, &mut |d| {
                    for ((x, gv), bv) in d.iter_mut().zip(g).zip(&tb.data) {
                        *x += gv * bv;
                    }
                });
                acc(*b, &mut |d| {
                    for ((x, gv), av) in d.iter_mut().zip(g).zip(&ta.data) {
                        *x += gv * av;
                    }
                });
            }
            Op::Relu(a) => {
                let x = &val(*a).data;
                acc(*a, &mut |d| {
                    for i in 0..d.len() {
                        if x[i] > 0.0 {
                            d[i] += g[i];
                        }
                    }
                });
            }
            Op::Sigmoid(a) => acc(*a, &mut |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * y[i] * (1.0 - y[i]);
                }
            }),
            Op::Abs(a) => {
                let x = &val(*a).data;
                acc(*a, &mut |d| {
                    for i in 0..d.len() {
                        // subgradient 0 at the kink
                        if x[i] > 0.0 {
                            d[i] += g[i];
                        } else if x[i] < 0.0 {
                            d[i] -= g[i];
                        }
                    }
                });
            }
            Op::Square(a) => {
                let x = &val(*a).data;
                acc(*a, &mut |d| {
                    for i in 0..d.len() {
                        d[i] += 2.0 * x[i] * g[i];
                    }
                });
            }
            Op::LogGuarded(a, eps) => {
                let x = &val(*a).data;
                acc(*a, &mut |d| {
                    for i in 0..d.len() {
                        if x[i] > *eps {
                            d[i] += g[i] / x[i];
                        }
                    }
                });
            }
            Op::ScalarMul(a, c) => acc(*a, &mut |d| {
                for (x, gv) in d.iter_mut().zip(g) {
                    *x += c * gv;
                }
            }),
            Op::AddScalar(a) => acc(*a, &mut |d| add_assign(d, g)),
            Op::Sum(a) => acc(*a, &mut |d| d.iter_mut().for_each(|x| *x += g[0])),
            Op::Mean(a) => {
                let n = val(*a).numel() as f64;
                acc(*a, &mut |d| d.iter_mut().for_each(|x| *x += g[0] / n));
            }
            Op::Concat(parts, axis) => {
                let rank = node.value.shape.len();
                if rank == 1 || *axis == 0 {
                    let mut off = 0;
                    for &p in parts {
                        let len = val(p).numel();
                        acc(p, &mut |d| add_assign(d, &g[off..off + len]));
                        off += len;
                    }
                } else {
                    let rows = node.value.shape[0];
                    let total = node.value.shape[1];
                    let mut col = 0;
                    for &p in parts {
                        let w = val(p).shape[1];
                        acc(p, &mut |d| {
                            for r in 0..rows {
                                add_assign(&mut d[r * w..(r + 1) * w], &g[r * total + col..r * total + col + w]);
                            }
                        });
                        col += w;
                    }
                }
            }
            Op::Gather(a, idx) => acc(*a, &mut |d| {
                for (t, &i) in idx.iter().enumerate() {
                    d[i] += g[t];
                }
            }),
            Op::RowGroupSum(a, groups) => {
                let cols = node.value.shape[1];
                acc(*a, &mut |d| {
                    for (gi, members) in groups.iter().enumerate() {
                        let grow = &g[gi * cols..(gi + 1) * cols];
                        for &r in members {
                            add_assign(&mut d[r * cols..(r + 1) * cols], grow);
                        }
                    }
                });
            }
            Op::Map(a, df) => {
                let x = &val(*a).data;
                acc(*a, &mut |d| {
                    for i in 0..d.len() {
                        d[i] += g[i] * df(x[i]);
                    }
                });
            }
        }
    }
}

fn add_assign(d: &mut [f64], g: &[f64]) {
    for (x, gv) in d.iter_mut().zip(g) {
        *x += gv;
    }
}

/// `out[m, n] = a[m, k] * b[k, n]`, skipping zero entries of `a`.
pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += x * bv;
            }
        }
    }
}
