//! Dynamic tape for reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as a node in creation order, which is
//! already a topological order, so the backward pass is a single reverse
//! sweep. A fresh graph is built for every training step.

use std::collections::HashMap;

use super::array::{gemm, Array2};
use super::AutodiffError;
use crate::params::{ParamId, ParamStore, UpdateSet};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    LogSigmoid(Var),
    Log(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    SelectRows(Var, Vec<usize>),
    Pick(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
    SumCols(Var),
    SqFrobenius(Var),
    RowNorms(Var),
    StopGradient,
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::MulCol(..) => "mul_col",
            Op::Scale(..) => "scale",
            Op::Relu(_) => "relu",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::LogSigmoid(_) => "log_sigmoid",
            Op::Log(_) => "log",
            Op::SoftmaxRows(_) => "softmax_rows",
            Op::LogSoftmaxRows(_) => "log_softmax_rows",
            Op::ConcatCols(_) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::SelectRows(..) => "select_rows",
            Op::Pick(..) => "pick",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::SumCols(_) => "sum_cols",
            Op::SqFrobenius(_) => "sq_frobenius",
            Op::RowNorms(_) => "row_norms",
            Op::StopGradient => "stop_gradient",
        }
    }
}

struct Node {
    value: Array2,
    op: Op,
    requires_grad: bool,
}

/// Which parameters a graph binds as differentiable leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trainable {
    All,
    Only(UpdateSet),
    Nothing,
}

/// Gradients of a scalar with respect to the parameters bound in a graph.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    map: HashMap<ParamId, Array2>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Array2> {
        self.map.get(&id)
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.map.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Array2)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn insert(&mut self, id: ParamId, grad: Array2) {
        self.map.insert(id, grad);
    }
}

pub struct Graph {
    nodes: Vec<Node>,
    trainable: Trainable,
    bound: HashMap<ParamId, Var>,
    frozen: HashMap<ParamId, Var>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::with_trainable(Trainable::All)
    }

    /// A graph whose parameters are all constants; used for scoring and decoding.
    pub fn inference() -> Self {
        Self::with_trainable(Trainable::Nothing)
    }

    pub fn with_trainable(trainable: Trainable) -> Self {
        Self {
            nodes: Vec::new(),
            trainable,
            bound: HashMap::new(),
            frozen: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2 {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a 1×1 node.
    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Array2, op: Op, requires_grad: bool) -> Result<Var, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite {
                op: op.name(),
                pass: "forward",
            });
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: Array2) -> Result<Var, AutodiffError> {
        self.push(value, Op::Leaf, false)
    }

    /// Binds a parameter. Repeated calls return the same node, so gradients from
    /// every use accumulate into one entry. Parameters outside the graph's
    /// trainable set are bound as constants.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<Var, AutodiffError> {
        if let Some(&v) = self.bound.get(&id) {
            return Ok(v);
        }
        let trainable = match self.trainable {
            Trainable::All => true,
            Trainable::Only(set) => set.contains(store.role(id)),
            Trainable::Nothing => false,
        };
        let op = if trainable { Op::Param(id) } else { Op::Leaf };
        let v = self.push(store.value(id).clone(), op, trainable)?;
        self.bound.insert(id, v);
        Ok(v)
    }

    /// Binds a parameter as a constant regardless of the trainable set.
    pub fn frozen(&mut self, store: &ParamStore, id: ParamId) -> Result<Var, AutodiffError> {
        if let Some(&v) = self.frozen.get(&id) {
            return Ok(v);
        }
        let v = match self.bound.get(&id) {
            Some(&v) if !self.requires(v) => v,
            _ => self.constant(store.value(id).clone())?,
        };
        self.frozen.insert(id, v);
        Ok(v)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(AutodiffError::shape(op, sa, sb));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.requires(a) || self.requires(b);
        self.push(value, Op::MatMul(a, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, Op::Sub(a, b), rg)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, Op::Mul(a, b), rg)
    }

    /// Adds a `1×n` bias row to every row of an `m×n` matrix.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.shape(a), self.shape(bias));
        if sb.0 != 1 || sb.1 != sa.1 {
            return Err(AutodiffError::shape("add_row", sa, sb));
        }
        let mut value = self.value(a).clone();
        let cols = sa.1;
        let b = self.value(bias).data().to_vec();
        for row in value.data_mut().chunks_mut(cols.max(1)) {
            for (x, y) in row.iter_mut().zip(&b) {
                *x += y;
            }
        }
        let rg = self.requires(a) || self.requires(bias);
        self.push(value, Op::AddRow(a, bias), rg)
    }

    /// Scales row `i` of an `m×n` matrix by entry `i` of an `m×1` column.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var, AutodiffError> {
        let (sa, sc) = (self.shape(a), self.shape(col));
        if sc.1 != 1 || sc.0 != sa.0 {
            return Err(AutodiffError::shape("mul_col", sa, sc));
        }
        let mut value = self.value(a).clone();
        let w = self.value(col).data().to_vec();
        let cols = sa.1;
        for (row, s) in value.data_mut().chunks_mut(cols.max(1)).zip(&w) {
            for x in row {
                *x *= s;
            }
        }
        let rg = self.requires(a) || self.requires(col);
        self.push(value, Op::MulCol(a, col), rg)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, AutodiffError> {
        let value = self.value(a).map(|x| x * factor);
        let rg = self.requires(a);
        self.push(value, Op::Scale(a, factor), rg)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.scale(a, -1.0)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var, AutodiffError> {
        let value = self.value(a).map(f);
        let rg = self.requires(a);
        self.push(value, op, rg)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    /// `log(sigmoid(x))`, stable for large `|x|`.
    pub fn log_sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Op::LogSigmoid(a), log_sigmoid)
    }

    pub fn log(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Op::Log(a), f64::ln)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let mut value = self.value(a).clone();
        let cols = value.cols();
        for row in value.data_mut().chunks_mut(cols.max(1)) {
            softmax_in_place(row);
        }
        let rg = self.requires(a);
        self.push(value, Op::SoftmaxRows(a), rg)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let mut value = self.value(a).clone();
        let cols = value.cols();
        for row in value.data_mut().chunks_mut(cols.max(1)) {
            log_softmax_in_place(row);
        }
        let rg = self.requires(a);
        self.push(value, Op::LogSoftmaxRows(a), rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let rows = parts.first().map_or(0, |&p| self.shape(p).0);
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(AutodiffError::shape(
                    "concat_cols",
                    self.shape(parts[0]),
                    self.shape(p),
                ));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let value = Array2::from_vec(rows, cols, data)?;
        let rg = parts.iter().any(|&p| self.requires(p));
        self.push(value, Op::ConcatCols(parts.to_vec()), rg)
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, AutodiffError> {
        let (rows, cols) = self.shape(a);
        if start > end || end > cols {
            return Err(AutodiffError::shape("slice_cols", (rows, cols), (start, end)));
        }
        let src = self.value(a);
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&src.row_slice(r)[start..end]);
        }
        let value = Array2::from_vec(rows, end - start, data)?;
        let rg = self.requires(a);
        self.push(value, Op::SliceCols(a, start), rg)
    }

    /// Gathers rows by index (embedding lookup, repetition).
    pub fn select_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var, AutodiffError> {
        let rows = self.shape(a).0;
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::IndexOutOfRange {
                op: "select_rows",
                index: bad,
                bound: rows,
            });
        }
        let value = self.value(a).select_rows(indices);
        let rg = self.requires(a);
        self.push(value, Op::SelectRows(a, indices.to_vec()), rg)
    }

    /// Picks column `indices[i]` from row `i`, giving an `m×1` column.
    pub fn pick(&mut self, a: Var, indices: &[usize]) -> Result<Var, AutodiffError> {
        let (rows, cols) = self.shape(a);
        if indices.len() != rows {
            return Err(AutodiffError::shape("pick", (rows, cols), (indices.len(), 1)));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= cols) {
            return Err(AutodiffError::IndexOutOfRange {
                op: "pick",
                index: bad,
                bound: cols,
            });
        }
        let src = self.value(a);
        let data = indices
            .iter()
            .enumerate()
            .map(|(r, &c)| src.get(r, c))
            .collect();
        let value = Array2::from_vec(rows, 1, data)?;
        let rg = self.requires(a);
        self.push(value, Op::Pick(a, indices.to_vec()), rg)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = Array2::scalar(self.value(a).sum());
        let rg = self.requires(a);
        self.push(value, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(AutodiffError::Empty { op: "mean" });
        }
        let value = Array2::scalar(self.value(a).sum() / n as f64);
        let rg = self.requires(a);
        self.push(value, Op::Mean(a), rg)
    }

    /// Row sums as an `m×1` column.
    pub fn sum_cols(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let src = self.value(a);
        let data = (0..src.rows()).map(|r| src.row_slice(r).iter().sum()).collect();
        let value = Array2::from_vec(src.rows(), 1, data)?;
        let rg = self.requires(a);
        self.push(value, Op::SumCols(a), rg)
    }

    /// `‖a‖²_F`.
    pub fn sq_frobenius(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = Array2::scalar(self.value(a).data().iter().map(|x| x * x).sum());
        let rg = self.requires(a);
        self.push(value, Op::SqFrobenius(a), rg)
    }

    /// Euclidean norm of every row as an `m×1` column.
    pub fn row_norms(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let src = self.value(a);
        let data = (0..src.rows())
            .map(|r| src.row_slice(r).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let value = Array2::from_vec(src.rows(), 1, data)?;
        let rg = self.requires(a);
        self.push(value, Op::RowNorms(a), rg)
    }

    /// Passes the value through and blocks gradient flow.
    pub fn stop_gradient(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).clone();
        self.push(value, Op::StopGradient, false)
    }

    /// `x·W + b` for a `1×n` bias.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var, AutodiffError> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    /// Reverse sweep from a 1×1 node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarLoss { shape });
        }
        let mut grads: Vec<Option<Array2>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Array2::scalar(1.0));
        let mut out = Gradients::default();

        for i in (0..=loss.0).rev() {
            let Some(grad) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if !grad.is_finite() {
                return Err(AutodiffError::NonFinite {
                    op: node.op.name(),
                    pass: "backward",
                });
            }
            self.propagate(node, grad, &mut grads, &mut out)?;
        }
        Ok(out)
    }

    fn propagate(
        &self,
        node: &Node,
        grad: Array2,
        grads: &mut [Option<Array2>],
        out: &mut Gradients,
    ) -> Result<(), AutodiffError> {
        let mut acc = |v: Var, g: Array2| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        };
        match &node.op {
            Op::Leaf | Op::StopGradient => {}
            Op::Param(id) => {
                match out.map.get_mut(id) {
                    Some(existing) => existing.add_assign(&grad),
                    None => {
                        out.map.insert(*id, grad);
                    }
                }
            }
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                if self.requires(*a) {
                    // dA = dC · Bᵀ
                    let mut da = Array2::zeros(m, k);
                    gemm(m, n, k, 1.0, (grad.data(), n, 1), (bv.data(), 1, n), 0.0, da.data_mut());
                    acc(*a, da);
                }
                if self.requires(*b) {
                    // dB = Aᵀ · dC
                    let mut db = Array2::zeros(k, n);
                    gemm(k, m, n, 1.0, (av.data(), 1, k), (grad.data(), n, 1), 0.0, db.data_mut());
                    acc(*b, db);
                }
            }
            Op::Add(a, b) => {
                acc(*a, grad.clone());
                acc(*b, grad);
            }
            Op::Sub(a, b) => {
                acc(*b, grad.map(|g| -g));
                acc(*a, grad);
            }
            Op::Mul(a, b) => {
                if self.requires(*a) {
                    acc(*a, grad.zip_map(self.value(*b), |g, y| g * y));
                }
                if self.requires(*b) {
                    acc(*b, grad.zip_map(self.value(*a), |g, x| g * x));
                }
            }
            Op::AddRow(a, bias) => {
                if self.requires(*bias) {
                    let cols = grad.cols();
                    let mut db = vec![0.0; cols];
                    for row in grad.data().chunks(cols.max(1)) {
                        for (d, g) in db.iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                    acc(*bias, Array2::row(&db));
                }
                acc(*a, grad);
            }
            Op::MulCol(a, col) => {
                let cols = grad.cols();
                if self.requires(*col) {
                    let av = self.value(*a);
                    let dc: Vec<f64> = grad
                        .data()
                        .chunks(cols.max(1))
                        .zip(av.data().chunks(cols.max(1)))
                        .map(|(g, x)| g.iter().zip(x).map(|(g, x)| g * x).sum())
                        .collect();
                    acc(*col, Array2::column(&dc));
                }
                if self.requires(*a) {
                    let w = self.value(*col).data();
                    let mut da = grad;
                    for (row, s) in da.data_mut().chunks_mut(cols.max(1)).zip(w) {
                        for x in row {
                            *x *= s;
                        }
                    }
                    acc(*a, da);
                }
            }
            Op::Scale(a, f) => acc(*a, grad.map(|g| g * f)),
            Op::Relu(a) => {
                acc(*a, grad.zip_map(self.value(*a), |g, x| if x > 0.0 { g } else { 0.0 }));
            }
            Op::Tanh(a) => {
                acc(*a, grad.zip_map(&node.value, |g, y| g * (1.0 - y * y)));
            }
            Op::Sigmoid(a) => {
                acc(*a, grad.zip_map(&node.value, |g, y| g * y * (1.0 - y)));
            }
            Op::LogSigmoid(a) => {
                // d/dx log σ(x) = 1 − σ(x) = σ(−x)
                acc(*a, grad.zip_map(self.value(*a), |g, x| g * sigmoid(-x)));
            }
            Op::Log(a) => acc(*a, grad.zip_map(self.value(*a), |g, x| g / x)),
            Op::SoftmaxRows(a) => {
                let cols = grad.cols();
                let mut da = grad;
                for (g, y) in da
                    .data_mut()
                    .chunks_mut(cols.max(1))
                    .zip(node.value.data().chunks(cols.max(1)))
                {
                    let dot: f64 = g.iter().zip(y).map(|(g, y)| g * y).sum();
                    for (gi, yi) in g.iter_mut().zip(y) {
                        *gi = yi * (*gi - dot);
                    }
                }
                acc(*a, da);
            }
            Op::LogSoftmaxRows(a) => {
                let cols = grad.cols();
                let mut da = grad;
                for (g, y) in da
                    .data_mut()
                    .chunks_mut(cols.max(1))
                    .zip(node.value.data().chunks(cols.max(1)))
                {
                    let total: f64 = g.iter().sum();
                    for (gi, yi) in g.iter_mut().zip(y) {
                        *gi -= yi.exp() * total;
                    }
                }
                acc(*a, da);
            }
            Op::ConcatCols(parts) => {
                let rows = grad.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    if self.requires(p) {
                        let mut data = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            data.extend_from_slice(&grad.row_slice(r)[offset..offset + w]);
                        }
                        acc(p, Array2::from_vec(rows, w, data)?);
                    }
                    offset += w;
                }
            }
            Op::SliceCols(a, start) => {
                let (rows, cols) = self.shape(*a);
                let w = grad.cols();
                let mut da = Array2::zeros(rows, cols);
                for r in 0..rows {
                    da.data_mut()[r * cols + start..r * cols + start + w]
                        .copy_from_slice(grad.row_slice(r));
                }
                acc(*a, da);
            }
            Op::SelectRows(a, indices) => {
                let (rows, cols) = self.shape(*a);
                let mut da = Array2::zeros(rows, cols);
                for (out_row, &src) in indices.iter().enumerate() {
                    let g = grad.row_slice(out_row);
                    let dst = &mut da.data_mut()[src * cols..(src + 1) * cols];
                    for (d, x) in dst.iter_mut().zip(g) {
                        *d += x;
                    }
                }
                acc(*a, da);
            }
            Op::Pick(a, indices) => {
                let (rows, cols) = self.shape(*a);
                let mut da = Array2::zeros(rows, cols);
                for (r, &c) in indices.iter().enumerate() {
                    da.set(r, c, grad.get(r, 0));
                }
                acc(*a, da);
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                acc(*a, Array2::filled(r, c, grad.item()));
            }
            Op::Mean(a) => {
                let (r, c) = self.shape(*a);
                acc(*a, Array2::filled(r, c, grad.item() / (r * c) as f64));
            }
            Op::SumCols(a) => {
                let (rows, cols) = self.shape(*a);
                let mut da = Array2::zeros(rows, cols);
                for r in 0..rows {
                    let g = grad.get(r, 0);
                    da.data_mut()[r * cols..(r + 1) * cols].fill(g);
                }
                acc(*a, da);
            }
            Op::SqFrobenius(a) => {
                let g = grad.item();
                acc(*a, self.value(*a).map(|x| 2.0 * g * x));
            }
            Op::RowNorms(a) => {
                let av = self.value(*a);
                let cols = av.cols();
                let mut da = av.clone();
                for (r, row) in da.data_mut().chunks_mut(cols.max(1)).enumerate() {
                    let norm = node.value.get(r, 0);
                    let g = grad.get(r, 0);
                    // subgradient 0 at the origin
                    let s = if norm > 0.0 { g / norm } else { 0.0 };
                    for x in row {
                        *x *= s;
                    }
                }
                acc(*a, da);
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

pub(crate) fn log_softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    for x in row.iter_mut() {
        *x -= lse;
    }
}
