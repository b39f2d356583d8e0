//! Reverse-mode automatic differentiation over dense 2-D matrices.
//!
//! Define-by-run: every builder method evaluates its result immediately and
//! records the operation, so the node list is topologically ordered by
//! construction and a graph is rebuilt per mini-batch. [`Graph::backward`]
//! replays the list in reverse, accumulating vector-Jacobian products into
//! per-parameter gradients.
//!
//! Masking is expressed as elementwise multiplication by constant 0/1
//! matrices; because the mask is a constant, a zero entry kills both the
//! forward contribution and the gradient flow exactly.
//!
//! Every completed operation is checked for non-finite entries and fails
//! with the offending op's name, so NaNs cannot propagate silently.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::matrix::Matrix;
use crate::params::GradMap;

/// Handle to a node in one [`Graph`]. Ids are not portable across graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    /// Leaf without gradient: input data, masks, precomputed constants.
    Constant,
    /// Leaf with gradient, keyed by parameter name.
    Param(String),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    /// `lhs` is n x m, `rhs` is 1 x m, broadcast over rows (bias add).
    AddRowVec(NodeId, NodeId),
    /// `lhs` is n x m, `rhs` is 1 x m, broadcast multiply over rows.
    MulRowVec(NodeId, NodeId),
    /// `lhs` is n x m, `rhs` is n x 1, broadcast multiply over columns.
    MulColVec(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Clamp(NodeId, f64, f64),
    ScalarMul(NodeId, f64),
    SumAll(NodeId),
    MeanAll(NodeId),
    /// n x m -> n x 1, sum across each row.
    SumRows(NodeId),
    /// n x m -> 1 x m, sum down each column.
    SumCols(NodeId),
    MeanRows(NodeId),
    MeanCols(NodeId),
    /// n x m -> n x 1, Euclidean norm of each row.
    RowL2Norm(NodeId),
    /// n x m -> n x m, rows scaled to unit norm. All-zero rows stay zero and
    /// receive zero gradient (subgradient choice, keeps training NaN-free).
    RowNormalize(NodeId),
}

struct Node {
    op: Op,
    value: Matrix,
    needs_grad: bool,
}

/// A single forward computation, rebuilt per batch.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node. Values are computed eagerly when each
    /// operation is recorded, so this is a cache lookup.
    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Forward value of a 1x1 node.
    pub fn scalar_value(&self, id: NodeId) -> Result<f64> {
        self.nodes[id.0].value.scalar_value().ok_or(CoreError::NotScalar {
            op: "scalar_value",
            shape: self.nodes[id.0].value.shape(),
        })
    }

    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Constant, value, false)
    }

    pub fn constant_scalar(&mut self, value: f64) -> NodeId {
        self.constant(Matrix::scalar(value))
    }

    pub fn param(&mut self, name: &str, value: Matrix) -> NodeId {
        self.push(Op::Param(String::from(name)), value, true)
    }

    fn push(&mut self, op: Op, value: Matrix, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn record(&mut self, op_name: &'static str, op: Op, value: Matrix, needs_grad: bool) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(CoreError::NonFinite { op: op_name });
        }
        Ok(self.push(op, value, needs_grad))
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (la, lb) = (self.value(a).shape(), self.value(b).shape());
        if la != lb {
            return Err(CoreError::ShapeMismatch { op, lhs: la, rhs: lb });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let g = self.needs(a) || self.needs(b);
        self.record("add", Op::Add(a, b), v, g)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let g = self.needs(a) || self.needs(b);
        self.record("sub", Op::Sub(a, b), v, g)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let g = self.needs(a) || self.needs(b);
        self.record("mul", Op::Mul(a, b), v, g)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("div", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x / y);
        let g = self.needs(a) || self.needs(b);
        self.record("div", Op::Div(a, b), v, g)
    }

    /// `a + row`, with `row` (1 x m) broadcast over the rows of `a` (n x m).
    pub fn add_row_vec(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (sa, sr) = (self.value(a).shape(), self.value(row).shape());
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(CoreError::ShapeMismatch {
                op: "add_row_vec",
                lhs: sa,
                rhs: sr,
            });
        }
        let rv = self.value(row).row(0).to_vec();
        let v = {
            let am = self.value(a);
            Matrix::from_fn(sa.0, sa.1, |i, j| am.get(i, j) + rv[j])
        };
        let g = self.needs(a) || self.needs(row);
        self.record("add_row_vec", Op::AddRowVec(a, row), v, g)
    }

    /// `a * row` elementwise, with `row` (1 x m) broadcast over rows.
    pub fn mul_row_vec(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (sa, sr) = (self.value(a).shape(), self.value(row).shape());
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(CoreError::ShapeMismatch {
                op: "mul_row_vec",
                lhs: sa,
                rhs: sr,
            });
        }
        let rv = self.value(row).row(0).to_vec();
        let v = {
            let am = self.value(a);
            Matrix::from_fn(sa.0, sa.1, |i, j| am.get(i, j) * rv[j])
        };
        let g = self.needs(a) || self.needs(row);
        self.record("mul_row_vec", Op::MulRowVec(a, row), v, g)
    }

    /// `a * col` elementwise, with `col` (n x 1) broadcast over columns.
    pub fn mul_col_vec(&mut self, a: NodeId, col: NodeId) -> Result<NodeId> {
        let (sa, sc) = (self.value(a).shape(), self.value(col).shape());
        if sc.1 != 1 || sc.0 != sa.0 {
            return Err(CoreError::ShapeMismatch {
                op: "mul_col_vec",
                lhs: sa,
                rhs: sc,
            });
        }
        let cv: Vec<f64> = (0..sc.0).map(|i| self.value(col).get(i, 0)).collect();
        let v = {
            let am = self.value(a);
            Matrix::from_fn(sa.0, sa.1, |i, j| am.get(i, j) * cv[i])
        };
        let g = self.needs(a) || self.needs(col);
        self.record("mul_col_vec", Op::MulColVec(a, col), v, g)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.1 != sb.0 {
            return Err(CoreError::ShapeMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let v = self.value(a).matmul(self.value(b));
        let g = self.needs(a) || self.needs(b);
        self.record("matmul", Op::MatMul(a, b), v, g)
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).transpose();
        let g = self.needs(a);
        self.record("transpose", Op::Transpose(a), v, g)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        let g = self.needs(a);
        self.record("relu", Op::Relu(a), v, g)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(fmath::sigmoid);
        let g = self.needs(a);
        self.record("sigmoid", Op::Sigmoid(a), v, g)
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(fmath::exp);
        let g = self.needs(a);
        self.record("exp", Op::Exp(a), v, g)
    }

    /// Natural log. Callers are expected to clamp inputs away from zero
    /// first; a non-positive input surfaces as a non-finite error here.
    pub fn log(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(fmath::ln);
        let g = self.needs(a);
        self.record("log", Op::Log(a), v, g)
    }

    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> Result<NodeId> {
        if !(lo <= hi) {
            return Err(CoreError::InvalidConfig {
                what: alloc::format!("clamp bounds inverted: [{lo}, {hi}]"),
            });
        }
        let v = self.value(a).map(|x| x.max(lo).min(hi));
        let g = self.needs(a);
        self.record("clamp", Op::Clamp(a, lo, hi), v, g)
    }

    pub fn scalar_mul(&mut self, a: NodeId, k: f64) -> Result<NodeId> {
        let v = self.value(a).scale(k);
        let g = self.needs(a);
        self.record("scalar_mul", Op::ScalarMul(a, k), v, g)
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        let v = Matrix::scalar(self.value(a).sum());
        let g = self.needs(a);
        self.record("sum_all", Op::SumAll(a), v, g)
    }

    pub fn mean_all(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let v = Matrix::scalar(self.value(a).sum() / (r * c) as f64);
        let g = self.needs(a);
        self.record("mean_all", Op::MeanAll(a), v, g)
    }

    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let sums = self.value(a).row_sums();
        let v = Matrix::from_vec(sums.len(), 1, sums).expect("row sums shape");
        let g = self.needs(a);
        self.record("sum_rows", Op::SumRows(a), v, g)
    }

    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId> {
        let sums = self.value(a).col_sums();
        let v = Matrix::from_vec(1, sums.len(), sums).expect("col sums shape");
        let g = self.needs(a);
        self.record("sum_cols", Op::SumCols(a), v, g)
    }

    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let c = self.value(a).cols() as f64;
        let sums: Vec<f64> = self.value(a).row_sums().iter().map(|s| s / c).collect();
        let v = Matrix::from_vec(sums.len(), 1, sums).expect("row means shape");
        let g = self.needs(a);
        self.record("mean_rows", Op::MeanRows(a), v, g)
    }

    pub fn mean_cols(&mut self, a: NodeId) -> Result<NodeId> {
        let r = self.value(a).rows() as f64;
        let sums: Vec<f64> = self.value(a).col_sums().iter().map(|s| s / r).collect();
        let v = Matrix::from_vec(1, sums.len(), sums).expect("col means shape");
        let g = self.needs(a);
        self.record("mean_cols", Op::MeanCols(a), v, g)
    }

    pub fn row_l2_norm(&mut self, a: NodeId) -> Result<NodeId> {
        let norms = self.value(a).row_norms();
        let v = Matrix::from_vec(norms.len(), 1, norms).expect("row norms shape");
        let g = self.needs(a);
        self.record("row_l2_norm", Op::RowL2Norm(a), v, g)
    }

    pub fn row_normalize(&mut self, a: NodeId) -> Result<NodeId> {
        let norms = self.value(a).row_norms();
        let am = self.value(a);
        let v = Matrix::from_fn(am.rows(), am.cols(), |i, j| {
            if norms[i] == 0.0 {
                0.0
            } else {
                am.get(i, j) / norms[i]
            }
        });
        let g = self.needs(a);
        self.record("row_normalize", Op::RowNormalize(a), v, g)
    }

    /// Reverse pass from a scalar root. Returns the gradient of the root with
    /// respect to every parameter node, accumulated by name. Parameters the
    /// root does not depend on get zero gradients of matching shape;
    /// constants receive none.
    pub fn backward(&mut self, root: NodeId) -> Result<GradMap> {
        if self.nodes[root.0].value.shape() != (1, 1) {
            return Err(CoreError::NotScalar {
                op: "backward",
                shape: self.nodes[root.0].value.shape(),
            });
        }

        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Matrix::scalar(1.0));

        for id in (0..=root.0).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.backprop_op(id, &g, &mut grads);
            // Parameter gradients are collected below; put the value back.
            if matches!(self.nodes[id].op, Op::Param(_)) {
                grads[id] = Some(g);
            }
        }

        let mut out: GradMap = BTreeMap::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if let Op::Param(name) = &node.op {
                let shape = node.value.shape();
                let entry = out
                    .entry(name.clone())
                    .or_insert_with(|| Matrix::zeros(shape.0, shape.1));
                if let Some(g) = &grads[id] {
                    entry.add_scaled(g, 1.0);
                }
            }
        }
        Ok(out)
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], id: NodeId, delta: Matrix) {
        if !self.nodes[id.0].needs_grad {
            return;
        }
        match &mut grads[id.0] {
            Some(existing) => existing.add_scaled(&delta, 1.0),
            slot @ None => *slot = Some(delta),
        }
    }

    fn backprop_op(&self, id: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        match &self.nodes[id].op {
            Op::Constant | Op::Param(_) => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                self.accumulate(grads, *a, g.zip_map(self.value(*b), |gv, bv| gv * bv));
                self.accumulate(grads, *b, g.zip_map(self.value(*a), |gv, av| gv * av));
            }
            Op::Div(a, b) => {
                let bv = self.value(*b);
                self.accumulate(grads, *a, g.zip_map(bv, |gv, b| gv / b));
                let av = self.value(*a);
                let db = Matrix::from_fn(g.rows(), g.cols(), |i, j| {
                    let b = bv.get(i, j);
                    -g.get(i, j) * av.get(i, j) / (b * b)
                });
                self.accumulate(grads, *b, db);
            }
            Op::AddRowVec(a, row) => {
                self.accumulate(grads, *a, g.clone());
                let sums = g.col_sums();
                let dr = Matrix::from_vec(1, sums.len(), sums).expect("col sums shape");
                self.accumulate(grads, *row, dr);
            }
            Op::MulRowVec(a, row) => {
                let rv = self.value(*row);
                let da = Matrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j) * rv.get(0, j));
                self.accumulate(grads, *a, da);
                let av = self.value(*a);
                let prod = g.zip_map(av, |gv, a| gv * a);
                let sums = prod.col_sums();
                let dr = Matrix::from_vec(1, sums.len(), sums).expect("col sums shape");
                self.accumulate(grads, *row, dr);
            }
            Op::MulColVec(a, col) => {
                let cv = self.value(*col);
                let da = Matrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j) * cv.get(i, 0));
                self.accumulate(grads, *a, da);
                let av = self.value(*a);
                let prod = g.zip_map(av, |gv, a| gv * a);
                let sums = prod.row_sums();
                let dc = Matrix::from_vec(sums.len(), 1, sums).expect("row sums shape");
                self.accumulate(grads, *col, dc);
            }
            Op::MatMul(a, b) => {
                let da = g.matmul(&self.value(*b).transpose());
                self.accumulate(grads, *a, da);
                let db = self.value(*a).transpose().matmul(g);
                self.accumulate(grads, *b, db);
            }
            Op::Transpose(a) => {
                self.accumulate(grads, *a, g.transpose());
            }
            Op::Relu(a) => {
                let av = self.value(*a);
                let da = g.zip_map(av, |gv, x| if x > 0.0 { gv } else { 0.0 });
                self.accumulate(grads, *a, da);
            }
            Op::Sigmoid(a) => {
                let y = &self.nodes[id].value;
                let da = g.zip_map(y, |gv, s| gv * s * (1.0 - s));
                self.accumulate(grads, *a, da);
            }
            Op::Exp(a) => {
                let y = &self.nodes[id].value;
                let da = g.zip_map(y, |gv, e| gv * e);
                self.accumulate(grads, *a, da);
            }
            Op::Log(a) => {
                let av = self.value(*a);
                let da = g.zip_map(av, |gv, x| gv / x);
                self.accumulate(grads, *a, da);
            }
            Op::Clamp(a, lo, hi) => {
                let av = self.value(*a);
                let (lo, hi) = (*lo, *hi);
                let da = g.zip_map(av, |gv, x| if x >= lo && x <= hi { gv } else { 0.0 });
                self.accumulate(grads, *a, da);
            }
            Op::ScalarMul(a, k) => {
                self.accumulate(grads, *a, g.scale(*k));
            }
            Op::SumAll(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::filled(r, c, g.get(0, 0));
                self.accumulate(grads, *a, da);
            }
            Op::MeanAll(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::filled(r, c, g.get(0, 0) / (r * c) as f64);
                self.accumulate(grads, *a, da);
            }
            Op::SumRows(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::from_fn(r, c, |i, _| g.get(i, 0));
                self.accumulate(grads, *a, da);
            }
            Op::SumCols(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::from_fn(r, c, |_, j| g.get(0, j));
                self.accumulate(grads, *a, da);
            }
            Op::MeanRows(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::from_fn(r, c, |i, _| g.get(i, 0) / c as f64);
                self.accumulate(grads, *a, da);
            }
            Op::MeanCols(a) => {
                let (r, c) = self.value(*a).shape();
                let da = Matrix::from_fn(r, c, |_, j| g.get(0, j) / r as f64);
                self.accumulate(grads, *a, da);
            }
            Op::RowL2Norm(a) => {
                let av = self.value(*a);
                let norms = &self.nodes[id].value;
                let da = Matrix::from_fn(av.rows(), av.cols(), |i, j| {
                    let n = norms.get(i, 0);
                    if n == 0.0 {
                        0.0
                    } else {
                        g.get(i, 0) * av.get(i, j) / n
                    }
                });
                self.accumulate(grads, *a, da);
            }
            Op::RowNormalize(a) => {
                let av = self.value(*a);
                let y = &self.nodes[id].value;
                let norms = av.row_norms();
                let mut da = Matrix::zeros(av.rows(), av.cols());
                for i in 0..av.rows() {
                    if norms[i] == 0.0 {
                        continue;
                    }
                    let dot: f64 = g
                        .row(i)
                        .iter()
                        .zip(y.row(i).iter())
                        .map(|(gv, yv)| gv * yv)
                        .sum();
                    for j in 0..av.cols() {
                        da.set(i, j, (g.get(i, j) - dot * y.get(i, j)) / norms[i]);
                    }
                }
                self.accumulate(grads, *a, da);
            }
        }
    }
}
