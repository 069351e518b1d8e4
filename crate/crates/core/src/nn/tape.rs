//! Reverse-mode differentiation over a recorded sequence of matrix ops.
//!
//! A [`Tape`] is built fresh for every forward pass. Leaves are either
//! constants (inputs, frozen parameters) or tracked parameters from a
//! [`ParamStore`]; only nodes downstream of a tracked leaf get gradients.

use std::sync::Arc;

use super::matrix::{gemm, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameter tensors. Values are reference-counted so a tape can hold
/// them without copying; optimizer writes clone-on-write only while a tape
/// is still alive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Arc<Matrix>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.names.push(name.into());
        self.values.push(Arc::new(value));
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        Arc::make_mut(&mut self.values[id.0])
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().map(|v| v.as_ref()))
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    fn shared(&self, id: ParamId) -> Arc<Matrix> {
        Arc::clone(&self.values[id.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(usize, usize),
    AddRow(usize, usize),
    MulRow(usize, usize),
    MulCol(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Sigmoid(usize),
    Relu(usize),
    Square(usize),
    ConcatCols(Vec<usize>),
    SliceCols(usize, usize),
    GatherRows(usize, Vec<usize>),
    MeanBlocks(usize, usize),
    MeanAll(usize),
    SumAll(usize),
    Attention {
        q: usize,
        k: usize,
        v: usize,
        seq: usize,
        scale: f64,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Arc<Matrix>,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.push_shared(Arc::new(value), op, needs_grad)
    }

    fn push_shared(&mut self, value: Arc<Matrix>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: usize) -> bool {
        self.nodes[v].needs_grad
    }

    /// Constant input; never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Input leaf whose gradient is wanted (e.g. the action fed to a critic).
    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Parameter leaf. With `track == false` it behaves as a constant.
    pub fn param(&mut self, store: &ParamStore, id: ParamId, track: bool) -> Var {
        self.push_shared(store.shared(id), Op::Param(id), track)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(shape_err("matmul", x.shape(), y.shape()));
        }
        let mut out = Matrix::zeros(x.rows(), y.cols());
        gemm(false, false, x, y, 0.0, &mut out);
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::MatMul(a.0, b.0), ng))
    }

    /// `a + b` with the 1×cols row `b` broadcast down the rows of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if y.rows() != 1 || y.cols() != x.cols() {
            return Err(shape_err("add_row", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, bv) in out.row_mut(r).iter_mut().zip(y.as_slice()) {
                *o += bv;
            }
        }
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::AddRow(a.0, b.0), ng))
    }

    /// Elementwise `a * b` with the 1×cols row `b` broadcast down the rows.
    pub fn mul_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if y.rows() != 1 || y.cols() != x.cols() {
            return Err(shape_err("mul_row", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, bv) in out.row_mut(r).iter_mut().zip(y.as_slice()) {
                *o *= bv;
            }
        }
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::MulRow(a.0, b.0), ng))
    }

    /// Elementwise `a * b` with the rows×1 column `b` broadcast across columns.
    pub fn mul_col(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if y.cols() != 1 || y.rows() != x.rows() {
            return Err(shape_err("mul_col", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            let s = y.get(r, 0);
            out.row_mut(r).iter_mut().for_each(|o| *o *= s);
        }
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::MulCol(a.0, b.0), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("add", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        out.axpy(1.0, y);
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::Add(a.0, b.0), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("sub", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        out.axpy(-1.0, y);
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::Sub(a.0, b.0), ng))
    }

    /// Elementwise product of equally shaped matrices.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("mul", x.shape(), y.shape()));
        }
        let data = x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p * q).collect();
        let out = Matrix::from_vec(x.rows(), x.cols(), data)?;
        let ng = self.ng(a.0) || self.ng(b.0);
        Ok(self.push(out, Op::Mul(a.0, b.0), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v * s);
        let ng = self.ng(a.0);
        self.push(out, Op::Scale(a.0, s), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        let ng = self.ng(a.0);
        self.push(out, Op::Sigmoid(a.0), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.max(0.0));
        let ng = self.ng(a.0);
        self.push(out, Op::Relu(a.0), ng)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v * v);
        let ng = self.ng(a.0);
        self.push(out, Op::Square(a.0), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|p| self.value(*p).rows())
            .ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        if parts.iter().any(|p| self.value(*p).rows() != rows) {
            return Err(Error::Shape("concat_cols row mismatch".into()));
        }
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for p in parts {
                let m = self.value(*p);
                out.row_mut(r)[off..off + m.cols()].copy_from_slice(m.row(r));
                off += m.cols();
            }
        }
        let ng = parts.iter().any(|p| self.ng(p.0));
        Ok(self.push(
            out,
            Op::ConcatCols(parts.iter().map(|p| p.0).collect()),
            ng,
        ))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let x = self.value(a);
        if start + len > x.cols() {
            return Err(Error::Shape(format!(
                "slice_cols {start}+{len} of {} columns",
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), len);
        for r in 0..x.rows() {
            out.row_mut(r).copy_from_slice(&x.row(r)[start..start + len]);
        }
        let ng = self.ng(a.0);
        Ok(self.push(out, Op::SliceCols(a.0, start), ng))
    }

    /// Output row `i` is input row `index[i]`; rows may repeat.
    pub fn gather_rows(&mut self, a: Var, index: Vec<usize>) -> Result<Var> {
        let x = self.value(a);
        if let Some(bad) = index.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::Shape(format!(
                "gather row {bad} of {} rows",
                x.rows()
            )));
        }
        let mut out = Matrix::zeros(index.len(), x.cols());
        for (r, &i) in index.iter().enumerate() {
            out.row_mut(r).copy_from_slice(x.row(i));
        }
        let ng = self.ng(a.0);
        Ok(self.push(out, Op::GatherRows(a.0, index), ng))
    }

    /// Mean over consecutive groups of `block` rows.
    pub fn mean_blocks(&mut self, a: Var, block: usize) -> Result<Var> {
        let x = self.value(a);
        if block == 0 || x.rows() % block != 0 {
            return Err(Error::Shape(format!(
                "{} rows do not split into blocks of {block}",
                x.rows()
            )));
        }
        let groups = x.rows() / block;
        let mut out = Matrix::zeros(groups, x.cols());
        let inv = 1.0 / block as f64;
        for r in 0..x.rows() {
            let g = r / block;
            for c in 0..x.cols() {
                let v = out.get(g, c) + x.get(r, c) * inv;
                out.set(g, c, v);
            }
        }
        let ng = self.ng(a.0);
        Ok(self.push(out, Op::MeanBlocks(a.0, block), ng))
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = Matrix::filled(1, 1, x.sum() / x.len().max(1) as f64);
        let ng = self.ng(a.0);
        self.push(out, Op::MeanAll(a.0), ng)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let out = Matrix::filled(1, 1, self.value(a).sum());
        let ng = self.ng(a.0);
        self.push(out, Op::SumAll(a.0), ng)
    }

    /// Scaled dot-product attention applied independently to consecutive
    /// blocks of `seq` rows: `softmax(Q Kᵀ · scale) V` within each block.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, seq: usize, scale: f64) -> Result<Var> {
        let (qm, km, vm) = (self.value(q), self.value(k), self.value(v));
        if qm.shape() != km.shape() || qm.rows() != vm.rows() {
            return Err(Error::Shape("attention q/k/v mismatch".into()));
        }
        if seq == 0 || qm.rows() % seq != 0 {
            return Err(Error::Shape(format!(
                "{} rows do not split into sequences of {seq}",
                qm.rows()
            )));
        }
        let probs = attention_probs(qm, km, seq, scale);
        let mut out = Matrix::zeros(vm.rows(), vm.cols());
        for b in 0..qm.rows() / seq {
            for i in 0..seq {
                let p = &probs[(b * seq + i) * seq..(b * seq + i + 1) * seq];
                let orow = out.row_mut(b * seq + i);
                for (j, &w) in p.iter().enumerate() {
                    for (o, x) in orow.iter_mut().zip(vm.row(b * seq + j)) {
                        *o += w * x;
                    }
                }
            }
        }
        let ng = self.ng(q.0) || self.ng(k.0) || self.ng(v.0);
        Ok(self.push(
            out,
            Op::Attention {
                q: q.0,
                k: k.0,
                v: v.0,
                seq,
                scale,
                probs,
            },
            ng,
        ))
    }

    /// Reverse sweep from a 1×1 `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(Error::EmptyTape);
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Shape("loss must be a 1x1 scalar".into()));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let (lower, upper) = grads.split_at_mut(i);
            let Some(g) = upper[0].as_ref() else { continue };
            self.backprop_node(node, g, lower);
        }
        Ok(Gradients { grads, nodes: self.nodes.iter().map(|n| match n.op {
            Op::Param(id) => Some(id),
            _ => None,
        }).collect() })
    }

    fn backprop_node(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let val = |j: usize| -> &Matrix { &self.nodes[j].value };
        let wants = |j: usize| self.nodes[j].needs_grad;
        macro_rules! acc {
            ($j:expr) => {{
                let j = $j;
                let shape = val(j).shape();
                grads[j].get_or_insert_with(|| Matrix::zeros(shape.0, shape.1))
            }};
        }
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            &Op::MatMul(a, b) => {
                if wants(a) {
                    gemm(false, true, g, val(b), 1.0, acc!(a));
                }
                if wants(b) {
                    gemm(true, false, val(a), g, 1.0, acc!(b));
                }
            }
            &Op::AddRow(a, b) => {
                if wants(a) {
                    acc!(a).axpy(1.0, g);
                }
                if wants(b) {
                    let gb = acc!(b);
                    for r in 0..g.rows() {
                        for (o, x) in gb.as_mut_slice().iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                }
            }
            &Op::MulRow(a, b) => {
                if wants(a) {
                    let bv = val(b);
                    let ga = acc!(a);
                    for r in 0..g.rows() {
                        for ((o, x), s) in ga.row_mut(r).iter_mut().zip(g.row(r)).zip(bv.as_slice()) {
                            *o += x * s;
                        }
                    }
                }
                if wants(b) {
                    let av = val(a);
                    let gb = acc!(b);
                    for r in 0..g.rows() {
                        for ((o, x), s) in gb.as_mut_slice().iter_mut().zip(g.row(r)).zip(av.row(r)) {
                            *o += x * s;
                        }
                    }
                }
            }
            &Op::MulCol(a, b) => {
                if wants(a) {
                    let bv = val(b);
                    let ga = acc!(a);
                    for r in 0..g.rows() {
                        let s = bv.get(r, 0);
                        for (o, x) in ga.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += x * s;
                        }
                    }
                }
                if wants(b) {
                    let av = val(a);
                    let gb = acc!(b);
                    for r in 0..g.rows() {
                        let d: f64 = g.row(r).iter().zip(av.row(r)).map(|(x, y)| x * y).sum();
                        gb.as_mut_slice()[r] += d;
                    }
                }
            }
            &Op::Add(a, b) => {
                if wants(a) {
                    acc!(a).axpy(1.0, g);
                }
                if wants(b) {
                    acc!(b).axpy(1.0, g);
                }
            }
            &Op::Sub(a, b) => {
                if wants(a) {
                    acc!(a).axpy(1.0, g);
                }
                if wants(b) {
                    acc!(b).axpy(-1.0, g);
                }
            }
            &Op::Mul(a, b) => {
                if wants(a) {
                    let bv = val(b);
                    let ga = acc!(a);
                    for ((o, d), y) in ga.as_mut_slice().iter_mut().zip(g.as_slice()).zip(bv.as_slice()) {
                        *o += d * y;
                    }
                }
                if wants(b) {
                    let av = val(a);
                    let gb = acc!(b);
                    for ((o, d), x) in gb.as_mut_slice().iter_mut().zip(g.as_slice()).zip(av.as_slice()) {
                        *o += d * x;
                    }
                }
            }
            &Op::Scale(a, s) => {
                if wants(a) {
                    acc!(a).axpy(s, g);
                }
            }
            &Op::Sigmoid(a) => {
                if wants(a) {
                    let y = &node.value;
                    let ga = acc!(a);
                    for ((o, d), y) in ga.as_mut_slice().iter_mut().zip(g.as_slice()).zip(y.as_slice()) {
                        *o += d * y * (1.0 - y);
                    }
                }
            }
            &Op::Relu(a) => {
                if wants(a) {
                    let x = val(a);
                    let ga = acc!(a);
                    for ((o, d), x) in ga.as_mut_slice().iter_mut().zip(g.as_slice()).zip(x.as_slice()) {
                        if *x > 0.0 {
                            *o += d;
                        }
                    }
                }
            }
            &Op::Square(a) => {
                if wants(a) {
                    let x = val(a);
                    let ga = acc!(a);
                    for ((o, d), x) in ga.as_mut_slice().iter_mut().zip(g.as_slice()).zip(x.as_slice()) {
                        *o += 2.0 * x * d;
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = val(p).cols();
                    if wants(p) {
                        let gp = acc!(p);
                        for r in 0..g.rows() {
                            for (o, x) in gp.row_mut(r).iter_mut().zip(&g.row(r)[off..off + w]) {
                                *o += x;
                            }
                        }
                    }
                    off += w;
                }
            }
            &Op::SliceCols(a, start) => {
                if wants(a) {
                    let ga = acc!(a);
                    for r in 0..g.rows() {
                        for (o, x) in ga.row_mut(r)[start..start + g.cols()].iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::GatherRows(a, index) => {
                let a = *a;
                if wants(a) {
                    let ga = acc!(a);
                    for (r, &i) in index.iter().enumerate() {
                        for (o, x) in ga.row_mut(i).iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                }
            }
            &Op::MeanBlocks(a, block) => {
                if wants(a) {
                    let inv = 1.0 / block as f64;
                    let ga = acc!(a);
                    for r in 0..ga.rows() {
                        let grow = g.row(r / block).to_vec();
                        for (o, x) in ga.row_mut(r).iter_mut().zip(grow) {
                            *o += x * inv;
                        }
                    }
                }
            }
            &Op::MeanAll(a) => {
                if wants(a) {
                    let ga = acc!(a);
                    let d = g.get(0, 0) / ga.len().max(1) as f64;
                    ga.as_mut_slice().iter_mut().for_each(|o| *o += d);
                }
            }
            &Op::SumAll(a) => {
                if wants(a) {
                    let d = g.get(0, 0);
                    acc!(a).as_mut_slice().iter_mut().for_each(|o| *o += d);
                }
            }
            Op::Attention {
                q,
                k,
                v,
                seq,
                scale,
                probs,
            } => {
                let (q, k, v, seq, scale) = (*q, *k, *v, *seq, *scale);
                let (qm, km, vm) = (val(q), val(k), val(v));
                let dim = qm.cols();
                let blocks = qm.rows() / seq;
                let mut dq = Matrix::zeros(qm.rows(), dim);
                let mut dk = Matrix::zeros(km.rows(), dim);
                let mut dv = Matrix::zeros(vm.rows(), vm.cols());
                let mut ds = vec![0.0; seq];
                for b in 0..blocks {
                    let base = b * seq;
                    for i in 0..seq {
                        let p = &probs[(base + i) * seq..(base + i + 1) * seq];
                        let go = g.row(base + i);
                        // dV_j += p_ij * dO_i ; dP_ij = dO_i · V_j
                        for j in 0..seq {
                            for (o, x) in dv.row_mut(base + j).iter_mut().zip(go) {
                                *o += p[j] * x;
                            }
                            ds[j] = go.iter().zip(vm.row(base + j)).map(|(x, y)| x * y).sum();
                        }
                        let dot: f64 = ds.iter().zip(p).map(|(d, w)| d * w).sum();
                        for j in 0..seq {
                            let s = p[j] * (ds[j] - dot) * scale;
                            if s == 0.0 {
                                continue;
                            }
                            for c in 0..dim {
                                let qv = dq.get(base + i, c) + s * km.get(base + j, c);
                                dq.set(base + i, c, qv);
                                let kv = dk.get(base + j, c) + s * qm.get(base + i, c);
                                dk.set(base + j, c, kv);
                            }
                        }
                    }
                }
                if wants(q) {
                    acc!(q).axpy(1.0, &dq);
                }
                if wants(k) {
                    acc!(k).axpy(1.0, &dk);
                }
                if wants(v) {
                    acc!(v).axpy(1.0, &dv);
                }
            }
        }
    }
}

/// Row-softmax of `Q Kᵀ · scale` for each block, flattened as
/// `[row][key]` with `seq` keys per row.
pub fn attention_probs(q: &Matrix, k: &Matrix, seq: usize, scale: f64) -> Vec<f64> {
    let rows = q.rows();
    let mut probs = vec![0.0; rows * seq];
    for b in 0..rows / seq {
        for i in 0..seq {
            let qi = q.row(b * seq + i);
            let p = &mut probs[(b * seq + i) * seq..(b * seq + i + 1) * seq];
            for (j, pj) in p.iter_mut().enumerate() {
                *pj = qi.iter().zip(k.row(b * seq + j)).map(|(x, y)| x * y).sum::<f64>() * scale;
            }
            let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for pj in p.iter_mut() {
                *pj = (*pj - max).exp();
                total += *pj;
            }
            p.iter_mut().for_each(|pj| *pj /= total);
        }
    }
    probs
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Result of a reverse sweep.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    nodes: Vec<Option<ParamId>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradients of every tracked parameter leaf, summed when the same
    /// parameter was placed on the tape more than once.
    pub fn params(&self) -> Vec<(ParamId, Matrix)> {
        let mut out: Vec<(ParamId, Matrix)> = Vec::new();
        for (g, id) in self.grads.iter().zip(&self.nodes) {
            if let (Some(g), Some(id)) = (g, id) {
                match out.iter_mut().find(|(i, _)| i == id) {
                    Some((_, acc)) => acc.axpy(1.0, g),
                    None => out.push((*id, g.clone())),
                }
            }
        }
        out
    }
}
