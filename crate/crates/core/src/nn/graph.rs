//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records operations on borrowed parameters and input tensors.
//! Nodes are appended in evaluation order, so the tape is already sorted
//! topologically and `backward` is a single reverse sweep.

use super::tensor::{axpy, matmul, matmul_add_at, matmul_add_bt};
use super::{Gradients, NnError, ParamId, ParamStore, Tensor};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Param(ParamId),
    Input,
    MatMul(Var, Var),
    /// `b` is either the same shape as `a` or a single row broadcast over rows.
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f32),
    Square(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    RepeatRows(Var),
    SelectRow(Var, usize),
    GatherRows(Var, Vec<usize>),
    Reshape(Var),
    Embed(ParamId, Vec<usize>),
    Sum(Var),
    Mean(Var),
    LogSoftmax(Var),
    Pick(Var, usize, usize),
    Detach,
    BceWithLogits(Var, Vec<f32>),
    GruCell(Box<GruCell>),
}

#[derive(Debug)]
struct GruCell {
    xz: Var,
    xr: Var,
    xn: Var,
    row: usize,
    h: Var,
    uz: Var,
    ur: Var,
    un: Var,
    /// Rows that take the update; inactive rows copy `h` through.
    active: Option<Vec<bool>>,
    z: Vec<f32>,
    r: Vec<f32>,
    n: Vec<f32>,
    hn: Vec<f32>,
}

#[derive(Debug)]
struct Node {
    value: Option<Tensor>,
    op: Op,
}

/// Recording of a forward computation over a borrowed [`ParamStore`].
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
    backpropagated: bool,
}

fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::new(), param_nodes: vec![None; params.len()], backpropagated: false }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    fn shape2(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value: Some(value), op });
        Var(self.nodes.len() - 1)
    }

    /// Leaf referencing a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        self.nodes.push(Node { value: None, op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (n, k) = self.shape2(a);
        let (k2, m) = self.shape2(b);
        assert_eq!(k, k2, "matmul: inner dimensions {k} vs {k2}");
        let c = matmul(self.value(a).data(), self.value(b).data(), n, k, m);
        self.push(Tensor::matrix(n, m, c), Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (n, m) = self.shape2(a);
        let (bn, bm) = self.shape2(b);
        assert!(bm == m && (bn == n || bn == 1), "add: shapes {n}x{m} and {bn}x{bm}");
        let bv = self.value(b).data();
        let mut out = self.value(a).data().to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            *o += if bn == n { bv[i] } else { bv[i % m] };
        }
        self.push(Tensor::matrix(n, m, out), Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape2(a), self.shape2(b), "sub: shape mismatch");
        let (n, m) = self.shape2(a);
        let out = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x - y).collect();
        self.push(Tensor::matrix(n, m, out), Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape2(a), self.shape2(b), "mul: shape mismatch");
        let (n, m) = self.shape2(a);
        let out = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
        self.push(Tensor::matrix(n, m, out), Op::Mul(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f32) -> f32, op: Op) -> Var {
        let (n, m) = self.shape2(a);
        let out = self.value(a).data().iter().map(|&x| f(x)).collect();
        self.push(Tensor::matrix(n, m, out), op)
    }

    pub fn scale(&mut self, a: Var, c: f32) -> Var {
        self.unary(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f32::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f32::exp, Op::Exp(a))
    }

    /// Identity in the forward pass, blocks all gradient in the backward pass.
    pub fn detach(&mut self, a: Var) -> Var {
        let t = self.value(a).clone();
        self.push(t, Op::Detach)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols: no inputs");
        let n = self.shape2(parts[0]).0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                let (r, c) = self.shape2(p);
                assert_eq!(r, n, "concat_cols: row mismatch");
                c
            })
            .collect();
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(n * total);
        for i in 0..n {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(i));
            }
        }
        self.push(Tensor::matrix(n, total, out), Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows: no inputs");
        let m = self.shape2(parts[0]).1;
        let mut out = Vec::new();
        for &p in parts {
            assert_eq!(self.shape2(p).1, m, "concat_rows: column mismatch");
            out.extend_from_slice(self.value(p).data());
        }
        let n = out.len() / m;
        self.push(Tensor::matrix(n, m, out), Op::ConcatRows(parts.to_vec()))
    }

    /// Tiles a single row `k` times.
    pub fn repeat_rows(&mut self, a: Var, k: usize) -> Var {
        let (n, m) = self.shape2(a);
        assert!(n == 1 && k >= 1, "repeat_rows: expects one row");
        let row = self.value(a).data().to_vec();
        let mut out = Vec::with_capacity(k * m);
        for _ in 0..k {
            out.extend_from_slice(&row);
        }
        self.push(Tensor::matrix(k, m, out), Op::RepeatRows(a))
    }

    pub fn select_row(&mut self, a: Var, r: usize) -> Var {
        let row = self.value(a).row_slice(r).to_vec();
        self.push(Tensor::row(row), Op::SelectRow(a, r))
    }

    /// Rows `rows` of `a` stacked into a `len(rows) x cols` matrix.
    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Var {
        assert!(!rows.is_empty(), "gather_rows: empty row list");
        let t = self.value(a);
        let m = t.cols();
        let mut out = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            out.extend_from_slice(t.row_slice(r));
        }
        self.push(Tensor::matrix(rows.len(), m, out), Op::GatherRows(a, rows.to_vec()))
    }

    /// Same data viewed as `rows x cols`.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let data = self.value(a).data().to_vec();
        assert_eq!(data.len(), rows * cols, "reshape: element count");
        self.push(Tensor::matrix(rows, cols, data), Op::Reshape(a))
    }

    /// Gathers rows `ids` of an embedding table into a `len(ids) x dim` matrix.
    pub fn embed(&mut self, table: ParamId, ids: &[usize]) -> Var {
        assert!(!ids.is_empty(), "embed: empty id list");
        let t = self.params.get(table);
        let dim = t.cols();
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            assert!(id < t.rows(), "embed: id {id} out of range");
            out.extend_from_slice(t.row_slice(id));
        }
        self.push(Tensor::matrix(ids.len(), dim, out), Op::Embed(table, ids.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s = t.data().iter().sum::<f32>() / t.len() as f32;
        self.push(Tensor::scalar(s), Op::Mean(a))
    }

    /// Row-wise log-softmax, computed with max subtraction.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let (n, m) = self.shape2(a);
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m) {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            row.iter_mut().for_each(|v| *v -= max);
            let lse = row.iter().map(|v| v.exp()).sum::<f32>().ln();
            row.iter_mut().for_each(|v| *v -= lse);
        }
        self.push(Tensor::matrix(n, m, out), Op::LogSoftmax(a))
    }

    pub fn pick(&mut self, a: Var, r: usize, c: usize) -> Var {
        let t = self.value(a);
        let v = t.data()[r * t.cols() + c];
        self.push(Tensor::scalar(v), Op::Pick(a, r, c))
    }

    /// Mean binary cross-entropy between `sigmoid(logits)` and `targets`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f32]) -> Var {
        let x = self.value(logits).data();
        assert_eq!(x.len(), targets.len(), "bce_with_logits: length mismatch");
        let loss = x
            .iter()
            .zip(targets)
            .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
            .sum::<f32>()
            / x.len() as f32;
        self.push(Tensor::scalar(loss), Op::BceWithLogits(logits, targets.to_vec()))
    }

    /// Fused GRU step for a batch of `B` rows.
    ///
    /// `h` is `B x H`; rows `row..row + B` of the input projections `xz`,
    /// `xr`, `xn` (each `T x H`) feed the gates.
    pub fn gru_cell(&mut self, xz: Var, xr: Var, xn: Var, row: usize, h: Var, uz: Var, ur: Var, un: Var) -> Var {
        self.gru_cell_masked(xz, xr, xn, row, h, uz, ur, un, None)
    }

    /// [`Graph::gru_cell`] where rows with `active[b] == false` keep their
    /// previous hidden state. Used for padded batches.
    #[allow(clippy::too_many_arguments)]
    pub fn gru_cell_masked(
        &mut self,
        xz: Var,
        xr: Var,
        xn: Var,
        row: usize,
        h: Var,
        uz: Var,
        ur: Var,
        un: Var,
        active: Option<Vec<bool>>,
    ) -> Var {
        let (batch, hidden) = self.shape2(h);
        for p in [xz, xr, xn] {
            let (rows, cols) = self.shape2(p);
            assert!(
                cols == hidden && row + batch <= rows,
                "gru_cell: projection shape {rows}x{cols}, rows {row}..{}, hidden {hidden}",
                row + batch
            );
        }
        for u in [uz, ur, un] {
            assert_eq!(self.shape2(u), (hidden, hidden), "gru_cell: recurrent matrix shape");
        }
        if let Some(a) = &active {
            assert_eq!(a.len(), batch, "gru_cell: mask length");
        }
        let len = batch * hidden;
        let hv = self.value(h).data();
        let hz = matmul(hv, self.value(uz).data(), batch, hidden, hidden);
        let hr = matmul(hv, self.value(ur).data(), batch, hidden, hidden);
        let hn = matmul(hv, self.value(un).data(), batch, hidden, hidden);
        let off = row * hidden;
        let pz = &self.value(xz).data()[off..off + len];
        let pr = &self.value(xr).data()[off..off + len];
        let pn = &self.value(xn).data()[off..off + len];
        let mut z = vec![0.0; len];
        let mut r = vec![0.0; len];
        let mut n = vec![0.0; len];
        let mut out = vec![0.0; len];
        for b in 0..batch {
            let on = active.as_ref().map_or(true, |a| a[b]);
            for j in b * hidden..(b + 1) * hidden {
                if !on {
                    out[j] = hv[j];
                    continue;
                }
                z[j] = sigmoid(pz[j] + hz[j]);
                r[j] = sigmoid(pr[j] + hr[j]);
                n[j] = (pn[j] + r[j] * hn[j]).tanh();
                out[j] = (1.0 - z[j]) * n[j] + z[j] * hv[j];
            }
        }
        let cell = GruCell { xz, xr, xn, row, h, uz, ur, un, active, z, r, n, hn };
        self.push(Tensor::matrix(batch, hidden, out), Op::GruCell(Box::new(cell)))
    }

    /// Reverse sweep from the scalar `loss`.
    ///
    /// Returns gradients for every parameter reachable from `loss`. A graph
    /// can be differentiated once; a second call is an error.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, NnError> {
        if self.backpropagated {
            return Err(NnError::AlreadyBackpropagated);
        }
        if self.value(loss).len() != 1 {
            return Err(NnError::Shape(format!("backward needs a scalar loss, got {:?}", self.value(loss).shape())));
        }
        self.backpropagated = true;
        let mut grads: Vec<Option<Vec<f32>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new(self.params.len());

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Param(id) => out.accumulate(*id, &g),
                Op::Input | Op::Detach => {}
                Op::Embed(table, ids) => {
                    let dim = self.params.get(*table).cols();
                    let slot = out.slot_mut(*table, self.params.get(*table).len());
                    for (r, &id) in ids.iter().enumerate() {
                        let dst = &mut slot[id * dim..(id + 1) * dim];
                        axpy(1.0, &g[r * dim..(r + 1) * dim], dst);
                    }
                }
                Op::MatMul(a, b) => {
                    let (n, k) = self.shape2(*a);
                    let m = self.shape2(*b).1;
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    matmul_add_bt(&g, bv, n, k, m, slot(&mut grads, *a, n * k));
                    matmul_add_at(av, &g, n, k, m, slot(&mut grads, *b, k * m));
                }
                Op::Add(a, b) => {
                    let (n, m) = self.shape2(*a);
                    axpy(1.0, &g, slot(&mut grads, *a, n * m));
                    let bn = self.shape2(*b).0;
                    let gb = slot(&mut grads, *b, bn * m);
                    if bn == n {
                        axpy(1.0, &g, gb);
                    } else {
                        for row in g.chunks(m) {
                            axpy(1.0, row, gb);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    axpy(1.0, &g, slot(&mut grads, *a, g.len()));
                    axpy(-1.0, &g, slot(&mut grads, *b, g.len()));
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * bv[j];
                    }
                    let gb = slot(&mut grads, *b, g.len());
                    for j in 0..g.len() {
                        gb[j] += g[j] * av[j];
                    }
                }
                Op::Scale(a, c) => axpy(*c, &g, slot(&mut grads, *a, g.len())),
                Op::Square(a) => {
                    let av = self.value(*a).data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += 2.0 * av[j] * g[j];
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * y[j] * (1.0 - y[j]);
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * (1.0 - y[j] * y[j]);
                    }
                }
                Op::Relu(a) => {
                    let x = self.value(*a).data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        if x[j] > 0.0 {
                            ga[j] += g[j];
                        }
                    }
                }
                Op::Exp(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * y[j];
                    }
                }
                Op::ConcatCols(parts) => {
                    let n = self.shape2(parts[0]).0;
                    let total = g.len() / n;
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.shape2(p).1;
                        let gp = slot(&mut grads, p, n * w);
                        for r in 0..n {
                            axpy(1.0, &g[r * total + offset..r * total + offset + w], &mut gp[r * w..(r + 1) * w]);
                        }
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).len();
                        axpy(1.0, &g[offset..offset + len], slot(&mut grads, p, len));
                        offset += len;
                    }
                }
                Op::RepeatRows(a) => {
                    let m = self.shape2(*a).1;
                    let ga = slot(&mut grads, *a, m);
                    for row in g.chunks(m) {
                        axpy(1.0, row, ga);
                    }
                }
                Op::SelectRow(a, r) => {
                    let (n, m) = self.shape2(*a);
                    let ga = slot(&mut grads, *a, n * m);
                    axpy(1.0, &g, &mut ga[r * m..(r + 1) * m]);
                }
                Op::GatherRows(a, rows) => {
                    let (n, m) = self.shape2(*a);
                    let ga = slot(&mut grads, *a, n * m);
                    for (i, &r) in rows.iter().enumerate() {
                        axpy(1.0, &g[i * m..(i + 1) * m], &mut ga[r * m..(r + 1) * m]);
                    }
                }
                Op::Reshape(a) => axpy(1.0, &g, slot(&mut grads, *a, g.len())),
                Op::Sum(a) => {
                    let len = self.value(*a).len();
                    slot(&mut grads, *a, len).iter_mut().for_each(|v| *v += g[0]);
                }
                Op::Mean(a) => {
                    let len = self.value(*a).len();
                    let share = g[0] / len as f32;
                    slot(&mut grads, *a, len).iter_mut().for_each(|v| *v += share);
                }
                Op::LogSoftmax(a) => {
                    let y = node.value.as_ref().unwrap();
                    let m = y.cols();
                    let ga = slot(&mut grads, *a, g.len());
                    for (r, (gy, yr)) in g.chunks(m).zip(y.data().chunks(m)).enumerate() {
                        let total: f32 = gy.iter().sum();
                        for j in 0..m {
                            ga[r * m + j] += gy[j] - yr[j].exp() * total;
                        }
                    }
                }
                Op::Pick(a, r, c) => {
                    let (n, m) = self.shape2(*a);
                    slot(&mut grads, *a, n * m)[r * m + c] += g[0];
                }
                Op::BceWithLogits(a, targets) => {
                    let x = self.value(*a).data();
                    let inv = g[0] / x.len() as f32;
                    let ga = slot(&mut grads, *a, x.len());
                    for j in 0..x.len() {
                        ga[j] += (sigmoid(x[j]) - targets[j]) * inv;
                    }
                }
                Op::GruCell(cell) => {
                    let (batch, hidden) = self.shape2(cell.h);
                    let len = batch * hidden;
                    let hv = self.value(cell.h).data();
                    let mut daz = vec![0.0; len];
                    let mut dar = vec![0.0; len];
                    let mut dan = vec![0.0; len];
                    let mut dhn = vec![0.0; len];
                    let mut dh = vec![0.0; len];
                    for b in 0..batch {
                        let on = cell.active.as_ref().map_or(true, |a| a[b]);
                        for j in b * hidden..(b + 1) * hidden {
                            if !on {
                                dh[j] = g[j];
                                continue;
                            }
                            let (z, r, n) = (cell.z[j], cell.r[j], cell.n[j]);
                            let dz = g[j] * (hv[j] - n);
                            let dn = g[j] * (1.0 - z);
                            dh[j] = g[j] * z;
                            dan[j] = dn * (1.0 - n * n);
                            dhn[j] = dan[j] * r;
                            let dr = dan[j] * cell.hn[j];
                            daz[j] = dz * z * (1.0 - z);
                            dar[j] = dr * r * (1.0 - r);
                        }
                    }
                    let off = cell.row * hidden;
                    for (proj, d) in [(cell.xz, &daz), (cell.xr, &dar), (cell.xn, &dan)] {
                        let plen = self.value(proj).len();
                        let gp = slot(&mut grads, proj, plen);
                        axpy(1.0, d, &mut gp[off..off + len]);
                    }
                    for (u, d) in [(cell.uz, &daz), (cell.ur, &dar), (cell.un, &dhn)] {
                        matmul_add_bt(d, self.value(u).data(), batch, hidden, hidden, &mut dh);
                        matmul_add_at(hv, d, batch, hidden, hidden, slot(&mut grads, u, hidden * hidden));
                    }
                    axpy(1.0, &dh, slot(&mut grads, cell.h, len));
                }
            }
        }
        Ok(out)
    }
}

fn slot(grads: &mut [Option<Vec<f32>>], v: Var, len: usize) -> &mut [f32] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}


#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, t: Tensor) -> (ParamStore, ParamId) {
        let mut s = ParamStore::new();
        let id = s.add(name, t);
        (s, id)
    }

    #[test]
    fn linear_map_gradient_is_input_outer_structure() {
        // loss = sum(x W) with x = (1, 2, 3), W 3x2 => dW[i][j] = x[i]
        let (store, w) = store_with("w", Tensor::matrix(3, 2, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]));
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::row(vec![1.0, 2.0, 3.0]));
        let wv = g.param(w);
        let y = g.matmul(x, wv);
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap(), &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn detach_blocks_gradient() {
        let (store, w) = store_with("w", Tensor::row(vec![0.5, -1.5]));
        let mut g = Graph::new(&store);
        let wv = g.param(w);
        let y = g.tanh(wv);
        let stopped = g.detach(y);
        let sq = g.square(stopped);
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert!(grads.get(w).is_none());
    }

    #[test]
    fn second_backward_is_rejected() {
        let (store, w) = store_with("w", Tensor::row(vec![1.0]));
        let mut g = Graph::new(&store);
        let wv = g.param(w);
        let loss = g.sum(wv);
        assert!(g.backward(loss).is_ok());
        assert!(matches!(g.backward(loss), Err(NnError::AlreadyBackpropagated)));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let (store, w) = store_with("w", Tensor::row(vec![1.0, 2.0]));
        let mut g = Graph::new(&store);
        let wv = g.param(w);
        assert!(g.backward(wv).is_err());
    }

    #[test]
    fn bias_broadcast_accumulates_over_rows() {
        let (store, b) = store_with("b", Tensor::row(vec![0.0, 0.0]));
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::matrix(3, 2, vec![0.0; 6]));
        let bv = g.param(b);
        let y = g.add(x, bv);
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(b).unwrap(), &[3.0, 3.0]);
    }

    #[test]
    #[should_panic(expected = "matmul")]
    fn matmul_dimension_mismatch_panics() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let a = g.input(Tensor::row(vec![1.0, 2.0]));
        let b = g.input(Tensor::row(vec![1.0, 2.0, 3.0]));
        g.matmul(a, b);
    }

    #[test]
    fn log_softmax_is_stable_for_large_scores() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let s = g.input(Tensor::row(vec![1000.0, 1000.0]));
        let l = g.log_softmax(s);
        let v = g.value(l).data();
        assert!((v[0] - 0.5f32.ln()).abs() < 1e-6 && (v[1] - 0.5f32.ln()).abs() < 1e-6);
    }
}
