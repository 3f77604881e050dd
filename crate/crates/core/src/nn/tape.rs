//! Reverse-mode differentiation over a linear tape of [`DenseArray`] values.
//!
//! Every op appends one node; `backward` walks the tape once in reverse.
//! Parameter leaves remember their slot in the [`ParamStore`] so gradients
//! come back aligned with the store.

use super::array::{gemm, DenseArray};
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

const BN_EPS: f64 = 1e-5;
/// Head widths up to this use plain loops instead of packed GEMM.
const SMALL_HEAD: usize = 16;

#[derive(Debug)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Tanh(Var),
    Relu(Var),
    Gather(Var, Vec<usize>),
    ScatterAdd(Var, Vec<usize>),
    ConcatRows(Vec<Var>),
    ConcatCols(Var, Var),
    SliceRows(Var, usize),
    RowScale(Var, Vec<f64>),
    /// `(x, w, heads)`: x block h times `w[h·dk..(h+1)·dk, :]`.
    HeadMatMul(Var, Var, usize),
    HeadDot(Var, Var, usize),
    HeadScale(Var, Var, usize),
    /// `a · s · c` with `s` a 1×1 var.
    ScaleScalar(Var, Var, f64),
    SegmentSoftmax(Var, Vec<usize>),
    BatchNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    BatchNormEval { x: Var, gamma: Var, beta: Var, mean: Vec<f64>, var: Vec<f64> },
    MaskReplace(Var, Var, Vec<bool>),
    Rmse(Var, Vec<f64>),
    SumSquares(Var),
    Scale(Var, f64),
}

/// One recorded computation.
#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<DenseArray>,
    ops: Vec<Op>,
}

/// Batch statistics produced by a training-mode batch norm.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseArray {
        &self.values[v.0]
    }

    fn push(&mut self, value: DenseArray, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn constant(&mut self, value: DenseArray) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Leaf bound to store slot `slot`.
    pub fn param(&mut self, store: &ParamStore, slot: usize) -> Var {
        self.push(store.value(slot).clone(), Op::Param(slot))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        assert_eq!(out.shape(), self.value(b).shape(), "add: shape mismatch");
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.rows(), 1);
        assert_eq!(r.cols(), self.value(a).cols(), "add_row: width mismatch");
        let r = r.as_slice().to_vec();
        let mut out = self.value(a).clone();
        let c = out.cols();
        for chunk in out.as_mut_slice().chunks_mut(c.max(1)) {
            for (o, b) in chunk.iter_mut().zip(&r) {
                *o += b;
            }
        }
        self.push(out, Op::AddRow(a, row))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.max(0.0));
        self.push(out, Op::Relu(a))
    }

    /// Row `i` of the output is row `idx[i]` of `a`.
    pub fn gather(&mut self, a: Var, idx: &[usize]) -> Var {
        let src = self.value(a);
        let c = src.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(src.row(i));
        }
        let out = DenseArray::new(idx.len(), c, data);
        self.push(out, Op::Gather(a, idx.to_vec()))
    }

    /// Output has `n` rows; row `idx[i]` accumulates row `i` of `a`.
    pub fn scatter_add(&mut self, a: Var, idx: &[usize], n: usize) -> Var {
        let src = self.value(a);
        assert_eq!(src.rows(), idx.len(), "scatter_add: index length");
        let mut out = DenseArray::zeros(n, src.cols());
        for (i, &t) in idx.iter().enumerate() {
            for (o, v) in out.row_mut(t).iter_mut().zip(src.row(i)) {
                *o += v;
            }
        }
        self.push(out, Op::ScatterAdd(a, idx.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let c = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = self.value(*p);
            assert_eq!(v.cols(), c, "concat_rows: width mismatch");
            data.extend_from_slice(v.as_slice());
            rows += v.rows();
        }
        let out = DenseArray::new(rows, c, data);
        self.push(out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.rows(), y.rows(), "concat_cols: row mismatch");
        let out = DenseArray::from_fn(x.rows(), x.cols() + y.cols(), |i, j| {
            if j < x.cols() {
                x.get(i, j)
            } else {
                y.get(i, j - x.cols())
            }
        });
        self.push(out, Op::ConcatCols(a, b))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let src = self.value(a);
        let c = src.cols();
        let out = DenseArray::new(len, c, src.as_slice()[start * c..(start + len) * c].to_vec());
        self.push(out, Op::SliceRows(a, start))
    }

    /// Row `i` multiplied by `w[i]`.
    pub fn row_scale(&mut self, a: Var, w: Vec<f64>) -> Var {
        let mut out = self.value(a).clone();
        assert_eq!(out.rows(), w.len());
        for (i, s) in w.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        self.push(out, Op::RowScale(a, w))
    }

    /// Block-diagonal product: head block `h` of `x` (columns
    /// `h·dk..(h+1)·dk`) times rows `h·dk..(h+1)·dk` of `w` (`heads·dk × dk`).
    pub fn head_matmul(&mut self, x: Var, w: Var, heads: usize) -> Var {
        let (xv, wv) = (self.value(x), self.value(w));
        let d = xv.cols();
        let dk = d / heads;
        assert_eq!(wv.shape(), (d, dk), "head_matmul: weight shape");
        let e = xv.rows();
        let mut out = DenseArray::zeros(e, d);
        if dk <= SMALL_HEAD {
            let (xs, ws) = (xv.as_slice(), wv.as_slice());
            for (r, orow) in out.as_mut_slice().chunks_mut(d).enumerate() {
                let xr = &xs[r * d..(r + 1) * d];
                for h in 0..heads {
                    let o = h * dk;
                    for i in 0..dk {
                        let a = xr[o + i];
                        let wrow = &ws[(o + i) * dk..(o + i + 1) * dk];
                        for (c, w) in orow[o..o + dk].iter_mut().zip(wrow) {
                            *c += a * w;
                        }
                    }
                }
            }
        } else {
            for h in 0..heads {
                let o = h * dk;
                gemm(
                    e,
                    dk,
                    dk,
                    (&xv.as_slice()[o..], d, 1),
                    (&wv.as_slice()[o * dk..], dk, 1),
                    (&mut out.as_mut_slice()[o..], d, 1),
                    0.0,
                );
            }
        }
        self.push(out, Op::HeadMatMul(x, w, heads))
    }

    /// Per-row, per-head dot product: `E × d` with `E × d` gives `E × heads`.
    pub fn head_dot(&mut self, a: Var, b: Var, heads: usize) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape());
        let dk = x.cols() / heads;
        let out = DenseArray::from_fn(x.rows(), heads, |i, h| {
            let (r, s) = (x.row(i), y.row(i));
            (h * dk..(h + 1) * dk).map(|j| r[j] * s[j]).sum()
        });
        self.push(out, Op::HeadDot(a, b, heads))
    }

    /// Head block `h` of row `i` of `x` scaled by `alpha[i, h]`.
    pub fn head_scale(&mut self, x: Var, alpha: Var, heads: usize) -> Var {
        let (xv, av) = (self.value(x), self.value(alpha));
        assert_eq!(av.shape(), (xv.rows(), heads));
        let dk = xv.cols() / heads;
        let out = DenseArray::from_fn(xv.rows(), xv.cols(), |i, j| xv.get(i, j) * av.get(i, j / dk));
        self.push(out, Op::HeadScale(x, alpha, heads))
    }

    pub fn scale_scalar(&mut self, a: Var, s: Var, c: f64) -> Var {
        let sv = self.value(s);
        assert_eq!(sv.shape(), (1, 1));
        let k = sv.get(0, 0) * c;
        let out = self.value(a).map(|v| v * k);
        self.push(out, Op::ScaleScalar(a, s, c))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|v| v * c);
        self.push(out, Op::Scale(a, c))
    }

    /// Softmax of every column over the rows sharing a segment id.
    pub fn segment_softmax(&mut self, a: Var, seg: &[usize], n_seg: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows(), seg.len());
        let c = x.cols();
        let mut mx = vec![f64::NEG_INFINITY; n_seg * c];
        for (i, &s) in seg.iter().enumerate() {
            for j in 0..c {
                let m = &mut mx[s * c + j];
                *m = m.max(x.get(i, j));
            }
        }
        let mut out = DenseArray::zeros(x.rows(), c);
        let mut den = vec![0.0; n_seg * c];
        for (i, &s) in seg.iter().enumerate() {
            for j in 0..c {
                let e = (x.get(i, j) - mx[s * c + j]).exp();
                out.set(i, j, e);
                den[s * c + j] += e;
            }
        }
        for (i, &s) in seg.iter().enumerate() {
            for j in 0..c {
                let v = out.get(i, j) / den[s * c + j];
                out.set(i, j, v);
            }
        }
        self.push(out, Op::SegmentSoftmax(a, seg.to_vec()))
    }

    /// Training-mode batch norm over rows; returns the batch statistics.
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var) -> (Var, BatchStats) {
        let xv = self.value(x);
        let (n, c) = xv.shape();
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(xv.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        for i in 0..n {
            for (j, v) in xv.row(i).iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= n.max(1) as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let (g, b) = (self.value(gamma).as_slice(), self.value(beta).as_slice());
        let mut xhat = vec![0.0; n * c];
        let mut out = DenseArray::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                let h = (xv.get(i, j) - mean[j]) * inv_std[j];
                xhat[i * c + j] = h;
                out.set(i, j, h * g[j] + b[j]);
            }
        }
        let stats = BatchStats { mean, var };
        let v = self.push(out, Op::BatchNorm { x, gamma, beta, xhat, inv_std });
        (v, stats)
    }

    /// Eval-mode batch norm with fixed running statistics.
    pub fn batch_norm_eval(&mut self, x: Var, gamma: Var, beta: Var, mean: &[f64], var: &[f64]) -> Var {
        let xv = self.value(x);
        let (g, b) = (self.value(gamma).as_slice(), self.value(beta).as_slice());
        let out = DenseArray::from_fn(xv.rows(), xv.cols(), |i, j| {
            (xv.get(i, j) - mean[j]) / (var[j] + BN_EPS).sqrt() * g[j] + b[j]
        });
        self.push(
            out,
            Op::BatchNormEval { x, gamma, beta, mean: mean.to_vec(), var: var.to_vec() },
        )
    }

    /// Rows with `keep[i] == false` replaced by the `1 × c` row `null`.
    pub fn mask_replace(&mut self, x: Var, null: Var, keep: &[bool]) -> Var {
        let mut out = self.value(x).clone();
        let nv = self.value(null).as_slice().to_vec();
        assert_eq!(out.rows(), keep.len());
        for (i, k) in keep.iter().enumerate() {
            if !k {
                out.row_mut(i).copy_from_slice(&nv);
            }
        }
        self.push(out, Op::MaskReplace(x, null, keep.to_vec()))
    }

    /// `sqrt(mean((pred - target)²))` as a 1×1 value.
    pub fn rmse(&mut self, pred: Var, target: &[f64]) -> Var {
        let p = self.value(pred).as_slice();
        assert_eq!(p.len(), target.len(), "rmse: length mismatch");
        let ss: f64 = p.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
        let out = DenseArray::scalar((ss / p.len().max(1) as f64).sqrt());
        self.push(out, Op::Rmse(pred, target.to_vec()))
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let out = DenseArray::scalar(self.value(a).as_slice().iter().map(|v| v * v).sum());
        self.push(out, Op::SumSquares(a))
    }

    /// Gradients of the 1×1 `loss` for every store slot, zero for slots the
    /// tape never touched.
    pub fn backward(&self, loss: Var, store: &ParamStore) -> Result<Vec<DenseArray>> {
        if loss.0 >= self.values.len() {
            return Err(Error::Usage("loss variable is not on this tape".into()));
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Usage("gradients need a scalar loss".into()));
        }
        let mut grads: Vec<Option<DenseArray>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(DenseArray::scalar(1.0));
        let mut out: Vec<DenseArray> = (0..store.len())
            .map(|s| {
                let (r, c) = store.value(s).shape();
                DenseArray::zeros(r, c)
            })
            .collect();
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backprop(i, &g, &mut grads, &mut out);
        }
        Ok(out)
    }

    fn backprop(&self, i: usize, g: &DenseArray, grads: &mut [Option<DenseArray>], params: &mut [DenseArray]) {
        let mut acc = |v: Var, d: DenseArray| match &mut grads[v.0] {
            Some(x) => x.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        match &self.ops[i] {
            Op::Leaf => {}
            Op::Param(s) => params[*s].add_assign(g),
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                let mut da = DenseArray::zeros(m, k);
                gemm(m, n, k, (g.as_slice(), n, 1), (bv.as_slice(), 1, n), (da.as_mut_slice(), k, 1), 0.0);
                let mut db = DenseArray::zeros(k, n);
                gemm(k, m, n, (av.as_slice(), 1, k), (g.as_slice(), n, 1), (db.as_mut_slice(), n, 1), 0.0);
                acc(*a, da);
                acc(*b, db);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, r) => {
                let c = g.cols();
                let mut dr = DenseArray::zeros(1, c);
                for i in 0..g.rows() {
                    for (o, v) in dr.as_mut_slice().iter_mut().zip(g.row(i)) {
                        *o += v;
                    }
                }
                acc(*a, g.clone());
                acc(*r, dr);
            }
            Op::Tanh(a) => {
                let y = &self.values[i];
                let d = DenseArray::new(
                    g.rows(),
                    g.cols(),
                    g.as_slice().iter().zip(y.as_slice()).map(|(g, y)| g * (1.0 - y * y)).collect(),
                );
                acc(*a, d);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let d = DenseArray::new(
                    g.rows(),
                    g.cols(),
                    g.as_slice()
                        .iter()
                        .zip(x.as_slice())
                        .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                        .collect(),
                );
                acc(*a, d);
            }
            Op::Gather(a, idx) => {
                let src = self.value(*a);
                let mut d = DenseArray::zeros(src.rows(), src.cols());
                for (r, &t) in idx.iter().enumerate() {
                    for (o, v) in d.row_mut(t).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                acc(*a, d);
            }
            Op::ScatterAdd(a, idx) => {
                let c = g.cols();
                let mut data = Vec::with_capacity(idx.len() * c);
                for &t in idx {
                    data.extend_from_slice(g.row(t));
                }
                acc(*a, DenseArray::new(idx.len(), c, data));
            }
            Op::ConcatRows(parts) => {
                let c = g.cols();
                let mut start = 0;
                for p in parts {
                    let r = self.value(*p).rows();
                    acc(*p, DenseArray::new(r, c, g.as_slice()[start * c..(start + r) * c].to_vec()));
                    start += r;
                }
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(*a).cols();
                let cb = g.cols() - ca;
                acc(*a, DenseArray::from_fn(g.rows(), ca, |i, j| g.get(i, j)));
                acc(*b, DenseArray::from_fn(g.rows(), cb, |i, j| g.get(i, ca + j)));
            }
            Op::SliceRows(a, start) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut d = DenseArray::zeros(src.rows(), c);
                d.as_mut_slice()[start * c..start * c + g.len()].copy_from_slice(g.as_slice());
                acc(*a, d);
            }
            Op::RowScale(a, w) => {
                let mut d = g.clone();
                for (i, s) in w.iter().enumerate() {
                    d.row_mut(i).iter_mut().for_each(|v| *v *= s);
                }
                acc(*a, d);
            }
            Op::HeadMatMul(x, w, heads) => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (e, d) = xv.shape();
                let dk = d / heads;
                let mut dx = DenseArray::zeros(e, d);
                let mut dw = DenseArray::zeros(d, dk);
                if dk <= SMALL_HEAD {
                    let (xs, ws, gs) = (xv.as_slice(), wv.as_slice(), g.as_slice());
                    let (dxs, dws) = (dx.as_mut_slice(), dw.as_mut_slice());
                    for r in 0..e {
                        let row = r * d;
                        for h in 0..*heads {
                            let o = h * dk;
                            let grow = &gs[row + o..row + o + dk];
                            for i in 0..dk {
                                let wrow = &ws[(o + i) * dk..(o + i + 1) * dk];
                                let mut acc = 0.0;
                                for (gv, wv) in grow.iter().zip(wrow) {
                                    acc += gv * wv;
                                }
                                dxs[row + o + i] = acc;
                                let a = xs[row + o + i];
                                for (dwv, gv) in dws[(o + i) * dk..(o + i + 1) * dk].iter_mut().zip(grow) {
                                    *dwv += a * gv;
                                }
                            }
                        }
                    }
                    acc(*x, dx);
                    acc(*w, dw);
                    return;
                }
                for h in 0..*heads {
                    let o = h * dk;
                    // dx_h = g_h W_hᵀ
                    gemm(
                        e,
                        dk,
                        dk,
                        (&g.as_slice()[o..], d, 1),
                        (&wv.as_slice()[o * dk..], 1, dk),
                        (&mut dx.as_mut_slice()[o..], d, 1),
                        0.0,
                    );
                    // dW_h = x_hᵀ g_h
                    gemm(
                        dk,
                        e,
                        dk,
                        (&xv.as_slice()[o..], 1, d),
                        (&g.as_slice()[o..], d, 1),
                        (&mut dw.as_mut_slice()[o * dk..], dk, 1),
                        0.0,
                    );
                }
                acc(*x, dx);
                acc(*w, dw);
            }
            Op::HeadDot(a, b, heads) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let dk = x.cols() / heads;
                let da = DenseArray::from_fn(x.rows(), x.cols(), |i, j| g.get(i, j / dk) * y.get(i, j));
                let db = DenseArray::from_fn(x.rows(), x.cols(), |i, j| g.get(i, j / dk) * x.get(i, j));
                acc(*a, da);
                acc(*b, db);
            }
            Op::HeadScale(x, alpha, heads) => {
                let (xv, av) = (self.value(*x), self.value(*alpha));
                let dk = xv.cols() / heads;
                let dx = DenseArray::from_fn(xv.rows(), xv.cols(), |i, j| g.get(i, j) * av.get(i, j / dk));
                let da = DenseArray::from_fn(xv.rows(), *heads, |i, h| {
                    (h * dk..(h + 1) * dk).map(|j| g.get(i, j) * xv.get(i, j)).sum()
                });
                acc(*x, dx);
                acc(*alpha, da);
            }
            Op::ScaleScalar(a, s, c) => {
                let av = self.value(*a);
                let k = self.value(*s).get(0, 0) * c;
                let ds: f64 = g.as_slice().iter().zip(av.as_slice()).map(|(g, a)| g * a).sum::<f64>() * c;
                acc(*a, g.map(|v| v * k));
                acc(*s, DenseArray::scalar(ds));
            }
            Op::Scale(a, c) => acc(*a, g.map(|v| v * c)),
            Op::SegmentSoftmax(a, seg) => {
                let y = &self.values[i];
                let c = y.cols();
                let n_seg = seg.iter().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; n_seg * c];
                for (r, &s) in seg.iter().enumerate() {
                    for j in 0..c {
                        dot[s * c + j] += y.get(r, j) * g.get(r, j);
                    }
                }
                let d = DenseArray::from_fn(y.rows(), c, |r, j| y.get(r, j) * (g.get(r, j) - dot[seg[r] * c + j]));
                acc(*a, d);
            }
            Op::BatchNorm { x, gamma, beta, xhat, inv_std } => {
                let (n, c) = g.shape();
                let gv = self.value(*gamma).as_slice();
                let mut dg = vec![0.0; c];
                let mut db = vec![0.0; c];
                for r in 0..n {
                    for j in 0..c {
                        dg[j] += g.get(r, j) * xhat[r * c + j];
                        db[j] += g.get(r, j);
                    }
                }
                let nf = n as f64;
                let dx = DenseArray::from_fn(n, c, |r, j| {
                    gv[j] * inv_std[j] / nf * (nf * g.get(r, j) - db[j] - xhat[r * c + j] * dg[j])
                });
                acc(*x, dx);
                acc(*gamma, DenseArray::new(1, c, dg));
                acc(*beta, DenseArray::new(1, c, db));
            }
            Op::BatchNormEval { x, gamma, beta, mean, var } => {
                let (n, c) = g.shape();
                let xv = self.value(*x);
                let gv = self.value(*gamma).as_slice();
                let s: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
                let mut dg = vec![0.0; c];
                let mut db = vec![0.0; c];
                for r in 0..n {
                    for j in 0..c {
                        dg[j] += g.get(r, j) * (xv.get(r, j) - mean[j]) * s[j];
                        db[j] += g.get(r, j);
                    }
                }
                acc(*x, DenseArray::from_fn(n, c, |r, j| g.get(r, j) * gv[j] * s[j]));
                acc(*gamma, DenseArray::new(1, c, dg));
                acc(*beta, DenseArray::new(1, c, db));
            }
            Op::MaskReplace(x, null, keep) => {
                let c = g.cols();
                let mut dx = g.clone();
                let mut dn = DenseArray::zeros(1, c);
                for (r, k) in keep.iter().enumerate() {
                    if !k {
                        for (o, v) in dn.as_mut_slice().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                        dx.row_mut(r).iter_mut().for_each(|v| *v = 0.0);
                    }
                }
                acc(*x, dx);
                acc(*null, dn);
            }
            Op::Rmse(p, t) => {
                let pv = self.value(*p);
                let l = self.values[i].get(0, 0);
                let n = t.len() as f64;
                let k = if l > 0.0 { g.get(0, 0) / (n * l) } else { 0.0 };
                let d = DenseArray::new(
                    pv.rows(),
                    pv.cols(),
                    pv.as_slice().iter().zip(t).map(|(a, b)| k * (a - b)).collect(),
                );
                acc(*p, d);
            }
            Op::SumSquares(a) => {
                let k = 2.0 * g.get(0, 0);
                acc(*a, self.value(*a).map(|v| k * v));
            }
        }
    }
}
