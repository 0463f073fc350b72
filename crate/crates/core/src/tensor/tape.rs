// SPDX-License-Identifier: Apache-2.0
//! Computation tape.
//!
//! Ops are appended in evaluation order; backward walks the tape in reverse,
//! so every value's gradient is complete before it is propagated further.
//! Constants (`Tape::constant`) never receive gradients.

use super::gru::{self, GruCache, GruParams};
use super::{sign, Gradients, ParamId, ParamStore, TensorError};
use ndarray::{s, Array2, ArrayView2, Axis, Zip};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Contiguous grouping of E rows into n segments: segment i owns rows
/// `offsets[i]..offsets[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
}

impl Segments {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for c in counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        Segments { offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Segment id of every row.
    pub fn owners(&self) -> Vec<usize> {
        (0..self.len()).flat_map(|i| self.range(i).map(move |_| i)).collect()
    }
}

enum Op {
    Const,
    Param(ParamId),
    MatMul(Var, Var),
    /// x·W + b with b broadcast over rows
    Linear(Var, Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    /// (n×1) column times (n×d), row-wise
    ScaleRows(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    Gather(Vec<(Var, usize)>),
    SegmentSoftmax(Var, Arc<Segments>),
    SegmentSum(Var, Arc<Segments>),
    SegmentMean(Var, Arc<Segments>),
    Gru(Box<GruNode>),
    /// mean |pred − target|
    L1(Var, Array2<f64>),
}

struct GruNode {
    x: Var,
    h: Var,
    p: [Var; 9],
    cache: GruCache,
}

struct Entry {
    /// `None` for parameters, whose value lives in the store.
    value: Option<Array2<f64>>,
    op: Op,
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    entries: Vec<Entry>,
    param_vars: Vec<Option<Var>>,
}

fn check(op: &'static str, ok: bool, l: (usize, usize), r: (usize, usize)) -> Result<(), TensorError> {
    if ok {
        Ok(())
    } else {
        Err(TensorError::Shape { op, left: l, right: r })
    }
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape {
            store,
            entries: Vec::new(),
            param_vars: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.entries.push(Entry { value: Some(value), op });
        Var(self.entries.len() as u32 - 1)
    }

    pub fn value(&self, v: Var) -> ArrayView2<'_, f64> {
        let e = &self.entries[v.idx()];
        match (&e.value, &e.op) {
            (Some(x), _) => x.view(),
            (None, Op::Param(id)) => self.store.get(*id).view(),
            _ => unreachable!("entry without value"),
        }
    }

    pub fn dim(&self, v: Var) -> (usize, usize) {
        self.value(v).dim()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Const)
    }

    /// The tape variable for a stored parameter; one per parameter per tape.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        self.entries.push(Entry {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.entries.len() as u32 - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (da, db) = (self.dim(a), self.dim(b));
        check("matmul", da.1 == db.0, da, db)?;
        let out = self.value(a).dot(&self.value(b));
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let (dx, dw, dbias) = (self.dim(x), self.dim(w), self.dim(b));
        check("linear", dx.1 == dw.0, dx, dw)?;
        check("linear bias", dbias == (1, dw.1), dbias, (1, dw.1))?;
        let mut out = self.value(x).dot(&self.value(w));
        out += &self.value(b);
        Ok(self.push(out, Op::Linear(x, w, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (da, db) = (self.dim(a), self.dim(b));
        check("add", da == db, da, db)?;
        let out = &self.value(a) + &self.value(b);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (da, db) = (self.dim(a), self.dim(b));
        check("mul", da == db, da, db)?;
        let out = &self.value(a) * &self.value(b);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale_rows(&mut self, s: Var, x: Var) -> Result<Var, TensorError> {
        let (ds, dx) = (self.dim(s), self.dim(x));
        check("scale_rows", ds == (dx.0, 1), ds, dx)?;
        let out = &self.value(x) * &self.value(s);
        Ok(self.push(out, Op::ScaleRows(s, x)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(sigmoid);
        self.push(out, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(f64::tanh);
        self.push(out, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let rows = self.dim(parts[0]).0;
        for &p in parts {
            check("concat_cols", self.dim(p).0 == rows, self.dim(p), (rows, 0))?;
        }
        let cols: usize = parts.iter().map(|&p| self.dim(p).1).sum();
        let mut out = Array2::zeros((rows, cols));
        let mut c = 0;
        for &p in parts {
            let v = self.value(p);
            out.slice_mut(s![.., c..c + v.ncols()]).assign(&v);
            c += v.ncols();
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Stacks the given rows, each taken from any variable.
    pub fn gather(&mut self, rows: Vec<(Var, usize)>) -> Result<Var, TensorError> {
        if rows.is_empty() {
            return Err(TensorError::Empty("gather"));
        }
        let cols = self.dim(rows[0].0).1;
        let mut out = Array2::zeros((rows.len(), cols));
        for (i, &(v, r)) in rows.iter().enumerate() {
            let src = self.value(v);
            check("gather", src.ncols() == cols && r < src.nrows(), src.dim(), (r, cols))?;
            out.row_mut(i).assign(&src.row(r));
        }
        Ok(self.push(out, Op::Gather(rows)))
    }

    /// Softmax within each segment of an E×1 score column.
    pub fn segment_softmax(&mut self, x: Var, seg: Arc<Segments>) -> Result<Var, TensorError> {
        let d = self.dim(x);
        check("segment_softmax", d == (seg.total(), 1), d, (seg.total(), 1))?;
        let xv = self.value(x);
        let mut out = Array2::zeros(d);
        for i in 0..seg.len() {
            let r = seg.range(i);
            if r.is_empty() {
                return Err(TensorError::Empty("segment_softmax"));
            }
            let max = r.clone().map(|e| xv[[e, 0]]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for e in r.clone() {
                let y = (xv[[e, 0]] - max).exp();
                out[[e, 0]] = y;
                total += y;
            }
            for e in r {
                out[[e, 0]] /= total;
            }
        }
        Ok(self.push(out, Op::SegmentSoftmax(x, seg)))
    }

    fn segment_reduce(&self, x: Var, seg: &Segments, mean: bool) -> Result<Array2<f64>, TensorError> {
        let d = self.dim(x);
        check("segment_sum", d.0 == seg.total(), d, (seg.total(), d.1))?;
        let xv = self.value(x);
        let mut out = Array2::zeros((seg.len(), d.1));
        for i in 0..seg.len() {
            let r = seg.range(i);
            let k = r.len();
            let mut row = out.row_mut(i);
            for e in r {
                row += &xv.row(e);
            }
            if mean && k > 0 {
                row /= k as f64;
            }
        }
        Ok(out)
    }

    pub fn segment_sum(&mut self, x: Var, seg: Arc<Segments>) -> Result<Var, TensorError> {
        let out = self.segment_reduce(x, &seg, false)?;
        Ok(self.push(out, Op::SegmentSum(x, seg)))
    }

    pub fn segment_mean(&mut self, x: Var, seg: Arc<Segments>) -> Result<Var, TensorError> {
        let out = self.segment_reduce(x, &seg, true)?;
        Ok(self.push(out, Op::SegmentMean(x, seg)))
    }

    /// Fused GRU cell over a batch of rows.
    pub fn gru(&mut self, x: Var, h: Var, p: &GruParams) -> Result<Var, TensorError> {
        let (dx, dh) = (self.dim(x), self.dim(h));
        check("gru input", dx.1 == p.input_dim, dx, (dx.0, p.input_dim))?;
        check("gru hidden", dh == (dx.0, p.hidden_dim), dh, (dx.0, p.hidden_dim))?;
        let ids = p.ids();
        let pv: [Var; 9] = std::array::from_fn(|i| self.param(ids[i]));
        let weights: [ArrayView2<f64>; 9] = std::array::from_fn(|i| self.store.get(ids[i]).view());
        let (out, cache) = gru::forward(self.value(x), self.value(h), &weights);
        Ok(self.push(out, Op::Gru(Box::new(GruNode { x, h, p: pv, cache }))))
    }

    /// Mean absolute error against a constant target; yields a 1×1 value.
    pub fn l1(&mut self, pred: Var, target: Array2<f64>) -> Result<Var, TensorError> {
        let dp = self.dim(pred);
        check("l1", dp == target.dim(), dp, target.dim())?;
        let n = dp.0 * dp.1;
        let loss = Zip::from(&self.value(pred))
            .and(&target)
            .fold(0.0, |acc, &p, &t| acc + (p - t).abs())
            / n.max(1) as f64;
        Ok(self.push(Array2::from_elem((1, 1), loss), Op::L1(pred, target)))
    }

    /// Reverse sweep from a 1×1 variable.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.dim(root), (1, 1), "backward needs a scalar root");
        let n = self.entries.len();
        let mut grads: Vec<Option<Array2<f64>>> = Vec::with_capacity(n);
        grads.resize_with(n, || None);
        grads[root.idx()] = Some(Array2::ones((1, 1)));

        for i in (0..=root.idx()).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.entries[i].op {
                Op::Const => {}
                Op::Param(_) => {
                    grads[i] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    self.acc(&mut grads, *a, || g.dot(&bv.t()));
                    self.acc(&mut grads, *b, || av.t().dot(&g));
                }
                Op::Linear(x, w, b) => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    self.acc(&mut grads, *x, || g.dot(&wv.t()));
                    self.acc(&mut grads, *w, || xv.t().dot(&g));
                    self.acc(&mut grads, *b, || g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                Op::Add(a, b) => {
                    self.acc(&mut grads, *a, || g.clone());
                    self.acc(&mut grads, *b, || g.clone());
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    self.acc(&mut grads, *a, || &g * &bv);
                    self.acc(&mut grads, *b, || &g * &av);
                }
                Op::ScaleRows(sv, x) => {
                    let (s, xv) = (self.value(*sv), self.value(*x));
                    self.acc(&mut grads, *sv, || (&g * &xv).sum_axis(Axis(1)).insert_axis(Axis(1)));
                    self.acc(&mut grads, *x, || &g * &s);
                }
                Op::Sigmoid(x) => {
                    let y = self.entries[i].value.as_ref().unwrap();
                    self.acc(&mut grads, *x, || {
                        Zip::from(&g).and(y).map_collect(|&g, &y| g * y * (1.0 - y))
                    });
                }
                Op::Tanh(x) => {
                    let y = self.entries[i].value.as_ref().unwrap();
                    self.acc(&mut grads, *x, || {
                        Zip::from(&g).and(y).map_collect(|&g, &y| g * (1.0 - y * y))
                    });
                }
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    self.acc(&mut grads, *x, || {
                        Zip::from(&g)
                            .and(&xv)
                            .map_collect(|&g, &x| if x > 0.0 { g } else { 0.0 })
                    });
                }
                Op::ConcatCols(parts) => {
                    let mut c = 0;
                    for &p in parts {
                        let w = self.dim(p).1;
                        self.acc(&mut grads, p, || g.slice(s![.., c..c + w]).to_owned());
                        c += w;
                    }
                }
                Op::Gather(rows) => {
                    for (r, &(v, src_row)) in rows.iter().enumerate() {
                        if self.is_const(v) {
                            continue;
                        }
                        let slot = grads[v.idx()].get_or_insert_with(|| Array2::zeros(self.dim(v)));
                        let mut dst = slot.row_mut(src_row);
                        dst += &g.row(r);
                    }
                }
                Op::SegmentSoftmax(x, seg) => {
                    let y = self.entries[i].value.as_ref().unwrap();
                    self.acc(&mut grads, *x, || {
                        let mut dx = Array2::zeros(y.dim());
                        for s in 0..seg.len() {
                            let r = seg.range(s);
                            let dot: f64 = r.clone().map(|e| y[[e, 0]] * g[[e, 0]]).sum();
                            for e in r {
                                dx[[e, 0]] = y[[e, 0]] * (g[[e, 0]] - dot);
                            }
                        }
                        dx
                    });
                }
                Op::SegmentSum(x, seg) | Op::SegmentMean(x, seg) => {
                    let mean = matches!(self.entries[i].op, Op::SegmentMean(..));
                    let d = self.dim(*x);
                    self.acc(&mut grads, *x, || {
                        let mut dx = Array2::zeros(d);
                        for s in 0..seg.len() {
                            let r = seg.range(s);
                            let k = if mean { r.len() as f64 } else { 1.0 };
                            let gs = g.row(s).mapv(|v| v / k);
                            for e in r {
                                dx.row_mut(e).assign(&gs);
                            }
                        }
                        dx
                    });
                }
                Op::Gru(node) => {
                    let weights: [ArrayView2<f64>; 9] = std::array::from_fn(|k| self.value(node.p[k]));
                    let gg = gru::backward(self.value(node.x), self.value(node.h), &weights, &node.cache, g.view());
                    self.acc(&mut grads, node.x, || gg.dx);
                    self.acc(&mut grads, node.h, || gg.dh);
                    for (k, dw) in gg.dparams.into_iter().enumerate() {
                        self.acc(&mut grads, node.p[k], || dw);
                    }
                }
                Op::L1(pred, target) => {
                    let pv = self.value(*pred);
                    let n = pv.len().max(1) as f64;
                    let scale = g[[0, 0]] / n;
                    self.acc(&mut grads, *pred, || {
                        Zip::from(&pv).and(target).map_collect(|&p, &t| sign(p - t) * scale)
                    });
                }
            }
        }

        let mut out = Gradients::zeros_like(self.store);
        for (k, v) in self.param_vars.iter().enumerate() {
            if let Some(v) = v {
                if let Some(g) = grads[v.idx()].take() {
                    out.set(ParamId(k), g);
                }
            }
        }
        out
    }

    fn is_const(&self, v: Var) -> bool {
        matches!(self.entries[v.idx()].op, Op::Const)
    }

    fn acc(&self, grads: &mut [Option<Array2<f64>>], v: Var, delta: impl FnOnce() -> Array2<f64>) {
        if self.is_const(v) {
            return;
        }
        match &mut grads[v.idx()] {
            Some(g) => *g += &delta(),
            slot @ None => *slot = Some(delta()),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{grad_check, GradCheckConfig};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
    }

    fn cfg() -> GradCheckConfig {
        GradCheckConfig {
            tol: 1e-4,
            ..Default::default()
        }
    }

    #[test]
    fn linear_l1_passes_grad_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        let w = store.add("w", random(&mut rng, 5, 3));
        let b = store.add("b", random(&mut rng, 1, 3));
        let x = random(&mut rng, 4, 5);
        let target = random(&mut rng, 4, 3) * 5.0;
        let f = |s: &ParamStore| {
            let mut t = Tape::new(s);
            let xv = t.constant(x.clone());
            let (wv, bv) = (t.param(w), t.param(b));
            let y = t.linear(xv, wv, bv)?;
            let loss = t.l1(y, target.clone())?;
            Ok((t.scalar(loss), t.backward(loss)))
        };
        let report = grad_check(&store, f, &cfg()).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let w = store.add("w", random(&mut rng, 5, 3));
        let x = random(&mut rng, 4, 5);
        let target = random(&mut rng, 4, 3) * 5.0;
        let f = |s: &ParamStore| {
            let mut t = Tape::new(s);
            let xv = t.constant(x.clone());
            let wv = t.param(w);
            let y = t.matmul(xv, wv)?;
            let loss = t.l1(y, target.clone())?;
            let mut g = t.backward(loss);
            g.scale(2.0);
            Ok((t.scalar(loss), g))
        };
        let report = grad_check(&store, f, &cfg()).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn elementwise_ops_pass_grad_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let a = store.add("a", random(&mut rng, 6, 4));
        let b = store.add("b", random(&mut rng, 6, 4));
        let s = store.add("s", random(&mut rng, 6, 1));
        let target = random(&mut rng, 6, 12) * 3.0;
        let f = |st: &ParamStore| {
            let mut t = Tape::new(st);
            let (av, bv, sv) = (t.param(a), t.param(b), t.param(s));
            let m = t.mul(av, bv)?;
            let sum = t.add(m, av)?;
            let sg = t.sigmoid(sum);
            let th = t.tanh(bv);
            let rl = t.relu(av);
            let sc = t.scale_rows(sv, th)?;
            let cat = t.concat_cols(&[sg, sc, rl])?;
            let loss = t.l1(cat, target.clone())?;
            Ok((t.scalar(loss), t.backward(loss)))
        };
        let report = grad_check(&store, f, &cfg()).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn segment_ops_pass_grad_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let x = store.add("x", random(&mut rng, 4, 3));
        let w = store.add("w", random(&mut rng, 3, 1));
        let seg = Arc::new(Segments::from_counts([1, 3, 2]));
        let target = random(&mut rng, 3, 6) * 2.0;
        let f = |st: &ParamStore| {
            let mut t = Tape::new(st);
            let (xv, wv) = (t.param(x), t.param(w));
            // six edge rows drawn from four source rows
            let e = t.gather(vec![(xv, 0), (xv, 1), (xv, 2), (xv, 1), (xv, 3), (xv, 0)])?;
            let scores = t.matmul(e, wv)?;
            let alpha = t.segment_softmax(scores, seg.clone())?;
            let weighted = t.scale_rows(alpha, e)?;
            let s = t.segment_sum(weighted, seg.clone())?;
            let m = t.segment_mean(e, seg.clone())?;
            let cat = t.concat_cols(&[s, m])?;
            let loss = t.l1(cat, target.clone())?;
            Ok((t.scalar(loss), t.backward(loss)))
        };
        let report = grad_check(&store, f, &cfg()).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn segment_softmax_values() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let x = t.constant(array![[0.0], [3f64.ln()], [5.0]]);
        let y = t.segment_softmax(x, Arc::new(Segments::from_counts([2, 1]))).unwrap();
        let yv = t.value(y);
        assert!((yv[[0, 0]] - 0.25).abs() < 1e-15);
        assert!((yv[[1, 0]] - 0.75).abs() < 1e-15);
        assert_eq!(yv[[2, 0]], 1.0);
    }

    #[test]
    fn shape_errors() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let a = t.constant(Array2::zeros((2, 3)));
        let b = t.constant(Array2::zeros((2, 3)));
        assert!(t.matmul(a, b).is_err());
        let c = t.constant(Array2::zeros((3, 3)));
        assert!(t.add(a, c).is_err());
        assert!(t.gather(vec![]).is_err());
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut store = ParamStore::new();
        let w = store.add("w", array![[2.0]]);
        let mut t = Tape::new(&store);
        let x = t.constant(array![[3.0]]);
        let wv = t.param(w);
        let y = t.mul(x, wv).unwrap();
        let loss = t.l1(y, array![[0.0]]).unwrap();
        let g = t.backward(loss);
        assert_eq!(g.get(w).unwrap()[[0, 0]], 3.0);
    }
}
