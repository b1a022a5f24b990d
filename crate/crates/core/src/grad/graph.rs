//! The tape: forward primitives and their reverse-mode adjoints.

use std::collections::HashMap;

use super::gemm::gemm;
use super::params::{ParamGrads, ParamStore};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Constant,
    Input,
    Param,
    MatMul(Var, Var),
    Conv1d { x: Var, w: Var, b: Var, stride: usize, cols: Vec<T> },
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Log(Var),
    Abs(Var),
    Sum(Var),
    Mean(Var),
    MaxPoolTime { x: Var, winners: Vec<Vec<usize>> },
    Slice { x: Var, start: usize },
    Concat(Vec<Var>),
    Affine { x: Var, scale: f64 },
    Transpose(Var),
    Reshape(Var),
    Clamp { x: Var, lo: f64, hi: f64 },
    StraightThrough(Var),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Input => "input",
            Op::Param => "param",
            Op::MatMul(..) => "matmul",
            Op::Conv1d { .. } => "conv1d",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Log(_) => "log",
            Op::Abs(_) => "abs",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::MaxPoolTime { .. } => "maxpool_time",
            Op::Slice { .. } => "slice",
            Op::Concat(_) => "concat",
            Op::Affine { .. } => "affine",
            Op::Transpose(_) => "transpose",
            Op::Reshape(_) => "reshape",
            Op::Clamp { .. } => "clamp",
            Op::StraightThrough(_) => "straight_through",
        }
    }
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Ordered record of executed primitives. Nodes are appended as ops run, so
/// every node's inputs precede it.
#[derive(Debug, Default)]
pub struct Graph<T: Real> {
    nodes: Vec<Node<T>>,
    params: HashMap<usize, Var>,
}

fn mismatch(op: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { op, detail }
}

/// Shape of a broadcast binary op: the shorter shape must be a suffix of the
/// longer one.
fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if long[long.len() - short.len()..] != *short {
        return Err(mismatch(op, format!("{a:?} vs {b:?}")));
    }
    Ok(long.to_vec())
}

/// Sums a full-size gradient down to a broadcast operand of `n` elements.
fn reduce_broadcast<T: Real>(g: &[T], n: usize) -> Vec<T> {
    if g.len() == n {
        return g.to_vec();
    }
    let mut acc = vec![0.0f64; n];
    for (i, &v) in g.iter().enumerate() {
        acc[i % n] += v.f64();
    }
    acc.into_iter().map(T::of).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), params: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Names of the recorded primitives, in execution order.
    pub fn op_names(&self) -> Vec<&'static str> {
        self.nodes.iter().map(|n| n.op.name()).collect()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        let needs_grad = match &op {
            Op::Constant => false,
            Op::Input | Op::Param => true,
            Op::Concat(xs) => xs.iter().any(|x| self.nodes[x.0].needs_grad),
            other => inputs(other).iter().any(|x| self.nodes[x.0].needs_grad),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, t: Tensor<T>) -> Result<Var> {
        self.push(t, Op::Constant, "constant")
    }

    /// A leaf whose gradient is tracked (used for input-gradient checks).
    pub fn input(&mut self, t: Tensor<T>) -> Result<Var> {
        self.push(t, Op::Input, "input")
    }

    /// Binds store parameter `index`; repeated binds return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, index: usize) -> Result<Var> {
        if let Some(&v) = self.params.get(&index) {
            return Ok(v);
        }
        let v = self.push(store.value(index).clone(), Op::Param, "param")?;
        self.params.insert(index, v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(mismatch("matmul", format!("{sa:?} x {sb:?}")));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = gemm(self.value(a).data(), self.value(b).data(), m, k, n, false, false);
        self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), "matmul")
    }

    /// Valid 1-D convolution: `x [C_in, T]`, `w [C_out, C_in, K]`, `b [C_out]`
    /// gives `[C_out, (T - K) / stride + 1]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Result<Var> {
        let (sx, sw, sb) = (self.shape(x).to_vec(), self.shape(w).to_vec(), self.shape(b).to_vec());
        if sx.len() != 2 || sw.len() != 3 || sw[1] != sx[0] || sb != [sw[0]] || stride == 0 {
            return Err(mismatch("conv1d", format!("x {sx:?} w {sw:?} b {sb:?} stride {stride}")));
        }
        let (c_in, t_in, c_out, k) = (sx[0], sx[1], sw[0], sw[2]);
        if t_in < k {
            return Err(mismatch("conv1d", format!("input length {t_in} shorter than kernel {k}")));
        }
        let t_out = (t_in - k) / stride + 1;
        let xd = self.value(x).data();
        let mut cols = vec![T::zero(); c_in * k * t_out];
        for c in 0..c_in {
            for j in 0..k {
                let row = &mut cols[(c * k + j) * t_out..(c * k + j + 1) * t_out];
                for (t, r) in row.iter_mut().enumerate() {
                    *r = xd[c * t_in + t * stride + j];
                }
            }
        }
        let mut out = gemm(self.value(w).data(), &cols, c_out, c_in * k, t_out, false, false);
        let bd = self.value(b).data();
        for o in 0..c_out {
            for v in &mut out[o * t_out..(o + 1) * t_out] {
                *v = *v + bd[o];
            }
        }
        self.push(Tensor::new(vec![c_out, t_out], out)?, Op::Conv1d { x, w, b, stride, cols }, "conv1d")
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let shape = broadcast_shape(name, self.shape(a), self.shape(b))?;
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let n = shape.iter().product::<usize>();
        let out = (0..n).map(|i| f(ad[i % ad.len()], bd[i % bd.len()])).collect();
        Tensor::new(shape, out)
    }

    /// Elementwise sum; the shorter operand broadcasts over leading dims.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary(a, b, "add", |x, y| x + y)?;
        self.push(t, Op::Add(a, b), "add")
    }

    /// Elementwise product; the shorter operand broadcasts over leading dims.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary(a, b, "mul", |x, y| x * y)?;
        self.push(t, Op::Mul(a, b), "mul")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let nb = self.scale(b, -1.0)?;
        self.add(a, nb)
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64) -> Tensor<T> {
        let v = self.value(x);
        Tensor::new(v.shape().to_vec(), v.data().iter().map(|&a| T::of(f(a.f64()))).collect()).expect("same shape")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let t = self.unary(x, sigmoid);
        self.push(t, Op::Sigmoid(x), "sigmoid")
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let t = self.unary(x, f64::tanh);
        self.push(t, Op::Tanh(x), "tanh")
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let t = self.unary(x, |a| a.max(0.0));
        self.push(t, Op::Relu(x), "relu")
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        let t = self.unary(x, f64::ln);
        self.push(t, Op::Log(x), "log")
    }

    pub fn abs(&mut self, x: Var) -> Result<Var> {
        let t = self.unary(x, f64::abs);
        self.push(t, Op::Abs(x), "abs")
    }

    /// `scale * x + shift` for constants.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var> {
        let t = self.unary(x, |a| scale * a + shift);
        self.push(t, Op::Affine { x, scale }, "affine")
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Result<Var> {
        self.affine(x, s, 0.0)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        let t = self.unary(x, |a| a.clamp(lo, hi));
        self.push(t, Op::Clamp { x, lo, hi }, "clamp")
    }

    fn last_dim(&self, x: Var, op: &'static str) -> Result<usize> {
        match self.shape(x).last() {
            Some(&d) if d > 0 => Ok(d),
            _ => Err(mismatch(op, format!("needs a nonempty last dimension, got {:?}", self.shape(x)))),
        }
    }

    fn row_softmax(&self, x: Var, d: usize, log: bool) -> Tensor<T> {
        let v = self.value(x);
        let mut out = Vec::with_capacity(v.numel());
        for row in v.data().chunks(d) {
            let max = row.iter().map(|a| a.f64()).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|a| (a.f64() - max).exp()).sum();
            let lz = z.ln();
            out.extend(row.iter().map(|a| {
                let s = a.f64() - max;
                T::of(if log { s - lz } else { s.exp() / z })
            }));
        }
        Tensor::new(v.shape().to_vec(), out).expect("same shape")
    }

    /// Softmax over the last dimension.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let d = self.last_dim(x, "softmax")?;
        let t = self.row_softmax(x, d, false);
        self.push(t, Op::Softmax(x), "softmax")
    }

    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let d = self.last_dim(x, "log_softmax")?;
        let t = self.row_softmax(x, d, true);
        self.push(t, Op::LogSoftmax(x), "log_softmax")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s: f64 = self.value(x).data().iter().map(|a| a.f64()).sum();
        self.push(Tensor::scalar(T::of(s)), Op::Sum(x), "sum")
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        if v.numel() == 0 {
            return Err(mismatch("mean", "empty tensor".into()));
        }
        let s: f64 = v.data().iter().map(|a| a.f64()).sum::<f64>() / v.numel() as f64;
        self.push(Tensor::scalar(T::of(s)), Op::Mean(x), "mean")
    }

    /// Global max over the last (time) dimension. The gradient is shared
    /// equally among tied maxima (a valid subgradient), so an all-equal row
    /// still passes gradient to every position.
    pub fn maxpool_time(&mut self, x: Var) -> Result<Var> {
        let d = self.last_dim(x, "maxpool_time")?;
        let v = self.value(x);
        let mut out = Vec::with_capacity(v.numel() / d);
        let mut winners = Vec::with_capacity(v.numel() / d);
        for (r, row) in v.data().chunks(d).enumerate() {
            let best = row.iter().cloned().fold(row[0], |m, a| if a > m { a } else { m });
            out.push(best);
            winners.push((0..d).filter(|&i| row[i] == best).map(|i| r * d + i).collect());
        }
        let shape = v.shape()[..v.shape().len() - 1].to_vec();
        self.push(Tensor::new(shape, out)?, Op::MaxPoolTime { x, winners }, "maxpool_time")
    }

    /// Rows `start..end` along the first dimension.
    pub fn slice(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if shape.is_empty() || start >= end || end > shape[0] {
            return Err(mismatch("slice", format!("{start}..{end} of {shape:?}")));
        }
        let row: usize = shape[1..].iter().product();
        let data = self.value(x).data()[start * row..end * row].to_vec();
        let mut out_shape = shape;
        out_shape[0] = end - start;
        self.push(Tensor::new(out_shape, data)?, Op::Slice { x, start }, "slice")
    }

    /// Concatenation along the first dimension.
    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs.first().ok_or_else(|| mismatch("concat", "no inputs".into()))?;
        let rest = self.shape(*first).get(1..).map(<[usize]>::to_vec);
        let mut rows = 0;
        let mut data = Vec::new();
        for &x in xs {
            let s = self.shape(x);
            if s.is_empty() || Some(s[1..].to_vec()) != rest {
                return Err(mismatch("concat", format!("{s:?} vs trailing {rest:?}")));
            }
            rows += s[0];
            data.extend_from_slice(self.value(x).data());
        }
        let mut shape = vec![rows];
        shape.extend(rest.expect("checked"));
        self.push(Tensor::new(shape, data)?, Op::Concat(xs.to_vec()), "concat")
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return Err(mismatch("transpose", format!("needs 2-D, got {s:?}")));
        }
        let (r, c) = (s[0], s[1]);
        let d = self.value(x).data();
        let mut out = vec![T::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = d[i * c + j];
            }
        }
        self.push(Tensor::new(vec![c, r], out)?, Op::Transpose(x), "transpose")
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x);
        if shape.iter().product::<usize>() != v.numel() {
            return Err(mismatch("reshape", format!("{:?} -> {shape:?}", v.shape())));
        }
        let t = v.clone().with_shape(shape.to_vec());
        self.push(t, Op::Reshape(x), "reshape")
    }

    /// Forward value `hard`, gradient passed to `soft` unchanged.
    pub fn straight_through(&mut self, soft: Var, hard: Tensor<T>) -> Result<Var> {
        if hard.shape() != self.shape(soft) {
            return Err(mismatch("straight_through", format!("{:?} vs {:?}", hard.shape(), self.shape(soft))));
        }
        self.push(hard, Op::StraightThrough(soft), "straight_through")
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::NotScalar(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        let mut params = HashMap::new();
        for (&idx, &v) in &self.params {
            params.insert(idx, v);
        }
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) -> Result<()> {
        let node = &self.nodes[i];
        let out = node.value.data();
        let mut acc = |v: Var, delta: Vec<T>| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.iter_mut().zip(delta).for_each(|(e, d)| *e += d),
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Constant | Op::Input | Op::Param => {}
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if self.nodes[a.0].needs_grad {
                    acc(*a, gemm(g, self.value(*b).data(), m, n, k, false, true));
                }
                if self.nodes[b.0].needs_grad {
                    acc(*b, gemm(self.value(*a).data(), g, k, m, n, true, false));
                }
            }
            Op::Conv1d { x, w, b, stride, cols } => {
                let sw = self.shape(*w);
                let (c_out, c_in, k) = (sw[0], sw[1], sw[2]);
                let t_out = node.value.shape()[1];
                let ck = c_in * k;
                if self.nodes[w.0].needs_grad {
                    acc(*w, gemm(g, cols, c_out, t_out, ck, false, true));
                }
                if self.nodes[b.0].needs_grad {
                    let gb = g.chunks(t_out).map(|row| T::of(row.iter().map(|v| v.f64()).sum())).collect();
                    acc(*b, gb);
                }
                if self.nodes[x.0].needs_grad {
                    let gcols = gemm(self.value(*w).data(), g, ck, c_out, t_out, true, false);
                    let t_in = self.shape(*x)[1];
                    let mut gx = vec![T::zero(); c_in * t_in];
                    for c in 0..c_in {
                        for j in 0..k {
                            let row = &gcols[(c * k + j) * t_out..(c * k + j + 1) * t_out];
                            for (t, &v) in row.iter().enumerate() {
                                gx[c * t_in + t * stride + j] += v;
                            }
                        }
                    }
                    acc(*x, gx);
                }
            }
            Op::Add(a, b) => {
                let (na, nb) = (self.value(*a).numel(), self.value(*b).numel());
                acc(*a, reduce_broadcast(g, na));
                acc(*b, reduce_broadcast(g, nb));
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                if self.nodes[a.0].needs_grad {
                    let full: Vec<T> = g.iter().enumerate().map(|(i, &gi)| gi * bd[i % bd.len()]).collect();
                    acc(*a, reduce_broadcast(&full, ad.len()));
                }
                if self.nodes[b.0].needs_grad {
                    let full: Vec<T> = g.iter().enumerate().map(|(i, &gi)| gi * ad[i % ad.len()]).collect();
                    acc(*b, reduce_broadcast(&full, bd.len()));
                }
            }
            Op::Sigmoid(x) => acc(*x, g.iter().zip(out).map(|(&gi, &y)| gi * y * (T::one() - y)).collect()),
            Op::Tanh(x) => acc(*x, g.iter().zip(out).map(|(&gi, &y)| gi * (T::one() - y * y)).collect()),
            Op::Relu(x) => {
                let xd = self.value(*x).data();
                acc(*x, g.iter().zip(xd).map(|(&gi, &a)| if a > T::zero() { gi } else { T::zero() }).collect())
            }
            Op::Log(x) => {
                let xd = self.value(*x).data();
                acc(*x, g.iter().zip(xd).map(|(&gi, &a)| gi / a).collect())
            }
            Op::Abs(x) => {
                let xd = self.value(*x).data();
                acc(*x, g.iter().zip(xd).map(|(&gi, &a)| if a == T::zero() { T::zero() } else { gi * a.signum() }).collect())
            }
            Op::Affine { x, scale } => {
                let s = T::of(*scale);
                acc(*x, g.iter().map(|&gi| gi * s).collect())
            }
            Op::Clamp { x, lo, hi } => {
                let xd = self.value(*x).data();
                acc(
                    *x,
                    g.iter()
                        .zip(xd)
                        .map(|(&gi, &a)| if a.f64() > *lo && a.f64() < *hi { gi } else { T::zero() })
                        .collect(),
                )
            }
            Op::Softmax(x) => {
                let d = *node.value.shape().last().expect("checked");
                let mut gx = Vec::with_capacity(g.len());
                for (gr, yr) in g.chunks(d).zip(out.chunks(d)) {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a.f64() * b.f64()).sum();
                    gx.extend(gr.iter().zip(yr).map(|(&gi, &y)| T::of(y.f64() * (gi.f64() - dot))));
                }
                acc(*x, gx)
            }
            Op::LogSoftmax(x) => {
                let d = *node.value.shape().last().expect("checked");
                let mut gx = Vec::with_capacity(g.len());
                for (gr, yr) in g.chunks(d).zip(out.chunks(d)) {
                    let total: f64 = gr.iter().map(|a| a.f64()).sum();
                    gx.extend(gr.iter().zip(yr).map(|(&gi, &y)| T::of(gi.f64() - y.f64().exp() * total)));
                }
                acc(*x, gx)
            }
            Op::Sum(x) => acc(*x, vec![g[0]; self.value(*x).numel()]),
            Op::Mean(x) => {
                let n = self.value(*x).numel();
                acc(*x, vec![T::of(g[0].f64() / n as f64); n])
            }
            Op::MaxPoolTime { x, winners } => {
                let mut gx = vec![T::zero(); self.value(*x).numel()];
                for (w, &gi) in winners.iter().zip(g) {
                    let share = gi / T::of(w.len() as f64);
                    for &j in w {
                        gx[j] += share;
                    }
                }
                acc(*x, gx)
            }
            Op::Slice { x, start } => {
                let xs = self.shape(*x);
                let row: usize = xs[1..].iter().product();
                let mut gx = vec![T::zero(); self.value(*x).numel()];
                gx[start * row..start * row + g.len()].copy_from_slice(g);
                acc(*x, gx)
            }
            Op::Concat(xs) => {
                let mut offset = 0;
                for &x in xs {
                    let n = self.value(x).numel();
                    acc(x, g[offset..offset + n].to_vec());
                    offset += n;
                }
            }
            Op::Transpose(x) => {
                let s = self.shape(*x);
                let (r, c) = (s[0], s[1]);
                let mut gx = vec![T::zero(); r * c];
                for i in 0..r {
                    for j in 0..c {
                        gx[i * c + j] = g[j * r + i];
                    }
                }
                acc(*x, gx)
            }
            Op::Reshape(x) | Op::StraightThrough(x) => acc(*x, g.to_vec()),
        }
        Ok(())
    }
}

fn inputs<T>(op: &Op<T>) -> Vec<Var> {
    match op {
        Op::Constant | Op::Input | Op::Param => vec![],
        Op::MatMul(a, b) | Op::Add(a, b) | Op::Mul(a, b) => vec![*a, *b],
        Op::Conv1d { x, w, b, .. } => vec![*x, *w, *b],
        Op::Sigmoid(x)
        | Op::Tanh(x)
        | Op::Relu(x)
        | Op::Softmax(x)
        | Op::LogSoftmax(x)
        | Op::Log(x)
        | Op::Abs(x)
        | Op::Sum(x)
        | Op::Mean(x)
        | Op::Transpose(x)
        | Op::Reshape(x)
        | Op::StraightThrough(x)
        | Op::MaxPoolTime { x, .. }
        | Op::Slice { x, .. }
        | Op::Affine { x, .. }
        | Op::Clamp { x, .. } => vec![*x],
        Op::Concat(xs) => xs.clone(),
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    params: HashMap<usize, Var>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to a node, if any flowed to it.
    pub fn wrt(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradients aligned with `store`; parameters that were not bound or
    /// received no gradient get zeros.
    pub fn params(&self, store: &ParamStore<T>) -> ParamGrads<T> {
        let grads = (0..store.len())
            .map(|i| {
                let shape = store.value(i).shape().to_vec();
                match self.params.get(&i).and_then(|v| self.wrt(*v)) {
                    Some(g) => Tensor::new(shape, g.to_vec()).expect("param gradient shape"),
                    None => Tensor::zeros(&shape),
                }
            })
            .collect();
        ParamGrads::new(grads)
    }
}
