//! Layers composed from the primitive set. Each layer holds indices into a
//! [`ParamStore`] and binds them onto a [`Graph`] when run.

use rand::Rng as _;

use super::graph::{Graph, Var};
use super::params::ParamStore;
use super::real::Real;
use super::tensor::Tensor;
use crate::error::Result;
use crate::seed::Rng;

fn uniform<T: Real>(rng: &mut Rng, shape: &[usize], bound: f64) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.gen_range(-bound..=bound))).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches")
}

/// `x [n, in] -> x W + b`, `W [in, out]`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    w: usize,
    b: usize,
}

impl Linear {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, d_in: usize, d_out: usize, rng: &mut Rng) -> Result<Self> {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let w = store.add(&format!("{name}.w"), uniform(rng, &[d_in, d_out], bound))?;
        let b = store.add(&format!("{name}.b"), Tensor::zeros(&[d_out]))?;
        Ok(Self { w, b })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = g.param(store, self.w)?;
        let b = g.param(store, self.b)?;
        let y = g.matmul(x, w)?;
        g.add(y, b)
    }

    pub fn bias_index(&self) -> usize {
        self.b
    }
}

/// Valid strided convolution `[C_in, T] -> [C_out, T']`.
#[derive(Debug, Clone, Copy)]
pub struct Conv1d {
    w: usize,
    b: usize,
    pub stride: usize,
    pub kernel: usize,
}

impl Conv1d {
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let bound = (6.0 / (c_in * kernel) as f64).sqrt();
        let w = store.add(&format!("{name}.w"), uniform(rng, &[c_out, c_in, kernel], bound))?;
        let b = store.add(&format!("{name}.b"), Tensor::zeros(&[c_out]))?;
        Ok(Self { w, b, stride, kernel })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = g.param(store, self.w)?;
        let b = g.param(store, self.b)?;
        g.conv1d(x, w, b, self.stride)
    }
}

/// Single-layer unidirectional GRU over `[T, in] -> [T, hidden]`, zero
/// initial state.
#[derive(Debug, Clone, Copy)]
pub struct Gru {
    input: [usize; 3],
    recurrent: [usize; 3],
    bias: [usize; 3],
    recurrent_bias_n: usize,
    pub hidden: usize,
}

impl Gru {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, d_in: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut input = [0; 3];
        let mut recurrent = [0; 3];
        let mut bias = [0; 3];
        for (k, gate) in ["r", "z", "n"].iter().enumerate() {
            input[k] = store.add(&format!("{name}.w_i{gate}"), uniform(rng, &[d_in, hidden], bound))?;
            recurrent[k] = store.add(&format!("{name}.w_h{gate}"), uniform(rng, &[hidden, hidden], bound))?;
            bias[k] = store.add(&format!("{name}.b_i{gate}"), Tensor::zeros(&[hidden]))?;
        }
        let recurrent_bias_n = store.add(&format!("{name}.b_hn"), Tensor::zeros(&[hidden]))?;
        Ok(Self { input, recurrent, bias, recurrent_bias_n, hidden })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let steps = g.shape(x)[0];
        let mut pre = [x; 3];
        for k in 0..3 {
            let w = g.param(store, self.input[k])?;
            let b = g.param(store, self.bias[k])?;
            let xw = g.matmul(x, w)?;
            pre[k] = g.add(xw, b)?;
        }
        let w_hr = g.param(store, self.recurrent[0])?;
        let w_hz = g.param(store, self.recurrent[1])?;
        let w_hn = g.param(store, self.recurrent[2])?;
        let b_hn = g.param(store, self.recurrent_bias_n)?;
        let mut h = g.constant(Tensor::zeros(&[1, self.hidden]))?;
        let mut states = Vec::with_capacity(steps);
        for t in 0..steps {
            let xr = g.slice(pre[0], t, t + 1)?;
            let xz = g.slice(pre[1], t, t + 1)?;
            let xn = g.slice(pre[2], t, t + 1)?;
            let hr = g.matmul(h, w_hr)?;
            let hz = g.matmul(h, w_hz)?;
            let hn = g.matmul(h, w_hn)?;
            let hn = g.add(hn, b_hn)?;
            let r = g.add(xr, hr)?;
            let r = g.sigmoid(r)?;
            let z = g.add(xz, hz)?;
            let z = g.sigmoid(z)?;
            let rn = g.mul(r, hn)?;
            let n = g.add(xn, rn)?;
            let n = g.tanh(n)?;
            // h' = n + z (h - n)
            let d = g.sub(h, n)?;
            let zd = g.mul(z, d)?;
            h = g.add(n, zd)?;
            states.push(h);
        }
        g.concat(&states)
    }
}

/// Single-head self-attention with a residual connection over `[T, d]`.
#[derive(Debug, Clone, Copy)]
pub struct SelfAttention {
    q: usize,
    k: usize,
    v: usize,
    dim: usize,
}

impl SelfAttention {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, dim: usize, rng: &mut Rng) -> Result<Self> {
        let bound = (3.0 / dim as f64).sqrt();
        let q = store.add(&format!("{name}.w_q"), uniform(rng, &[dim, dim], bound))?;
        let k = store.add(&format!("{name}.w_k"), uniform(rng, &[dim, dim], bound))?;
        let v = store.add(&format!("{name}.w_v"), uniform(rng, &[dim, dim], bound))?;
        Ok(Self { q, k, v, dim })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let wq = g.param(store, self.q)?;
        let wk = g.param(store, self.k)?;
        let wv = g.param(store, self.v)?;
        let q = g.matmul(x, wq)?;
        let k = g.matmul(x, wk)?;
        let v = g.matmul(x, wv)?;
        let kt = g.transpose(k)?;
        let scores = g.matmul(q, kt)?;
        let scores = g.scale(scores, 1.0 / (self.dim as f64).sqrt())?;
        let attn = g.softmax(scores)?;
        let mixed = g.matmul(attn, v)?;
        g.add(x, mixed)
    }
}
