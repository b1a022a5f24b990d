//! Central finite-difference gradient checking.

use super::graph::{Graph, Var};
use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::Result;

/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Max componentwise relative error between the reverse-mode gradient of
/// the scalar `f(x)` and central differences with step `eps`.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, Var) -> Result<Var>,
{
    let eval = |t: Tensor<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let v = g.input(t)?;
        let out = f(&mut g, v)?;
        Ok(g.value(out).item())
    };
    let mut g = Graph::new();
    let v = g.input(x.clone())?;
    let out = f(&mut g, v)?;
    let grads = g.backward(out)?;
    let zeros = vec![0.0; x.numel()];
    let analytic = grads.wrt(v).unwrap_or(&zeros);
    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

/// Like [`grad_check`] but over parameter entries. `components` lists
/// `(param index, element index)` pairs to probe.
pub fn grad_check_params<F>(f: F, store: &ParamStore<f64>, components: &[(usize, usize)], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let mut g = Graph::new();
    let out = f(&mut g, store)?;
    let analytic = g.backward(out)?.params(store);
    let mut probe = store.clone();
    let mut worst = 0.0f64;
    for &(p, e) in components {
        let orig = probe.value(p).data()[e];
        let mut eval = |x: f64| -> Result<f64> {
            probe.value_mut(p).data_mut()[e] = x;
            let mut g = Graph::new();
            let out = f(&mut g, &probe)?;
            Ok(g.value(out).item())
        };
        let numeric = (eval(orig + eps)? - eval(orig - eps)?) / (2.0 * eps);
        probe.value_mut(p).data_mut()[e] = orig;
        worst = worst.max(relative_error(analytic.get(p).data()[e], numeric));
    }
    Ok(worst)
}
