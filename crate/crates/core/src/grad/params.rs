use std::collections::HashMap;

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry<T> {
    name: String,
    value: Tensor<T>,
    m: Tensor<T>,
    v: Tensor<T>,
}

/// Named trainable tensors with their Adam moment estimates.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<T> {
    entries: Vec<Entry<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new(), index: HashMap::new() }
    }

    pub fn add(&mut self, name: &str, value: Tensor<T>) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter '{name}'")));
        }
        let shape = value.shape().to_vec();
        self.entries.push(Entry { name: name.to_owned(), value, m: Tensor::zeros(&shape), v: Tensor::zeros(&shape) });
        self.index.insert(name.to_owned(), self.entries.len() - 1);
        Ok(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].name
    }

    pub fn value(&self, i: usize) -> &Tensor<T> {
        &self.entries[i].value
    }

    pub fn value_mut(&mut self, i: usize) -> &mut Tensor<T> {
        &mut self.entries[i].value
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.numel()).sum()
    }

    /// Replaces a parameter value; the shape must match.
    pub fn set(&mut self, name: &str, value: Tensor<T>) -> Result<()> {
        let i = self.find(name).ok_or_else(|| Error::ModelFormat(format!("unknown parameter '{name}'")))?;
        if self.entries[i].value.shape() != value.shape() {
            return Err(Error::ModelFormat(format!(
                "parameter '{name}' has shape {:?}, file has {:?}",
                self.entries[i].value.shape(),
                value.shape()
            )));
        }
        self.entries[i].value = value;
        Ok(())
    }

    /// Copy with values converted to another precision; moments reset.
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        let mut out = ParamStore::new();
        for e in &self.entries {
            out.add(&e.name, e.value.cast()).expect("names are unique");
        }
        out
    }

    pub(crate) fn moments_mut(&mut self, i: usize) -> (&mut Tensor<T>, &mut Tensor<T>, &mut Tensor<T>) {
        let e = &mut self.entries[i];
        (&mut e.value, &mut e.m, &mut e.v)
    }

    pub fn moments(&self, i: usize) -> (&Tensor<T>, &Tensor<T>) {
        (&self.entries[i].m, &self.entries[i].v)
    }
}

/// One gradient tensor per store entry, in store order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads<T>(Vec<Tensor<T>>);

impl<T: Real> ParamGrads<T> {
    pub fn new(grads: Vec<Tensor<T>>) -> Self {
        Self(grads)
    }

    pub fn get(&self, i: usize) -> &Tensor<T> {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.0.iter()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| {
                    let d = x.data().iter().zip(y.data()).map(|(p, q)| T::of(a * p.f64() + b * q.f64())).collect();
                    Tensor::new(x.shape().to_vec(), d).expect("same shape")
                })
                .collect(),
        )
    }

    pub fn global_norm(&self) -> f64 {
        self.0.iter().flat_map(|t| t.data().iter()).map(|x| x.f64() * x.f64()).sum::<f64>().sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm {
            let s = T::of(max_norm / norm);
            for t in &mut self.0 {
                for x in t.data_mut() {
                    *x = *x * s;
                }
            }
        }
        norm
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flat_map(|t| t.data().iter()).map(|x| x.f64().abs()).fold(0.0, f64::max)
    }
}
