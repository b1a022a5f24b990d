//! Reverse-mode automatic differentiation over small dense tensors.
//!
//! A [`Graph`] records every primitive as it executes; [`Graph::backward`]
//! walks the record in reverse. Values are generic over [`Real`] so the same
//! code runs in `f32` for training and in `f64` for finite-difference checks.
//! Reductions always accumulate in `f64`.

mod adam;
mod check;
mod gemm;
mod graph;
mod io;
pub mod nn;
mod params;
mod real;
mod tensor;

pub use adam::{adam_step, Adam, AdamConfig};
pub use check::{grad_check, grad_check_params, relative_error};
pub use graph::{Gradients, Graph, Var};
pub use io::{load_tensors, read_tensors, save_tensors, write_tensors, FORMAT_VERSION, MAGIC};
pub use params::{ParamGrads, ParamStore};
pub use real::Real;
pub use tensor::Tensor;
