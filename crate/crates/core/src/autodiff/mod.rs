//! Reverse-mode differentiation over dense row-major matrices.
//!
//! A [`Graph`] records operations in insertion order; [`Graph::backward`]
//! walks that record in reverse and accumulates gradients. Parameters live in
//! a [`ParamStore`] that graphs borrow read-only, so several graphs can be
//! built concurrently over the same parameters and their gradients merged
//! into a [`GradStore`] afterwards.

mod adam;
mod gradcheck;
mod graph;
pub mod nn;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use graph::{Graph, Reduction, Var};
pub use params::{GradStore, Param, ParamId, ParamStore};
pub use tensor::Tensor;
