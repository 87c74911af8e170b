//! Tensor-diagram calculus for Hessian metrics of Monge-Ampère potentials,
//! with numeric evaluation on explicit potentials and a verification harness.

// NaN-aware negated comparisons and index loops over tensor slots are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calculus;
pub mod diagram;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod jet;
pub mod verification;

pub use error::{Error, Result};
