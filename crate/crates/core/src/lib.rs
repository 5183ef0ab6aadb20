//! Exact evaluation, extremal search and bound verification for the
//! Jacobsthal-Tverberg floor-function sums `S_m(A, K)`.
//!
//! - [`eval`]: the definitional double sum and the closed-form inclusion-exclusion evaluator
//! - [`symmetry`]: mirrored sums and the two- and three-element difference operators
//! - [`search`]: exhaustive max/min search over bounded multisets
//! - [`conjecture`]: the extremal recurrence, known bounds and their verification
//! - [`cli`]: command-line front end and result cache

pub mod cache;
pub mod cli;
pub mod conjecture;
pub mod error;
pub mod eval;
pub mod search;
pub mod symmetry;

pub use error::{Error, Result};
pub use eval::{eval_closed, eval_direct, Instance, SumValue};
