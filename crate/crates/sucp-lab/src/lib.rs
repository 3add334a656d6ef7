//! Numerical laboratory for truncated Bochner–Martinelli kernels on C^n,
//! their operator norms, Carleman-weight estimates and Wolff-type measure
//! selections.

pub mod counterexample;
pub mod error;
pub mod gegenbauer;
pub mod geometry;
pub mod kernels;
pub mod operator_lab;
pub mod quadrature;
pub mod suites;
pub mod test_function;
pub mod verification;
pub mod wolff;

pub use error::{LabError, Result};
