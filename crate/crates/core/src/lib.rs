//! Numerical laboratory for generalized Cesàro operators induced by radial
//! weights on the unit disc.
//!
//! For a radial weight ω the operator acts on Taylor coefficients by
//!
//! ```text
//! ĝ(n) = ω_n Σ_{k≤n} f̂(k) / (2 (n-k+1) ω_{2(n-k)+1}),   ω_x = ∫₀¹ r^x ω(r) dr,
//! ```
//!
//! and equals the classical Cesàro average when ω ≡ 1. The crate computes
//! moments and tails of weights, Bergman kernel series, the operator in
//! coefficient and integral form, finite matrix sections in orthonormal
//! coordinates of H_γ and A²_μ, and the boundedness and compactness
//! experiments built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cesaro;
pub mod error;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod spaces;
pub mod special;
pub mod weights;

pub use error::{Error, Result};
