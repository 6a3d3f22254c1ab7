//! Numerical laboratory for spherical averages over Korányi spheres on the
//! Heisenberg group ℍⁿ.
//!
//! Points of ℍⁿ are stored as flat slices of length `2n + 1`: the horizontal
//! part `u ∈ ℝ²ⁿ` first, the central coordinate last. The crate covers group
//! arithmetic, the Korányi sphere and its surface measure, the matrix
//! identities behind the curvature computations, rotational and cinematic
//! curvature of the averaging phases, discretized averaging and maximal
//! operators, and the counterexample families that bound the L^p improving
//! region.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

pub mod counterexamples;
pub mod curvature;
pub mod dual;
pub mod error;
pub mod exec;
pub mod fit;
pub mod heisenberg;
pub mod linalg;
pub mod matrix_identities;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod sphere;

pub use error::{Error, Result};
pub use heisenberg::GroupContext;
pub use linalg::Matrix;
