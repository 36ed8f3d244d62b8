//! Extrinsic conformal operators of embedded submanifolds.
//!
//! Given an ambient Riemannian metric (expressions on a coordinate chart) and
//! an embedded submanifold, this crate computes the second- and fourth-order
//! extrinsic conformally covariant operators and their Q-curvatures by two
//! independent routes — closed-form curvature expressions and an asymptotic
//! normal-form pipeline — and verifies their covariance, factorization and
//! decomposition laws numerically using exact truncated-Taylor (jet)
//! arithmetic.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`];
//! `f64` is the production instantiation.

pub mod cli;
pub mod einstein;
pub mod error;
pub mod geometry;
pub mod jets;
pub mod normalform;
pub mod operators;
pub mod scalar;
pub mod submanifold;
pub mod tensor;

pub use error::{Error, Result};
pub use jets::{Expr, Jet, MultiIndex};
pub use scalar::Real;

/// Production-precision jet.
pub type Jet64 = Jet<f64>;
/// Low-precision jet, mainly to exercise scalar genericity.
pub type Jet32 = Jet<f32>;
