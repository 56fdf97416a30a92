//! Exact and numerical tools for homogeneous Hörmander vector fields and
//! the higher order operators built from them.
//!
//! The pipeline runs bottom-up: exact polynomials ([`exactpoly`]) carry
//! vector fields and operators ([`fields`]); the Lie algebra they generate
//! ([`liealg`]) defines a homogeneous group onto which the fields are lifted
//! ([`lifting`]); a kernel on that group is saturated back down into a
//! fundamental solution ([`fundsol`]); [`metric`] measures the
//! control distance and ball volumes the kernel estimates are stated in.

pub mod bch;
pub mod error;
pub mod exactpoly;
pub mod fields;
pub mod fundsol;
pub mod liealg;
pub mod lifting;
pub mod linalg;
pub mod metric;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
