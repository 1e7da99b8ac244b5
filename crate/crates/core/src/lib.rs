//! Quasi-static droplet free-boundary simulator.
//!
//! The droplet height `u` on the wetted region `Ω_t` solves `-Δu = λ_t`
//! with `u = 0` on `∂Ω_t` and `∫u = 1`; the boundary moves outward with
//! normal velocity `V = F(|Du|)`. This crate provides the marker-curve
//! geometry, a boundary-collocation torsion solver, front-tracking time
//! integration, closed-form oracles on the disk and the equilateral triangle,
//! and a pipeline that detects loss of convexity along the flat bottom edge
//! of a rounded triangle.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod counterexample;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod exact;
pub mod geometry;
pub mod mobility;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
