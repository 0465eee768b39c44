//! Solvers and sensitivity tools for symmetric hyperbolic integro-differential
//! systems
//!
//! ```text
//! a ∂u/∂t + Σ_j p_j ∂u/∂x_j + b u + q ∗ u = f,   u = 0 for t < T₀
//! ```
//!
//! with coefficients `a`, `b`, `q` that are merely bounded and measurable in
//! space. Coefficients are piecewise constant per grid cell; `p(∇)` is
//! discretized by centered differences that are exactly skew-symmetric; time
//! stepping is implicit midpoint (or RK4 for explicit runs).
//!
//! Module map:
//!
//! * [`fields`]: grids, coefficient fields, memory kernels, sources, mollification.
//! * [`operators`]: mass, skew, lower-order and memory operators, energy.
//! * [`evolution`]: causal and initial-value solves, energy accounting.
//! * [`physics`]: acoustic and viscoelastic material models.
//! * [`forward`]: trace samplers and the forward map.
//! * [`sensitivity`]: linearization, adjoint state and gradients.
//! * [`experiments`]: analytic oracles and verification studies.
//! * [`io`]: binary and text file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fields;
pub mod forward;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod physics;
pub mod sensitivity;

pub use error::{Error, Result};
