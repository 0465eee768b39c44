//! Derivatives of solutions and traces with respect to the coefficients:
//! linearized solves, the least-squares objective, adjoint states and
//! gradient representers, with finite-difference cross-checks.
//!
//! Everything is the exact derivative of the discrete implicit-midpoint
//! scheme. Writing one march as the block lower-triangular Toeplitz system
//! `Σ_{m≤j} K_{j−m} u^m = dt g^{j−1}` with
//!
//! ```text
//! K₀ = A + dt/2 (P + B + W₀),  K₁ = −A + dt/2 (P + B + W₁ + W₀),
//! K_l = dt/2 (W_l + W_{l−1})   (l ≥ 2),
//! ```
//!
//! the transpose is the same scheme for `(−P, Bᵀ, W)` run on reversed time.

mod adjoint;
mod derivative;
mod gradient;
mod study;

pub use adjoint::{adjoint_solve, AdjointState};
pub use derivative::{directional_derivative, CoefficientPerturbation};
pub use gradient::{assemble_gradient, gradient, objective, GradientReport, KernelGradient};
pub use study::{dot_product_test, fd_check, quotient_study, trajectory_sup_norm, DotTest, FdRow, QuotientRow, QuotientTable};

use crate::evolution::{IntegratorConfig, Scheme};
use crate::operators::MemoryOperator;
use crate::{Error, Result};

/// `Rᵖ` for `p = 0..=N` along stored states `u⁰..u^N` (`u⁰ = 0`).
pub(crate) fn memory_series(op: &MemoryOperator, states: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = states.first().map_or(0, |u| u.len());
    let mut state = op.start();
    let mut out = Vec::with_capacity(states.len());
    let mut r = vec![0.0; n];
    for (p, u) in states.iter().enumerate() {
        if p > 0 {
            op.commit(&mut state, &states[p - 1], u);
        }
        op.current(&state, &mut r);
        out.push(r.clone());
    }
    out
}

pub(crate) fn midpoint_config(config: &IntegratorConfig) -> Result<IntegratorConfig> {
    if config.scheme != Scheme::ImplicitMidpoint {
        return Err(Error::Unsupported("derivatives and adjoints follow the implicit midpoint scheme only".into()));
    }
    Ok(IntegratorConfig { stride: 1, ..config.clone() })
}

#[cfg(test)]
mod tests;
