//! Time integration: causal solves from rest, initial-value solves, and
//! energy bookkeeping.

mod diagnostics;
mod solve;
mod stepper;
mod trajectory;

pub use diagnostics::{energy_identity_residual, graph_norm_series, smooth_trajectory};
pub use solve::{march, solve_causal, solve_ivp};
pub use stepper::Forcing;
pub use trajectory::{IntegratorConfig, Scheme, Trajectory};

/// Largest stable RK4 step for a system at the given CFL safety factor.
pub fn rk4_dt_limit(system: &crate::operators::DiscreteSystem, safety: f64) -> f64 {
    stepper::Rk4::dt_limit(system, safety)
}

#[cfg(test)]
mod tests;
