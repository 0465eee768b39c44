use crate::evolution::{march, Forcing, IntegratorConfig};
use crate::forward::{sampler_adjoint_source, Sampler, SeismogramData};
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::midpoint_config;

/// Discrete adjoint multipliers `λʲ`, `j = 0..=N+1`, one per midpoint step
/// `j−1 → j`; `λ⁰ = λᴺ⁺¹ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointState {
    dt: f64,
    cell_volume: f64,
    lambda: Vec<Vec<f64>>,
}

impl AdjointState {
    /// Builds from the physical adjoint field `wʲ = −λʲ / vol`, `j = 1..=N`.
    pub fn from_w(dt: f64, cell_volume: f64, w: Vec<Vec<f64>>) -> Self {
        let len = w.first().map_or(0, |v| v.len());
        let mut lambda = Vec::with_capacity(w.len() + 2);
        lambda.push(vec![0.0; len]);
        lambda.extend(w.into_iter().map(|v| v.into_iter().map(|x| -cell_volume * x).collect()));
        lambda.push(vec![0.0; len]);
        Self { dt, cell_volume, lambda }
    }

    pub fn n_steps(&self) -> usize {
        self.lambda.len() - 2
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self, j: usize) -> &[f64] {
        &self.lambda[j]
    }

    /// Physical adjoint field on step `j`, centred at `t_{j−1/2}`; zero past `T`.
    pub fn w(&self, j: usize) -> Vec<f64> {
        let s = -1.0 / self.cell_volume;
        self.lambda.get(j).map_or_else(Vec::new, |l| l.iter().map(|x| s * x).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.lambda.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Solves `Lᵀ λ = (dt Sᵀ rⁿ)ₙ`, so that `⟨S δu, r⟩ = −⟨δL u, λ⟩` for every
/// perturbation of the scheme.
pub fn adjoint_solve(
    system: &DiscreteSystem,
    residual: &SeismogramData,
    sampler: &Sampler,
    config: &IntegratorConfig,
) -> Result<AdjointState> {
    let config = midpoint_config(config)?;
    let grid = system.grid();
    let n_steps = grid.n_steps();
    if residual.n_steps() != n_steps {
        return Err(Error::GridMismatch(format!("residual has {} steps, system {}", residual.n_steps(), n_steps)));
    }
    if (residual.dt() - grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::GridMismatch("residual dt differs from the solve".into()));
    }
    if sampler.state_len() != system.state_len() {
        return Err(Error::DimensionMismatch { expected: system.state_len(), got: sampler.state_len() });
    }
    let back = sampler_adjoint_source(sampler, residual)?;
    let forcing: Vec<Vec<f64>> = (0..n_steps).map(|i| back[n_steps - i].clone()).collect();
    let transposed = system.transposed()?;
    let zero = vec![0.0; system.state_len()];
    let traj = march(&transposed, &zero, 0.0, Forcing::Discrete(&forcing), &config)?;
    let nu = traj.states()?;
    let mut lambda = Vec::with_capacity(n_steps + 2);
    lambda.push(zero.clone());
    for j in 1..=n_steps {
        lambda.push(nu[n_steps + 1 - j].clone());
    }
    lambda.push(zero);
    Ok(AdjointState { dt: grid.dt(), cell_volume: grid.cell_volume(), lambda })
}
