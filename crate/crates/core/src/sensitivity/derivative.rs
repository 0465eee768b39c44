use serde::{Deserialize, Serialize};

use crate::evolution::{march, Forcing, IntegratorConfig, Trajectory};
use crate::fields::{CoefficientField, MemoryKernel};
use crate::linalg::{block_is_symmetric, CellMatrices};
use crate::operators::{DiscreteSystem, MemoryOperator};
use crate::{Error, Result};

use super::{memory_series, midpoint_config};

/// Direction `(δa, δb, δq)` in coefficient space. `δq` shares the
/// representation of the kernel it perturbs (same `τ_j` or same spacing).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPerturbation {
    pub da: CellMatrices,
    pub db: CellMatrices,
    pub dq: MemoryKernel,
}

impl CoefficientPerturbation {
    pub fn zeros(n_cells: usize, k: usize) -> Self {
        Self { da: CellMatrices::zeros(n_cells, k), db: CellMatrices::zeros(n_cells, k), dq: MemoryKernel::Zero }
    }

    /// `δa` equal to `block` in one cell and zero elsewhere.
    pub fn a_bump(n_cells: usize, k: usize, cell: usize, block: &[f64]) -> Self {
        let mut p = Self::zeros(n_cells, k);
        p.da.block_mut(cell).copy_from_slice(block);
        p
    }

    /// `δb` equal to `block` in one cell and zero elsewhere.
    pub fn b_bump(n_cells: usize, k: usize, cell: usize, block: &[f64]) -> Self {
        let mut p = Self::zeros(n_cells, k);
        p.db.block_mut(cell).copy_from_slice(block);
        p
    }

    pub fn scaled(&self, h: f64) -> Self {
        Self { da: self.da.scaled(h), db: self.db.scaled(h), dq: self.dq.scaled(h) }
    }

    pub fn is_zero(&self) -> bool {
        self.da.is_zero() && self.db.is_zero() && self.dq.is_zero()
    }

    pub fn validate(&self, field: &CoefficientField) -> Result<()> {
        let (n, k) = (field.grid().n_cells(), field.k());
        for m in [&self.da, &self.db] {
            if m.n_cells() != n || m.k() != k {
                return Err(Error::DimensionMismatch { expected: n * k * k, got: m.as_slice().len() });
            }
        }
        for cell in 0..n {
            if !block_is_symmetric(k, self.da.block(cell), 1e-12) {
                return Err(Error::InvalidCoefficient { cell, reason: "δa is not symmetric".into() });
            }
        }
        self.dq.validate(n, k)?;
        // representation check against the base kernel
        field.q().add_scaled(1.0, &self.dq)?;
        Ok(())
    }

    /// `field + h · self`, checked against the field's bounds.
    pub fn apply(&self, field: &CoefficientField, h: f64) -> Result<CoefficientField> {
        field.perturbed(h, &self.da, &self.db, &self.dq)
    }
}

/// Right-hand sides `gⁿ = −[δA (uⁿ⁺¹ − uⁿ)/dt + δB (uⁿ⁺¹ + uⁿ)/2 + (δRⁿ⁺¹ + δRⁿ)/2]`.
pub(crate) fn linearized_forcing(
    system: &DiscreteSystem,
    states: &[Vec<f64>],
    pert: &CoefficientPerturbation,
) -> Result<Vec<Vec<f64>>> {
    let dt = system.grid().dt();
    let len = system.state_len();
    let dmem = MemoryOperator::new(pert.dq.clone(), system.grid(), system.k())?;
    let dr = if dmem.is_zero() { None } else { Some(memory_series(&dmem, states)) };
    let mut out = Vec::with_capacity(states.len().saturating_sub(1));
    let mut diff = vec![0.0; len];
    let mut avg = vec![0.0; len];
    for n in 0..states.len() - 1 {
        let mut g = vec![0.0; len];
        for i in 0..len {
            diff[i] = (states[n + 1][i] - states[n][i]) / dt;
            avg[i] = 0.5 * (states[n + 1][i] + states[n][i]);
        }
        pert.da.apply_add(-1.0, &diff, &mut g);
        pert.db.apply_add(-1.0, &avg, &mut g);
        if let Some(dr) = &dr {
            for (gi, (a, b)) in g.iter_mut().zip(dr[n + 1].iter().zip(&dr[n])) {
                *gi -= 0.5 * (a + b);
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Solves the linearized scheme for `δu` along a dense base trajectory.
pub fn directional_derivative(
    system: &DiscreteSystem,
    base: &Trajectory,
    pert: &CoefficientPerturbation,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let config = midpoint_config(config)?;
    pert.validate(system.field())?;
    let states = base.states()?;
    if states.len() != system.grid().n_steps() + 1 || base.k() != system.k() {
        return Err(Error::GridMismatch("base trajectory does not match the system".into()));
    }
    if base.onset().is_finite() && base.t0() != 0.0 {
        return Err(Error::Unsupported("linearization needs a causal base solve from t = 0".into()));
    }
    let g = linearized_forcing(system, states, pert)?;
    let zero = vec![0.0; system.state_len()];
    march(system, &zero, 0.0, Forcing::Discrete(&g), &config)
}
