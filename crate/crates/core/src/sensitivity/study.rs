use serde::{Deserialize, Serialize};

use crate::evolution::{solve_causal, IntegratorConfig, Trajectory};
use crate::fields::SourceTerm;
use crate::forward::{forward_map, forward_map_with_trajectory, record, Sampler, SeismogramData};
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::adjoint::adjoint_solve;
use super::derivative::{directional_derivative, CoefficientPerturbation};
use super::gradient::{assemble_gradient, objective};

/// `maxₙ ‖uⁿ‖` in the volume-weighted `L²` norm.
pub fn trajectory_sup_norm(states: &[Vec<f64>], cell_volume: f64) -> f64 {
    states.iter().map(|u| (cell_volume * u.iter().map(|x| x * x).sum::<f64>()).sqrt()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotTest {
    /// `⟨S δu, r⟩` in the data inner product.
    pub data_side: f64,
    /// `⟨δ, g⟩` from the adjoint gradient.
    pub model_side: f64,
    pub relative_error: f64,
}

/// Compares the linearized traces paired with `r` against the adjoint
/// representer paired with the perturbation.
pub fn dot_product_test(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    pert: &CoefficientPerturbation,
    residual: &SeismogramData,
    config: &IntegratorConfig,
) -> Result<DotTest> {
    let (_, base) = forward_map_with_trajectory(system, source, sampler, config)?;
    let du = directional_derivative(system, &base, pert, config)?;
    let data_side = record(&du, sampler)?.inner(residual)?;
    let adj = adjoint_solve(system, residual, sampler, config)?;
    let model_side = assemble_gradient(&base, &adj, system)?.pairing(pert)?;
    let scale = data_side.abs().max(model_side.abs());
    let relative_error = if scale == 0.0 { 0.0 } else { (data_side - model_side).abs() / scale };
    Ok(DotTest { data_side, model_side, relative_error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdRow {
    pub step: f64,
    pub finite_difference: f64,
    pub gradient_pairing: f64,
    pub relative_error: f64,
}

/// Central differences of `J` along `pert` at three steps; reports the step
/// whose estimate agrees best with the next smaller one.
#[allow(clippy::too_many_arguments)]
pub fn fd_check(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    observed: &SeismogramData,
    pert: &CoefficientPerturbation,
    steps: [f64; 3],
    gradient_pairing: f64,
    config: &IntegratorConfig,
) -> Result<FdRow> {
    let j_at = |h: f64| -> Result<f64> {
        let sys = system.with_field(pert.apply(system.field(), h)?)?;
        objective(&forward_map(&sys, source, sampler, config)?, observed)
    };
    let mut fd = [0.0; 3];
    for (f, h) in fd.iter_mut().zip(steps) {
        *f = (j_at(h)? - j_at(-h)?) / (2.0 * h);
    }
    let best = if (fd[0] - fd[1]).abs() <= (fd[1] - fd[2]).abs() { 1 } else { 2 };
    let scale = fd[best].abs().max(gradient_pairing.abs());
    Ok(FdRow {
        step: steps[best],
        finite_difference: fd[best],
        gradient_pairing,
        relative_error: if scale == 0.0 { 0.0 } else { (fd[best] - gradient_pairing).abs() / scale },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientRow {
    pub h: f64,
    /// `maxₙ ‖(u_h − u)/h − δu‖`; `None` when the perturbed coefficients leave the bounds.
    pub remainder: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientTable {
    pub rows: Vec<QuotientRow>,
    pub derivative_norm: f64,
    /// Least-squares slope of `log remainder` against `log h` over finite rows.
    pub slope: Option<f64>,
}

impl QuotientTable {
    pub fn is_monotone_decreasing(&self) -> bool {
        let r: Vec<f64> = self.rows.iter().filter_map(|r| r.remainder).collect();
        r.len() == self.rows.len() && r.windows(2).all(|w| w[1] < w[0])
    }
}

/// Newton quotients `(u_h − u)/h` against the linearized solution over a
/// schedule of `h`.
pub fn quotient_study(
    system: &DiscreteSystem,
    source: &SourceTerm,
    pert: &CoefficientPerturbation,
    schedule: &[f64],
    config: &IntegratorConfig,
) -> Result<QuotientTable> {
    let config = IntegratorConfig { stride: 1, ..config.clone() };
    let base = solve_causal(system, source, &config)?;
    let du = directional_derivative(system, &base, pert, &config)?;
    let vol = system.grid().cell_volume();
    let du_states = du.states()?;
    let derivative_norm = trajectory_sup_norm(du_states, vol);
    let mut rows = Vec::with_capacity(schedule.len());
    for &h in schedule {
        let field = match pert.apply(system.field(), h) {
            Ok(f) => f,
            Err(e @ (Error::InvalidCoefficient { .. } | Error::InvalidArgument(_))) => {
                rows.push(QuotientRow { h, remainder: None, note: Some(e.to_string()) });
                continue;
            }
            Err(e) => return Err(e),
        };
        let uh: Trajectory = solve_causal(&system.with_field(field)?, source, &config)?;
        let rem: Vec<Vec<f64>> = uh
            .states()?
            .iter()
            .zip(base.states()?)
            .zip(du_states)
            .map(|((a, b), d)| a.iter().zip(b).zip(d).map(|((x, y), z)| (x - y) / h - z).collect())
            .collect();
        rows.push(QuotientRow { h, remainder: Some(trajectory_sup_norm(&rem, vol)), note: None });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.remainder.filter(|v| *v > 0.0).map(|v| (r.h.ln(), v.ln()))).collect();
    let slope = crate::experiments::fit_slope(&pts);
    Ok(QuotientTable { rows, derivative_norm, slope })
}
