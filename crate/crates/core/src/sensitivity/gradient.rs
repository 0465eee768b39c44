use serde::{Deserialize, Serialize};

use crate::evolution::{IntegratorConfig, Trajectory};
use crate::fields::{MemoryKernel, SourceTerm};
use crate::forward::{forward_map_with_trajectory, Sampler, SeismogramData};
use crate::linalg::CellMatrices;
use crate::operators::{prony_advance, DiscreteSystem};
use crate::{Error, Result};

use super::adjoint::{adjoint_solve, AdjointState};
use super::derivative::CoefficientPerturbation;
use super::study::FdRow;

/// Kernel part of a gradient: one per-cell block per Prony weight or per
/// tabulated sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum KernelGradient {
    None,
    Prony(Vec<CellMatrices>),
    Tabulated(Vec<CellMatrices>),
}

/// Derivative representer: `⟨δ, g⟩ = g_a : δa + g_b : δb + g_q : δq`, summed
/// over cells with the Frobenius product. Not a steepest-ascent direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub g_a: CellMatrices,
    pub g_b: CellMatrices,
    pub g_q: KernelGradient,
    pub objective: f64,
    pub dot_residual: Option<f64>,
    pub fd_table: Vec<FdRow>,
}

impl GradientReport {
    pub fn pairing(&self, pert: &CoefficientPerturbation) -> Result<f64> {
        let mut s = self.g_a.frobenius_dot(&pert.da) + self.g_b.frobenius_dot(&pert.db);
        match (&self.g_q, &pert.dq) {
            (_, MemoryKernel::Zero) => {}
            (KernelGradient::Prony(g), MemoryKernel::Prony(terms)) if g.len() == terms.len() => {
                s += g.iter().zip(terms).map(|(gj, t)| gj.frobenius_dot(&t.weights)).sum::<f64>();
            }
            (KernelGradient::Tabulated(g), MemoryKernel::Tabulated(tab)) => {
                if tab.samples.len() > g.len() {
                    return Err(Error::InvalidArgument(format!(
                        "kernel perturbation has {} samples, gradient covers {}",
                        tab.samples.len(),
                        g.len()
                    )));
                }
                s += g.iter().zip(&tab.samples).map(|(gl, q)| gl.frobenius_dot(q)).sum::<f64>();
            }
            _ => return Err(Error::invalid("kernel perturbation does not match the gradient's representation")),
        }
        Ok(s)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = self.g_a.as_slice().iter().chain(self.g_b.as_slice()).fold(0.0f64, |m, v| m.max(v.abs()));
        if let KernelGradient::Prony(g) | KernelGradient::Tabulated(g) = &self.g_q {
            for b in g {
                m = b.as_slice().iter().fold(m, |m, v| m.max(v.abs()));
            }
        }
        m
    }
}

/// `J = ½ Σₙ dt |Fⁿ − dⁿ|²`.
pub fn objective(predicted: &SeismogramData, observed: &SeismogramData) -> Result<f64> {
    let r = predicted.add_scaled(-1.0, observed)?;
    Ok(0.5 * r.inner(&r)?)
}

fn add_sym_outer(k: usize, block: &mut [f64], scale: f64, y: &[f64], x: &[f64]) {
    for r in 0..k {
        for c in 0..k {
            block[r * k + c] += 0.5 * scale * (y[r] * x[c] + y[c] * x[r]);
        }
    }
}

fn add_outer(k: usize, block: &mut [f64], scale: f64, y: &[f64], x: &[f64]) {
    for r in 0..k {
        for c in 0..k {
            block[r * k + c] += scale * y[r] * x[c];
        }
    }
}

/// Contracts a dense forward trajectory with adjoint multipliers.
pub fn assemble_gradient(u: &Trajectory, adjoint: &AdjointState, system: &DiscreteSystem) -> Result<GradientReport> {
    let states = u.states()?;
    let n_steps = states.len() - 1;
    if adjoint.n_steps() != n_steps || u.k() != system.k() {
        return Err(Error::GridMismatch("forward and adjoint trajectories are misaligned".into()));
    }
    let k = system.k();
    let n_cells = system.grid().n_cells();
    let dt = system.grid().dt();
    let mut g_a = CellMatrices::zeros(n_cells, k);
    let mut g_b = CellMatrices::zeros(n_cells, k);
    let mut diff = vec![0.0; k];
    let mut sum = vec![0.0; k];
    for j in 1..=n_steps {
        let lam = adjoint.lambda(j);
        for cell in 0..n_cells {
            let rng = cell * k..(cell + 1) * k;
            let (uj, up) = (&states[j][rng.clone()], &states[j - 1][rng.clone()]);
            for i in 0..k {
                diff[i] = uj[i] - up[i];
                sum[i] = uj[i] + up[i];
            }
            add_sym_outer(k, g_a.block_mut(cell), -1.0, &lam[rng.clone()], &diff);
            add_outer(k, g_b.block_mut(cell), -0.5 * dt, &lam[rng], &sum);
        }
    }

    let mu: Vec<Vec<f64>> = (1..=n_steps)
        .map(|p| adjoint.lambda(p).iter().zip(adjoint.lambda(p + 1)).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect();
    let g_q = match system.memory().kernel() {
        MemoryKernel::Zero => KernelGradient::None,
        MemoryKernel::Prony(_) => {
            let steps = system.memory().prony_steps();
            let mut out = Vec::with_capacity(steps.len());
            for st in steps {
                let mut g = CellMatrices::zeros(n_cells, k);
                let mut aux = vec![vec![0.0; states[0].len()]];
                for p in 1..=n_steps {
                    prony_advance(&mut aux, std::slice::from_ref(st), &states[p - 1], &states[p]);
                    for cell in 0..n_cells {
                        let rng = cell * k..(cell + 1) * k;
                        add_sym_outer(k, g.block_mut(cell), -dt, &mu[p - 1][rng.clone()], &aux[0][rng]);
                    }
                }
                out.push(g);
            }
            KernelGradient::Prony(out)
        }
        MemoryKernel::Tabulated(tab) => {
            let mut out = Vec::with_capacity(tab.samples.len());
            for l in 0..tab.samples.len() {
                let omega = if l == 0 { 0.5 * dt } else { dt };
                let mut g = CellMatrices::zeros(n_cells, k);
                for p in (l + 1).max(1)..=n_steps {
                    for cell in 0..n_cells {
                        let rng = cell * k..(cell + 1) * k;
                        add_sym_outer(k, g.block_mut(cell), -dt * omega, &mu[p - 1][rng.clone()], &states[p - l][rng]);
                    }
                }
                out.push(g);
            }
            KernelGradient::Tabulated(out)
        }
    };
    Ok(GradientReport { g_a, g_b, g_q, objective: 0.0, dot_residual: None, fd_table: Vec::new() })
}

/// Objective and its gradient for observed data `d`: forward solve, adjoint
/// solve driven by `F − d`, contraction.
pub fn gradient(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    observed: &SeismogramData,
    config: &IntegratorConfig,
) -> Result<GradientReport> {
    let (pred, traj) = forward_map_with_trajectory(system, source, sampler, config)?;
    let residual = pred.add_scaled(-1.0, observed)?;
    let j = 0.5 * residual.inner(&residual)?;
    let adj = adjoint_solve(system, &residual, sampler, config)?;
    let mut report = assemble_gradient(&traj, &adj, system)?;
    report.objective = j;
    Ok(report)
}
