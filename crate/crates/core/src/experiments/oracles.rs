use std::sync::OnceLock;

use crate::fields::{CoefficientField, Grid, MemoryKernel, SourceTerm};
use crate::linalg::CellMatrices;
use crate::operators::{Boundary, DiscreteSystem};
use crate::{Error, Result};

use super::quadrature::integrate;

const ORACLE_TOL: f64 = 1e-13;

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth bump supported in `[−1, 1]` with unit integral.
pub fn bump(x: f64) -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    let mass = *MASS.get_or_init(|| integrate(raw_bump, -1.0, 1.0, 1e-15, 32));
    raw_bump(x) / mass
}

/// `c ∫_{onset}^t f(τ, x + c(t − τ)) dτ`, the causal solution of
/// `(1/c) u_t − u_x = f` on the line.
pub fn advection_oracle(c: f64, f: impl Fn(f64, f64) -> f64, onset: f64, t: f64, x: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::invalid("advection speed must be positive"));
    }
    if t <= onset {
        return Ok(0.0);
    }
    let panels = (((t - onset) * 200.0).ceil() as usize).max(16);
    Ok(c * integrate(|tau| f(tau, x + c * (t - tau)), onset, t, ORACLE_TOL, panels))
}

/// Homogeneous 1D acoustics `(1/κ) p_t + v_x = g`, `ρ v_t + p_x = f` on the
/// line, by integrating the forced characteristic variables `p ± Z v`.
/// Returns `(p, v)`.
pub fn acoustic_oracle(
    kappa: f64,
    rho: f64,
    g: impl Fn(f64, f64) -> f64,
    f: impl Fn(f64, f64) -> f64,
    onset: f64,
    t: f64,
    x: f64,
) -> Result<(f64, f64)> {
    if !(kappa > 0.0 && rho > 0.0) {
        return Err(Error::invalid("kappa and rho must be positive"));
    }
    if t <= onset {
        return Ok((0.0, 0.0));
    }
    let c = (kappa / rho).sqrt();
    let z = (kappa * rho).sqrt();
    let panels = (((t - onset) * 200.0).ceil() as usize).max(16);
    let plus = integrate(
        |tau| {
            let y = x - c * (t - tau);
            kappa * g(tau, y) + c * f(tau, y)
        },
        onset,
        t,
        ORACLE_TOL,
        panels,
    );
    let minus = integrate(
        |tau| {
            let y = x + c * (t - tau);
            kappa * g(tau, y) - c * f(tau, y)
        },
        onset,
        t,
        ORACLE_TOL,
        panels,
    );
    Ok((0.5 * (plus + minus), 0.5 * (plus - minus) / z))
}

/// Scalar advection `(1/c) u_t − u_x = f` on a periodic grid.
pub fn advection_system(grid: &Grid, c: f64) -> Result<DiscreteSystem> {
    if grid.dim() != 1 {
        return Err(Error::invalid("advection system is one-dimensional"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid("advection speed must be positive"));
    }
    let n = grid.n_cells();
    let field = CoefficientField::with_inferred_bounds(
        grid.clone(),
        1,
        CellMatrices::diagonal(n, 1, |_, _| 1.0 / c),
        CellMatrices::zeros(n, 1),
        MemoryKernel::Zero,
    )?;
    DiscreteSystem::new(field, &[vec![-1.0]], Boundary::Periodic)
}

/// `f_ε(t, x) = cos((x + t)/ε) χ(x + t) χ(x)` sampled on cell centres, with
/// time shifted by `shift` so that a solve from `t = 0` covers its support.
pub fn oscillatory_source(grid: &Grid, eps: f64, shift: f64) -> SourceTerm {
    let xs: Vec<f64> = (0..grid.n_cells()).map(|c| grid.center(c)[0]).collect();
    SourceTerm::from_fn(grid.n_cells(), 0.0, u32::MAX, move |s, out| {
        let t = s - shift;
        for (o, &x) in out.iter_mut().zip(&xs) {
            *o = ((x + t) / eps).cos() * bump(x + t) * bump(x);
        }
    })
}
