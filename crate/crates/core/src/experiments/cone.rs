use serde::{Deserialize, Serialize};

use crate::evolution::Trajectory;
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

/// Backward cone `{(x, t) : t ≤ t₀ − τ |x − x₀|}` with slowness `τ` (time per
/// length). `margin` records the relative distance of `τ` from `1/c_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub apex: Vec<f64>,
    pub t0: f64,
    pub tau: f64,
    pub margin: f64,
}

impl ConeSpec {
    pub fn new(apex: Vec<f64>, t0: f64, tau: f64, margin: f64) -> Result<Self> {
        if !(tau > 0.0) || !(margin >= 0.0) {
            return Err(Error::invalid("cone needs slowness > 0 and margin >= 0"));
        }
        Ok(Self { apex, t0, tau, margin })
    }

    /// Cone with slowness `(1 + δ)/c_max` whose speed-`c_max` counterpart
    /// passes through the source point at its onset. No signal from the
    /// source can enter it.
    pub fn clear_of_source(source: &[f64], onset: f64, apex: Vec<f64>, c_max: f64, delta: f64) -> Result<Self> {
        let dist = distance(source, &apex);
        Self::new(apex, onset + dist / c_max, (1.0 + delta) / c_max, delta)
    }

    /// Same apex with slowness `1/((1 + δ) c_max)`: a cone wider than the
    /// signal speed allows, which reaches into the source's influence zone.
    pub fn intruding(&self, c_max: f64) -> Self {
        Self { tau: 1.0 / ((1.0 + self.margin) * c_max), ..self.clone() }
    }

    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        self.t0 - t - self.tau * distance(x, &self.apex) >= 0.0
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Share of the summed per-step energy `Σₙ Σ_cells ½ vol uᵀ a u` that lies in
/// the cone. A trajectory without energy has no leak.
pub fn cone_leak(trajectory: &Trajectory, cone: &ConeSpec, system: &DiscreteSystem) -> Result<f64> {
    let grid = system.grid();
    if cone.apex.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: cone.apex.len() });
    }
    let t_last = trajectory.time(trajectory.n_steps());
    if cone.t0 > t_last + 1e-12 {
        return Err(Error::invalid(format!("trajectory ends at {t_last}, before the cone apex time {}", cone.t0)));
    }
    let states = trajectory.states()?;
    let (k, vol) = (system.k(), grid.cell_volume());
    let a = system.field().a();
    let centers: Vec<Vec<f64>> = (0..grid.n_cells()).map(|c| grid.center(c)).collect();
    let mut inside = 0.0;
    let mut total = 0.0;
    let mut any = false;
    for (n, u) in states.iter().enumerate() {
        let t = trajectory.time(n);
        for (cell, x) in centers.iter().enumerate() {
            let uc = &u[cell * k..(cell + 1) * k];
            let blk = a.block(cell);
            let mut e = 0.0;
            for r in 0..k {
                for c in 0..k {
                    e += uc[r] * blk[r * k + c] * uc[c];
                }
            }
            e *= 0.5 * vol;
            total += e;
            if cone.contains(x, t) {
                any = true;
                inside += e;
            }
        }
    }
    if !any {
        return Err(Error::invalid("cone contains no grid point of the trajectory"));
    }
    Ok(if total == 0.0 { 0.0 } else { inside / total })
}
