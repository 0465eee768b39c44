use serde::{Deserialize, Serialize};

use crate::fields::{CoefficientField, Grid, MemoryKernel};
use crate::linalg::CellMatrices;
use crate::operators::{Boundary, DiscreteSystem};
use crate::{Error, Result};

/// Per-cell density and bulk modulus with the scales and bounds of the
/// admissible acoustic set: `C_* ≤ s_κ κ ≤ C^*` and `C_* ≤ s_ρ ρ ≤ C^*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticModel {
    pub kappa: Vec<f64>,
    pub rho: Vec<f64>,
    pub s_kappa: f64,
    pub s_rho: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

/// Symbols of the pressure/velocity system, `p_j = e₀e_{j}ᵀ + e_{j}e₀ᵀ`,
/// i.e. `p_t/κ + ∇·v` and `ρ v_t + ∇p`.
pub fn acoustic_symbols(dim: usize) -> Vec<Vec<f64>> {
    let k = dim + 1;
    (0..dim)
        .map(|j| {
            let mut p = vec![0.0; k * k];
            p[j + 1] = 1.0;
            p[(j + 1) * k] = 1.0;
            p
        })
        .collect()
}

impl AcousticModel {
    /// Unit scales, bounds taken as the tightest ones the data satisfy.
    pub fn new(kappa: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let lo = kappa.iter().chain(&rho).copied().fold(f64::INFINITY, f64::min);
        let hi = kappa.iter().chain(&rho).copied().fold(f64::NEG_INFINITY, f64::max);
        let m = Self { kappa, rho, s_kappa: 1.0, s_rho: 1.0, c_lower: lo, c_upper: hi };
        m.validate()?;
        Ok(m)
    }

    pub fn homogeneous(n_cells: usize, kappa: f64, rho: f64) -> Result<Self> {
        Self::new(vec![kappa; n_cells], vec![rho; n_cells])
    }

    /// Piecewise-constant along axis 0: `(κ, ρ)` per layer, the layer of a
    /// cell picked by its center coordinate against the interface list.
    pub fn layered(grid: &Grid, interfaces: &[f64], layers: &[(f64, f64)]) -> Result<Self> {
        if layers.len() != interfaces.len() + 1 {
            return Err(Error::invalid("need one more layer than interfaces"));
        }
        let (mut kappa, mut rho) = (Vec::new(), Vec::new());
        for cell in 0..grid.n_cells() {
            let x = grid.center(cell)[0];
            let layer = interfaces.iter().filter(|&&z| x >= z).count();
            kappa.push(layers[layer].0);
            rho.push(layers[layer].1);
        }
        Self::new(kappa, rho)
    }

    pub fn n_cells(&self) -> usize {
        self.kappa.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa.len() != self.rho.len() {
            return Err(Error::DimensionMismatch { expected: self.kappa.len(), got: self.rho.len() });
        }
        if !(self.s_kappa > 0.0 && self.s_rho > 0.0 && self.c_lower > 0.0 && self.c_upper >= self.c_lower) {
            return Err(Error::invalid("scales must be positive and 0 < C_* <= C^*"));
        }
        let tol = 1e-12 * self.c_upper;
        for (cell, (&k, &r)) in self.kappa.iter().zip(&self.rho).enumerate() {
            if !(k > 0.0 && r > 0.0 && k.is_finite() && r.is_finite()) {
                return Err(Error::InvalidModel { cell, reason: format!("kappa = {k}, rho = {r} must be positive") });
            }
            for (name, v) in [("s_kappa * kappa", self.s_kappa * k), ("s_rho * rho", self.s_rho * r)] {
                if v < self.c_lower - tol || v > self.c_upper + tol {
                    return Err(Error::InvalidModel {
                        cell,
                        reason: format!("{name} = {v} outside [{}, {}]", self.c_lower, self.c_upper),
                    });
                }
            }
        }
        Ok(())
    }

    /// `max √(κ/ρ)`
    pub fn max_wavespeed(&self) -> f64 {
        self.kappa.iter().zip(&self.rho).map(|(k, r)| (k / r).sqrt()).fold(0.0, f64::max)
    }

    /// `a = diag(1/κ, ρ, …, ρ)` per cell.
    pub fn mass_blocks(&self, dim: usize) -> CellMatrices {
        CellMatrices::diagonal(self.n_cells(), dim + 1, |cell, r| if r == 0 { 1.0 / self.kappa[cell] } else { self.rho[cell] })
    }

    /// Coefficient field with `b = 0`, `q = 0`.
    pub fn field(&self, grid: &Grid) -> Result<CoefficientField> {
        self.validate()?;
        if grid.n_cells() != self.n_cells() {
            return Err(Error::GridMismatch(format!("model has {} cells, grid {}", self.n_cells(), grid.n_cells())));
        }
        let k = grid.dim() + 1;
        CoefficientField::with_inferred_bounds(
            grid.clone(),
            k,
            self.mass_blocks(grid.dim()),
            CellMatrices::zeros(grid.n_cells(), k),
            MemoryKernel::Zero,
        )
    }
}

/// `k = d + 1` pressure/velocity system of the acoustic model.
pub fn acoustics_system(model: &AcousticModel, grid: &Grid, boundary: Boundary) -> Result<DiscreteSystem> {
    let field = model.field(grid)?;
    DiscreteSystem::new(field, &acoustic_symbols(grid.dim()), boundary)
}
