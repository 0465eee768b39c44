use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::kernel::MemoryKernel;
use crate::linalg::{block_is_symmetric, op_norm, sym_eigenvalues, CellMatrices};
use crate::{Error, Result};

/// Admissible-set constants: `C_* ≤ a ≤ C^*`, `‖b‖ ≤ C_B`, `‖q‖_{L¹} ≤ C_Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub c_lower: f64,
    pub c_upper: f64,
    pub c_b: f64,
    pub c_q: f64,
}

impl Bounds {
    pub fn new(c_lower: f64, c_upper: f64, c_b: f64, c_q: f64) -> Result<Self> {
        if !(c_lower > 0.0) || !(c_upper >= c_lower) || !(c_b >= 0.0) || !(c_q >= 0.0) {
            return Err(Error::invalid(format!(
                "bounds need 0 < C_* <= C^* and C_B, C_Q >= 0, got ({c_lower}, {c_upper}, {c_b}, {c_q})"
            )));
        }
        Ok(Self { c_lower, c_upper, c_b, c_q })
    }
}

const SPECTRAL_SLACK: f64 = 1e-12;

/// Per-cell coefficients `a`, `b` and memory kernel `q` of a symmetric
/// hyperbolic system, together with the bounds they are certified against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    grid: Grid,
    k: usize,
    a: CellMatrices,
    b: CellMatrices,
    q: MemoryKernel,
    bounds: Bounds,
}

impl CoefficientField {
    /// Validates every invariant and names the first offending cell.
    pub fn new(grid: Grid, k: usize, a: CellMatrices, b: CellMatrices, q: MemoryKernel, bounds: Bounds) -> Result<Self> {
        let field = Self { grid, k, a, b, q, bounds };
        field.validate()?;
        Ok(field)
    }

    /// Like [`CoefficientField::new`] with the tightest bounds the data satisfies.
    pub fn with_inferred_bounds(grid: Grid, k: usize, a: CellMatrices, b: CellMatrices, q: MemoryKernel) -> Result<Self> {
        check_shape(&grid, k, &a, "a")?;
        check_shape(&grid, k, &b, "b")?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for cell in 0..grid.n_cells() {
            let ev = sym_eigenvalues(k, a.block(cell));
            lo = lo.min(ev[0]);
            hi = hi.max(ev[k - 1]);
        }
        if !(lo > 0.0) {
            let cell = (0..grid.n_cells()).find(|&c| sym_eigenvalues(k, a.block(c))[0] <= 0.0).unwrap_or(0);
            return Err(Error::InvalidCoefficient { cell, reason: "a is not positive definite".into() });
        }
        q.validate(grid.n_cells(), k)?;
        let bounds = Bounds::new(lo, hi, b.max_op_norm(), q.l1_bound())?;
        Self::new(grid, k, a, b, q, bounds)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, n) = (self.k, self.grid.n_cells());
        check_shape(&self.grid, k, &self.a, "a")?;
        check_shape(&self.grid, k, &self.b, "b")?;
        let Bounds { c_lower, c_upper, c_b, c_q } = self.bounds;
        for cell in 0..n {
            let a = self.a.block(cell);
            if a.iter().any(|v| !v.is_finite()) || self.b.block(cell).iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidCoefficient { cell, reason: "non-finite entry".into() });
            }
            if !block_is_symmetric(k, a, 1e-12) {
                return Err(Error::InvalidCoefficient { cell, reason: "a is not symmetric".into() });
            }
            let ev = sym_eigenvalues(k, a);
            let slack = SPECTRAL_SLACK * c_upper;
            if ev[0] < c_lower - slack || ev[k - 1] > c_upper + slack {
                return Err(Error::InvalidCoefficient {
                    cell,
                    reason: format!(
                        "eigenvalues of a in [{:.6e}, {:.6e}] leave [{c_lower:.6e}, {c_upper:.6e}]",
                        ev[0],
                        ev[k - 1]
                    ),
                });
            }
            let nb = op_norm(k, self.b.block(cell));
            if nb > c_b * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::InvalidCoefficient { cell, reason: format!("|b| = {nb:.6e} exceeds C_B = {c_b:.6e}") });
            }
        }
        self.q.validate(n, k)?;
        let lq = self.q.l1_bound();
        if lq > c_q * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::invalid(format!("kernel L1 bound {lq:.6e} exceeds C_Q = {c_q:.6e}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a(&self) -> &CellMatrices {
        &self.a
    }

    pub fn b(&self) -> &CellMatrices {
        &self.b
    }

    pub fn q(&self) -> &MemoryKernel {
        &self.q
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Same coefficients on a grid with a different time axis.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        self.grid.check_same_space(&grid)?;
        let mut out = self.clone();
        out.grid = grid;
        Ok(out)
    }

    pub fn with_bounds(&self, bounds: Bounds) -> Result<Self> {
        Self::new(self.grid.clone(), self.k, self.a.clone(), self.b.clone(), self.q.clone(), bounds)
    }

    /// `(a + h δa, b + h δb, q + h δq)`, checked against the current bounds.
    pub fn perturbed(&self, h: f64, da: &CellMatrices, db: &CellMatrices, dq: &MemoryKernel) -> Result<Self> {
        check_shape(&self.grid, self.k, da, "da")?;
        check_shape(&self.grid, self.k, db, "db")?;
        let a = self.a.add_scaled(h, da);
        let b = self.b.add_scaled(h, db);
        let q = self.q.add_scaled(h, dq)?;
        Self::new(self.grid.clone(), self.k, a, b, q, self.bounds)
    }

    /// Replaces the per-cell data without touching bounds.
    pub(crate) fn replace(&self, a: CellMatrices, b: CellMatrices, q: MemoryKernel) -> Result<Self> {
        Self::new(self.grid.clone(), self.k, a, b, q, self.bounds)
    }
}

fn check_shape(grid: &Grid, k: usize, m: &CellMatrices, name: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("state width k must be positive"));
    }
    if m.k() != k || m.n_cells() != grid.n_cells() {
        return Err(Error::GridMismatch(format!(
            "{name}: expected {} cells of {k}x{k}, got {} cells of {}x{}",
            grid.n_cells(),
            m.n_cells(),
            m.k(),
            m.k()
        )));
    }
    Ok(())
}
