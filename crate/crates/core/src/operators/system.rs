use super::mass::{assemble_mass, energy, MassOperator};
use super::memory::MemoryOperator;
use super::skew::{assemble_skew, Boundary, SkewOperator};
use crate::fields::{CoefficientField, Grid};
use crate::linalg::CellMatrices;
use crate::{Error, Result};

/// Assembled `A u' + P u + B u + R[u] = f` on one grid.
#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    field: CoefficientField,
    mass: MassOperator,
    skew: SkewOperator,
    memory: MemoryOperator,
}

impl DiscreteSystem {
    pub fn new(field: CoefficientField, symbols: &[Vec<f64>], boundary: Boundary) -> Result<Self> {
        let skew = assemble_skew(symbols, field.k(), field.grid(), boundary)?;
        Self::from_parts(field, skew)
    }

    pub fn from_parts(field: CoefficientField, skew: SkewOperator) -> Result<Self> {
        if skew.k() != field.k() {
            return Err(Error::DimensionMismatch { expected: field.k(), got: skew.k() });
        }
        if skew.matrix().n_rows() != field.grid().state_len(field.k()) {
            return Err(Error::GridMismatch("spatial operator and coefficients live on different grids".into()));
        }
        let mass = assemble_mass(&field)?;
        let memory = MemoryOperator::new(field.q().clone(), field.grid(), field.k())?;
        Ok(Self { field, mass, skew, memory })
    }

    /// Same spatial operator, new coefficients on the same grid.
    pub fn with_field(&self, field: CoefficientField) -> Result<Self> {
        self.field.grid().check_same_space(field.grid())?;
        Self::from_parts(field, self.skew.clone())
    }

    /// Same system on a different time axis.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        Self::from_parts(self.field.with_grid(grid)?, self.skew.clone())
    }

    /// `(−P, Bᵀ)` with the same `A` and kernel: the system whose midpoint
    /// march, run in reversed time, is the transpose of this one's.
    pub fn transposed(&self) -> Result<Self> {
        let f = &self.field;
        let field = f.replace(f.a().clone(), f.b().transpose(), f.q().clone())?;
        Self::from_parts(field, self.skew.negated())
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn k(&self) -> usize {
        self.field.k()
    }

    pub fn state_len(&self) -> usize {
        self.grid().state_len(self.k())
    }

    pub fn mass(&self) -> &MassOperator {
        &self.mass
    }

    pub fn skew(&self) -> &SkewOperator {
        &self.skew
    }

    pub fn b(&self) -> &CellMatrices {
        self.field.b()
    }

    pub fn memory(&self) -> &MemoryOperator {
        &self.memory
    }

    pub fn has_b(&self) -> bool {
        !self.field.b().is_zero()
    }

    /// `y = (P + B) x`
    pub fn apply_spatial(&self, x: &[f64], y: &mut [f64]) {
        self.skew.apply(x, y);
        if self.has_b() {
            self.field.b().apply_add(1.0, x, y);
        }
    }

    /// Largest characteristic speed `max λ(a^{-1/2} p(ξ) a^{-1/2})` over cells
    /// and sampled directions.
    pub fn max_wavespeed(&self) -> f64 {
        super::speed::max_characteristic_speed(self.field.a(), self.skew.symbols())
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        energy(&self.mass, u)
    }
}
