use crate::fields::CoefficientField;
use crate::linalg::{block_inverse, block_is_symmetric, sym_eigenvalues, CellMatrices};
use crate::{Error, Result};

/// Block-diagonal symmetric positive definite operator `A`, with cached
/// per-cell inverses.
#[derive(Clone, Debug)]
pub struct MassOperator {
    blocks: CellMatrices,
    inverse: CellMatrices,
    cell_volume: f64,
    spectrum: (f64, f64),
}

/// Assembles `A` from the `a` part of a coefficient field.
pub fn assemble_mass(field: &CoefficientField) -> Result<MassOperator> {
    MassOperator::from_blocks(field.a().clone(), field.grid().cell_volume())
}

impl MassOperator {
    pub fn from_blocks(blocks: CellMatrices, cell_volume: f64) -> Result<Self> {
        let k = blocks.k();
        let mut inv = Vec::with_capacity(blocks.as_slice().len());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for cell in 0..blocks.n_cells() {
            let m = blocks.block(cell);
            if !block_is_symmetric(k, m, 1e-12) {
                return Err(Error::InvalidCoefficient { cell, reason: "mass block is not symmetric".into() });
            }
            let ev = sym_eigenvalues(k, m);
            if !(ev[0] > 0.0) {
                return Err(Error::InvalidCoefficient {
                    cell,
                    reason: format!("mass block is not positive definite (smallest eigenvalue {:e})", ev[0]),
                });
            }
            lo = lo.min(ev[0]);
            hi = hi.max(ev[k - 1]);
            let bi = block_inverse(k, m)
                .ok_or_else(|| Error::InvalidCoefficient { cell, reason: "mass block is singular".into() })?;
            inv.extend_from_slice(&bi);
        }
        let inverse = CellMatrices::from_vec(k, inv)?;
        Ok(Self { blocks, inverse, cell_volume, spectrum: (lo, hi) })
    }

    pub fn k(&self) -> usize {
        self.blocks.k()
    }

    pub fn blocks(&self) -> &CellMatrices {
        &self.blocks
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Smallest and largest eigenvalue over all cells.
    pub fn spectrum(&self) -> (f64, f64) {
        self.spectrum
    }

    pub fn state_len(&self) -> usize {
        self.blocks.n_cells() * self.k()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.blocks.apply(x, y);
    }

    /// `x = A⁻¹ b`
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        self.inverse.apply(b, x);
    }
}

/// `E = ½ ⟨u, A u⟩` in the cell-volume weighted inner product.
pub fn energy(mass: &MassOperator, u: &[f64]) -> Result<f64> {
    if u.len() != mass.state_len() {
        return Err(Error::DimensionMismatch { expected: mass.state_len(), got: u.len() });
    }
    let k = mass.k();
    let mut acc = 0.0;
    for cell in 0..mass.blocks.n_cells() {
        let m = mass.blocks.block(cell);
        let x = &u[cell * k..(cell + 1) * k];
        for r in 0..k {
            let row: f64 = (0..k).map(|c| m[r * k + c] * x[c]).sum();
            acc += x[r] * row;
        }
    }
    Ok(0.5 * mass.cell_volume * acc)
}
