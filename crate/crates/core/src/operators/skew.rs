use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fields::Grid;
use crate::linalg::{block_is_symmetric, norm, CsrMatrix};
use crate::{Error, Result};

/// Boundary closure of the spatial operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    /// Mirror ghost cells: components of odd parity (pressure, stress) are
    /// reflected with a sign flip, the others unchanged.
    AcousticFree,
}

/// Centered-difference discretization of `p(∇) = Σ_j p_j ∂/∂x_j`.
///
/// The assembled matrix is exactly antisymmetric entry by entry.
#[derive(Clone, Debug)]
pub struct SkewOperator {
    k: usize,
    symbols: Vec<Vec<f64>>,
    boundary: Boundary,
    parity: Vec<f64>,
    matrix: CsrMatrix,
    cell_volume: f64,
}

/// Ghost-cell parity per component for the mirror closure.
///
/// Any two components coupled by some `p_j` must have opposite parity;
/// component 0 is odd. Fails if the coupling graph is not bipartite.
pub fn mirror_parity(k: usize, symbols: &[Vec<f64>]) -> Result<Vec<f64>> {
    let coupled = |r: usize, c: usize| symbols.iter().any(|p| p[r * k + c] != 0.0);
    for r in 0..k {
        if coupled(r, r) {
            return Err(Error::Unsupported(format!(
                "mirror closure needs zero diagonal symbols; component {r} couples to itself"
            )));
        }
    }
    let mut parity = vec![0.0; k];
    for start in 0..k {
        if parity[start] != 0.0 {
            continue;
        }
        parity[start] = -1.0;
        let mut stack = vec![start];
        while let Some(r) = stack.pop() {
            for c in 0..k {
                if coupled(r, c) {
                    if parity[c] == 0.0 {
                        parity[c] = -parity[r];
                        stack.push(c);
                    } else if parity[c] == parity[r] {
                        return Err(Error::Unsupported(format!(
                            "mirror closure: components {r} and {c} cannot take opposite parities"
                        )));
                    }
                }
            }
        }
    }
    // isolated components carry no boundary coupling; keep them even
    for r in 0..k {
        if r > 0 && !(0..k).any(|c| coupled(r, c)) {
            parity[r] = 1.0;
        }
    }
    Ok(parity)
}

/// Assembles `P` from per-axis symbol matrices (row-major `k×k`, one per axis).
pub fn assemble_skew(symbols: &[Vec<f64>], k: usize, grid: &Grid, boundary: Boundary) -> Result<SkewOperator> {
    let dim = grid.dim();
    if symbols.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: symbols.len() });
    }
    for (j, p) in symbols.iter().enumerate() {
        if p.len() != k * k {
            return Err(Error::invalid(format!("symbol p_{} must hold {k}x{k} entries", j + 1)));
        }
        if !block_is_symmetric(k, p, 0.0) {
            return Err(Error::invalid(format!("symbol p_{} is not symmetric", j + 1)));
        }
    }
    let parity = match boundary {
        Boundary::Periodic => vec![1.0; k],
        Boundary::AcousticFree => mirror_parity(k, symbols)?,
    };
    let cells = grid.cells();
    let n = grid.n_cells();
    let mut triplets = Vec::new();
    for cell in 0..n {
        let idx = grid.multi_index(cell);
        for axis in 0..dim {
            let p = &symbols[axis];
            let inv2h = 0.5 / grid.h()[axis];
            let len = cells[axis];
            let step: usize = cells[axis + 1..].iter().product();
            let i = idx[axis];
            let base = cell - i * step;
            for (dir, sign) in [(1i64, 1.0), (-1i64, -1.0)] {
                let j = i as i64 + dir;
                // neighbour cell and ghost parity factor per column component
                let (nb, ghost) = if (0..len as i64).contains(&j) {
                    (base + j as usize * step, false)
                } else {
                    match boundary {
                        Boundary::Periodic => (base + j.rem_euclid(len as i64) as usize * step, false),
                        Boundary::AcousticFree => (cell, true),
                    }
                };
                for r in 0..k {
                    for c in 0..k {
                        let v = p[r * k + c];
                        if v == 0.0 {
                            continue;
                        }
                        let f = if ghost { parity[c] } else { 1.0 };
                        triplets.push((cell * k + r, nb * k + c, sign * f * v * inv2h));
                    }
                }
            }
        }
    }
    let size = n * k;
    let matrix = CsrMatrix::from_triplets(size, size, triplets);
    Ok(SkewOperator { k, symbols: symbols.to_vec(), boundary, parity, matrix, cell_volume: grid.cell_volume() })
}

impl SkewOperator {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn symbols(&self) -> &[Vec<f64>] {
        &self.symbols
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Ghost parity per component (all `+1` for periodic closures).
    pub fn parity(&self) -> &[f64] {
        &self.parity
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y);
    }

    /// `y += alpha P x`
    pub fn apply_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec_add(alpha, x, y);
    }

    /// `−P`, which equals `Pᵀ`.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.matrix = self.matrix.scaled(-1.0);
        out.symbols = self.symbols.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
        out
    }

    /// Discrete graph norm `‖u‖ + ‖Pu‖` in the volume-weighted inner product.
    pub fn graph_norm(&self, u: &[f64]) -> f64 {
        let mut pu = vec![0.0; u.len()];
        self.apply(u, &mut pu);
        self.cell_volume.sqrt() * (norm(u) + norm(&pu))
    }

    /// Coordinate text export: one `row col value` line per stored entry.
    pub fn to_coo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "% {} {} {}", self.matrix.n_rows(), self.matrix.n_cols(), self.matrix.nnz());
        for (r, c, v) in self.matrix.triplets() {
            let _ = writeln!(out, "{r} {c} {v:.17e}");
        }
        out
    }
}
