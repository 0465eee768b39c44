use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform tensor-product grid of cells over a box, plus the time axis.
///
/// Cells are ordered row-major with axis 0 slowest. Nodes of the
/// discretization are cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    cells: Vec<usize>,
    h: Vec<f64>,
    origin: Vec<f64>,
    dt: f64,
    n_steps: usize,
}

/// Builds a grid with `cell_size = extent / cells` and `n_steps = ceil(t_end / dt)`.
///
/// `extent` may hold one value for every axis or a single value broadcast to
/// all axes.
pub fn build_grid(dim: usize, cells_per_axis: &[usize], extent: &[f64], dt: f64, t_end: f64) -> Result<Grid> {
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if cells_per_axis.len() != dim {
        return Err(Error::invalid(format!("expected {dim} cell counts, got {}", cells_per_axis.len())));
    }
    let extent: Vec<f64> = match extent.len() {
        1 => vec![extent[0]; dim],
        n if n == dim => extent.to_vec(),
        n => return Err(Error::invalid(format!("expected 1 or {dim} extents, got {n}"))),
    };
    if let Some(n) = cells_per_axis.iter().find(|&&n| n < 2) {
        return Err(Error::invalid(format!("every axis needs at least 2 cells, got {n}")));
    }
    if extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid("extents must be positive"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
    }
    let ratio = t_end / dt;
    // absorb round-off in t_end/dt before taking the ceiling
    let n_steps = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize;
    let h = extent.iter().zip(cells_per_axis).map(|(e, &n)| e / n as f64).collect();
    Ok(Grid { cells: cells_per_axis.to_vec(), h, origin: vec![0.0; dim], dt, n_steps })
}

impl Grid {
    pub fn with_origin(mut self, origin: &[f64]) -> Result<Self> {
        if origin.len() != self.dim() {
            return Err(Error::invalid("origin length must equal the dimension"));
        }
        self.origin = origin.to_vec();
        Ok(self)
    }

    /// Same space grid, new time axis.
    pub fn with_time(&self, dt: f64, t_end: f64) -> Result<Self> {
        let extent = self.extent();
        let g = build_grid(self.dim(), &self.cells, &extent, dt, t_end)?;
        g.with_origin(&self.origin)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> Vec<f64> {
        self.h.iter().zip(&self.cells).map(|(h, &n)| h * n as f64).collect()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.dt * n as f64
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn state_len(&self, k: usize) -> usize {
        k * self.n_cells()
    }

    /// Linear index from per-axis indices.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.cells).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Per-axis indices from a linear index.
    pub fn multi_index(&self, mut cell: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = cell % self.cells[axis];
            cell /= self.cells[axis];
        }
        out
    }

    /// Cell-center coordinates.
    pub fn center(&self, cell: usize) -> Vec<f64> {
        self.multi_index(cell)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.origin[axis] + (i as f64 + 0.5) * self.h[axis])
            .collect()
    }

    /// Index of the cell containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let rel = (x[axis] - self.origin[axis]) / self.h[axis];
            if rel < 0.0 || rel > self.cells[axis] as f64 {
                return None;
            }
            idx.push((rel.floor() as usize).min(self.cells[axis] - 1));
        }
        Some(self.linear_index(&idx))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.locate(x).is_some()
    }

    /// True when both grids share cells, spacing and origin (time axis ignored).
    pub fn same_space(&self, other: &Grid) -> bool {
        self.cells == other.cells
            && self.origin == other.origin
            && self.h.iter().zip(&other.h).all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()))
    }

    pub(crate) fn check_same_space(&self, other: &Grid) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?} cells", self.cells, other.cells)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_grid() {
        let g = build_grid(1, &[100], &[1.0], 1e-3, 1.0).unwrap();
        assert_eq!(g.n_cells(), 100);
        assert!((g.h()[0] - 0.01).abs() < 1e-15);
        assert_eq!(g.n_steps(), 1000);
    }

    #[test]
    fn two_dimensional_grid() {
        let g = build_grid(2, &[50, 50], &[1.0], 5e-4, 0.5).unwrap();
        assert_eq!(g.n_cells(), 2500);
        assert_eq!(g.n_steps(), 1000);
        assert_eq!(g.state_len(3), 7500);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(build_grid(1, &[0], &[1.0], 1e-3, 1.0), Err(Error::InvalidArgument(_))));
        assert!(build_grid(1, &[1], &[1.0], 1e-3, 1.0).is_err());
        assert!(build_grid(1, &[10], &[-1.0], 1e-3, 1.0).is_err());
        assert!(build_grid(1, &[10], &[1.0], 0.0, 1.0).is_err());
        assert!(build_grid(1, &[10], &[1.0], 1e-3, 0.0).is_err());
        assert!(build_grid(4, &[10; 4], &[1.0], 1e-3, 1.0).is_err());
    }

    #[test]
    fn index_round_trip_and_locate() {
        let g = build_grid(3, &[3, 4, 5], &[3.0, 4.0, 5.0], 0.1, 1.0).unwrap();
        for cell in 0..g.n_cells() {
            let idx = g.multi_index(cell);
            assert_eq!(g.linear_index(&idx), cell);
            assert_eq!(g.locate(&g.center(cell)), Some(cell));
        }
        assert_eq!(g.locate(&[-0.1, 0.0, 0.0]), None);
    }
}
