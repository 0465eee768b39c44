use super::coefficient::CoefficientField;
use super::grid::Grid;
use super::kernel::{MemoryKernel, PronyTerm, TabulatedKernel};
use crate::linalg::CellMatrices;
use crate::{Error, Result};

/// Discrete hat weights `(H − |i|)/H²` for offsets `i = −(H−1)..=H−1`; unit sum.
pub fn hat_weights(half_width: usize) -> Vec<f64> {
    let h = half_width.max(1) as i64;
    let norm = (h * h) as f64;
    (-(h - 1)..=(h - 1)).map(|i| (h - i.abs()) as f64 / norm).collect()
}

/// Convolves per-cell data (`stride` values per cell) with a tensor hat of
/// half-width `⌈N_axis / n⌉` cells. Indices past the box are clamped to the
/// nearest boundary cell.
pub fn mollify_values(grid: &Grid, n: usize, values: &[f64], stride: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    let cells = grid.cells();
    for axis in 0..grid.dim() {
        let len = cells[axis];
        let half = len.div_ceil(n);
        if half <= 1 {
            continue;
        }
        let w = hat_weights(half);
        let reach = half as i64 - 1;
        // distance in linear index between neighbours along `axis`
        let step: usize = cells[axis + 1..].iter().product();
        let mut next = vec![0.0; cur.len()];
        for cell in 0..grid.n_cells() {
            let i = (cell / step) % len;
            let base = cell - i * step;
            let out = &mut next[cell * stride..(cell + 1) * stride];
            for (o, wi) in (-reach..=reach).zip(&w) {
                let j = (i as i64 + o).clamp(0, len as i64 - 1) as usize;
                let src = base + j * step;
                for (dst, v) in out.iter_mut().zip(&cur[src * stride..(src + 1) * stride]) {
                    *dst += wi * v;
                }
            }
        }
        cur = next;
    }
    cur
}

fn mollify_matrices(grid: &Grid, n: usize, m: &CellMatrices) -> CellMatrices {
    let k = m.k();
    let data = mollify_values(grid, n, m.as_slice(), k * k);
    CellMatrices::from_vec(k, data).expect("shape preserved")
}

/// Spatially mollified copy of a coefficient field. `a`, `b` and the per-cell
/// kernel weights are all averaged with the same nonnegative unit-mass bump,
/// so symmetry and every bound carry over.
pub fn mollify_field(field: &CoefficientField, n: usize) -> Result<CoefficientField> {
    if n == 0 {
        return Err(Error::invalid("mollification index n must be at least 1"));
    }
    let grid = field.grid();
    let a = mollify_matrices(grid, n, field.a());
    let b = mollify_matrices(grid, n, field.b());
    let q = match field.q() {
        MemoryKernel::Zero => MemoryKernel::Zero,
        MemoryKernel::Prony(terms) => MemoryKernel::Prony(
            terms
                .iter()
                .map(|t| PronyTerm { tau: t.tau, weights: mollify_matrices(grid, n, &t.weights) })
                .collect(),
        ),
        MemoryKernel::Tabulated(tab) => MemoryKernel::Tabulated(TabulatedKernel {
            dt: tab.dt,
            samples: tab.samples.iter().map(|s| mollify_matrices(grid, n, s)).collect(),
        }),
    };
    field.replace(a, b, q)
}
