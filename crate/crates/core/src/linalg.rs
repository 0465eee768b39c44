//! Small dense block algebra, a CSR matrix and restarted GMRES.
//!
//! Everything here works on flat `f64` slices. Per-cell `k×k` blocks are stored
//! row-major and contiguous, cells in grid order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = m x` for a row-major `k×k` block.
#[inline]
pub fn block_mul(k: usize, m: &[f64], x: &[f64], y: &mut [f64]) {
    for r in 0..k {
        let row = &m[r * k..(r + 1) * k];
        y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `y += m x`
#[inline]
pub fn block_mul_add(k: usize, m: &[f64], x: &[f64], y: &mut [f64]) {
    for r in 0..k {
        let row = &m[r * k..(r + 1) * k];
        y[r] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `y += mᵀ x`
#[inline]
pub fn block_mul_transpose_add(k: usize, m: &[f64], x: &[f64], y: &mut [f64]) {
    for r in 0..k {
        let xr = x[r];
        for c in 0..k {
            y[c] += m[r * k + c] * xr;
        }
    }
}

pub fn block_is_symmetric(k: usize, m: &[f64], tol: f64) -> bool {
    let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    (0..k).all(|r| (0..r).all(|c| (m[r * k + c] - m[c * k + r]).abs() <= tol * scale))
}

/// Eigenvalues of the symmetric part of a block, ascending.
pub fn sym_eigenvalues(k: usize, m: &[f64]) -> Vec<f64> {
    let mat = DMatrix::from_fn(k, k, |r, c| 0.5 * (m[r * k + c] + m[c * k + r]));
    let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Spectral norm (largest singular value) of a block.
pub fn op_norm(k: usize, m: &[f64]) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_row_slice(k, k, m);
    mat.singular_values().max()
}

pub fn block_inverse(k: usize, m: &[f64]) -> Option<Vec<f64>> {
    let mat = DMatrix::from_row_slice(k, k, m);
    let inv = mat.try_inverse()?;
    let mut out = vec![0.0; k * k];
    for r in 0..k {
        for c in 0..k {
            out[r * k + c] = inv[(r, c)];
        }
    }
    Some(out)
}

/// Per-cell `k×k` matrices, the discrete form of a bounded multiplication
/// operator with piecewise-constant values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMatrices {
    k: usize,
    data: Vec<f64>,
}

impl CellMatrices {
    pub fn zeros(n_cells: usize, k: usize) -> Self {
        Self { k, data: vec![0.0; n_cells * k * k] }
    }

    pub fn identity(n_cells: usize, k: usize) -> Self {
        Self::from_fn(n_cells, k, |_, r, c| if r == c { 1.0 } else { 0.0 })
    }

    /// Same block in every cell.
    pub fn uniform(n_cells: usize, k: usize, block: &[f64]) -> Self {
        assert_eq!(block.len(), k * k, "block must hold k*k entries");
        let mut data = Vec::with_capacity(n_cells * k * k);
        for _ in 0..n_cells {
            data.extend_from_slice(block);
        }
        Self { k, data }
    }

    /// Diagonal blocks from per-cell diagonal entries.
    pub fn diagonal(n_cells: usize, k: usize, diag: impl Fn(usize, usize) -> f64) -> Self {
        Self::from_fn(n_cells, k, |cell, r, c| if r == c { diag(cell, r) } else { 0.0 })
    }

    pub fn from_fn(n_cells: usize, k: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n_cells * k * k];
        for cell in 0..n_cells {
            for r in 0..k {
                for c in 0..k {
                    data[(cell * k + r) * k + c] = f(cell, r, c);
                }
            }
        }
        Self { k, data }
    }

    pub fn from_vec(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || !data.len().is_multiple_of(k * k) {
            return Err(Error::invalid(format!(
                "block data of length {} is not a multiple of k*k = {}",
                data.len(),
                k * k
            )));
        }
        Ok(Self { k, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_cells(&self) -> usize {
        self.data.len() / (self.k * self.k)
    }

    pub fn block(&self, cell: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[cell * kk..(cell + 1) * kk]
    }

    pub fn block_mut(&mut self, cell: usize) -> &mut [f64] {
        let kk = self.k * self.k;
        &mut self.data[cell * kk..(cell + 1) * kk]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = M x` cell by cell, `x` and `y` state vectors of length `n_cells * k`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let k = self.k;
        for cell in 0..self.n_cells() {
            block_mul(k, self.block(cell), &x[cell * k..(cell + 1) * k], &mut y[cell * k..(cell + 1) * k]);
        }
    }

    pub fn apply_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        let k = self.k;
        let mut tmp = vec![0.0; k];
        for cell in 0..self.n_cells() {
            block_mul(k, self.block(cell), &x[cell * k..(cell + 1) * k], &mut tmp);
            axpy(alpha, &tmp, &mut y[cell * k..(cell + 1) * k]);
        }
    }

    pub fn transpose(&self) -> Self {
        let k = self.k;
        let mut out = self.clone();
        for cell in 0..self.n_cells() {
            let src = self.block(cell);
            let dst = out.block_mut(cell);
            for r in 0..k {
                for c in 0..k {
                    dst[c * k + r] = src[r * k + c];
                }
            }
        }
        out
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &CellMatrices) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect();
        Self { k: self.k, data }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { k: self.k, data: self.data.iter().map(|v| alpha * v).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Frobenius pairing `Σ_cells tr(selfᵀ other)`.
    pub fn frobenius_dot(&self, other: &CellMatrices) -> f64 {
        dot(&self.data, &other.data)
    }

    /// Largest block spectral norm over cells.
    pub fn max_op_norm(&self) -> f64 {
        (0..self.n_cells()).map(|c| op_norm(self.k, self.block(c))).fold(0.0, f64::max)
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros left after summation are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n_rows, n_cols, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            *yr = acc;
        }
    }

    /// `y += alpha * A x`
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            *yr += alpha * acc;
        }
    }

    pub fn transpose_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate().take(self.n_rows) {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[idx]] += self.values[idx] * xr;
            }
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.col_idx[idx], self.values[idx]));
            }
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.n_cols, self.n_rows, t)
    }
}

/// Counters from a converged GMRES solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt (two passes).
///
/// Solves `A x = b` to `‖b − A x‖ ≤ tol ‖b‖`, measured on the true residual at
/// every restart. `x` holds the initial guess on entry. A zero right-hand side
/// returns `x = 0` exactly.
pub struct Gmres {
    restart: usize,
    basis: Vec<Vec<f64>>,
    hess: Vec<f64>,
    work: Vec<f64>,
    work2: Vec<f64>,
}

impl Gmres {
    pub fn new(n: usize, restart: usize) -> Self {
        let restart = restart.max(1);
        Self {
            restart,
            basis: vec![vec![0.0; n]; restart + 1],
            hess: vec![0.0; (restart + 1) * restart],
            work: vec![0.0; n],
            work2: vec![0.0; n],
        }
    }

    pub fn solve(
        &mut self,
        apply: impl Fn(&[f64], &mut [f64]),
        precond: impl Fn(&[f64], &mut [f64]),
        b: &[f64],
        x: &mut [f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<SolveStats> {
        let n = b.len();
        let m = self.restart;
        let bnorm = norm(b);
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats::default());
        }
        let mut total = 0usize;
        let mut g = vec![0.0; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut y = vec![0.0; m];
        loop {
            apply(x, &mut self.work);
            for i in 0..n {
                self.basis[0][i] = b[i] - self.work[i];
            }
            let beta = norm(&self.basis[0]);
            if beta <= tol * bnorm {
                return Ok(SolveStats { iterations: total, relative_residual: beta / bnorm });
            }
            if total >= max_iter {
                return Err(Error::Solver { iterations: total, residual: beta / bnorm });
            }
            self.basis[0].iter_mut().for_each(|v| *v /= beta);
            g.iter_mut().for_each(|v| *v = 0.0);
            g[0] = beta;
            let mut j = 0;
            while j < m && total < max_iter {
                precond(&self.basis[j], &mut self.work2);
                apply(&self.work2, &mut self.work);
                for _pass in 0..2 {
                    for i in 0..=j {
                        let h = dot(&self.work, &self.basis[i]);
                        self.hess[i * m + j] += h;
                        axpy(-h, &self.basis[i], &mut self.work);
                    }
                }
                let hnext = norm(&self.work);
                self.hess[(j + 1) * m + j] = hnext;
                if hnext > 0.0 {
                    for i in 0..n {
                        self.basis[j + 1][i] = self.work[i] / hnext;
                    }
                }
                for i in 0..j {
                    let a = self.hess[i * m + j];
                    let bb = self.hess[(i + 1) * m + j];
                    self.hess[i * m + j] = cs[i] * a + sn[i] * bb;
                    self.hess[(i + 1) * m + j] = -sn[i] * a + cs[i] * bb;
                }
                let a = self.hess[j * m + j];
                let bb = self.hess[(j + 1) * m + j];
                let r = a.hypot(bb);
                cs[j] = a / r;
                sn[j] = bb / r;
                self.hess[j * m + j] = r;
                self.hess[(j + 1) * m + j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] *= cs[j];
                total += 1;
                j += 1;
                if g[j].abs() <= 0.5 * tol * bnorm || hnext == 0.0 {
                    break;
                }
            }
            for i in (0..j).rev() {
                let mut acc = g[i];
                for l in i + 1..j {
                    acc -= self.hess[i * m + l] * y[l];
                }
                y[i] = acc / self.hess[i * m + i];
            }
            self.work.iter_mut().for_each(|v| *v = 0.0);
            for (i, yi) in y.iter().enumerate().take(j) {
                axpy(*yi, &self.basis[i], &mut self.work);
            }
            precond(&self.work, &mut self.work2);
            axpy(1.0, &self.work2, x);
            self.hess.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_transposes() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 2, -1.0), (1, 0, 0.0)]);
        assert_eq!(a.nnz(), 2);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![6.0, -3.0]);
        let mut z = vec![0.0; 3];
        a.transpose_matvec(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![0.0, 3.0, -1.0]);
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        // tridiagonal: 4 on the diagonal, 1 above, -1 below
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let truth: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&truth, &mut b);
        let mut x = vec![0.0; n];
        let mut solver = Gmres::new(n, 10);
        let stats = solver
            .solve(|v, out| a.matvec(v, out), |v, out| out.copy_from_slice(v), &b, &mut x, 1e-14, 500)
            .unwrap();
        assert!(stats.relative_residual <= 1e-14);
        for (xi, ti) in x.iter().zip(&truth) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_zero_rhs_gives_exact_zero() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let mut x = vec![1.0, 2.0, 3.0];
        let mut solver = Gmres::new(3, 3);
        solver
            .solve(|v, out| a.matvec(v, out), |v, out| out.copy_from_slice(v), &[0.0; 3], &mut x, 1e-12, 10)
            .unwrap();
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn block_inverse_and_eigenvalues() {
        let m = [2.0, 1.0, 1.0, 2.0];
        let inv = block_inverse(2, &m).unwrap();
        let mut y = [0.0; 2];
        block_mul(2, &inv, &[3.0, 3.0], &mut y);
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 1.0).abs() < 1e-14);
        let ev = sym_eigenvalues(2, &m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        assert!((op_norm(2, &m) - 3.0).abs() < 1e-12);
    }
}
