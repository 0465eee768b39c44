use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::linalg::CellMatrices;

/// Unit directions used to sample `ξ`: `±1` in 1D, 360 directions at 1°
/// spacing in 2D, a 2048-point Fibonacci sphere in 3D.
pub fn unit_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..360)
            .map(|i| {
                let th = i as f64 * PI / 180.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let n = 2048;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - y * y).sqrt();
                    let phi = i as f64 * golden;
                    vec![r * phi.cos(), y, r * phi.sin()]
                })
                .collect()
        }
    }
}

/// Eigenvalues of `a^{-1/2} p(ξ) a^{-1/2}` (the characteristic speeds along `ξ`),
/// ascending. `a` must be symmetric positive definite.
pub fn characteristic_speeds(k: usize, a: &[f64], symbols: &[Vec<f64>], xi: &[f64]) -> Vec<f64> {
    let am = DMatrix::from_row_slice(k, k, a);
    let chol = am.cholesky().expect("mass block must be positive definite");
    let l_inv = chol.l().try_inverse().expect("Cholesky factor is invertible");
    let mut p = DMatrix::<f64>::zeros(k, k);
    for (sym, x) in symbols.iter().zip(xi) {
        p += DMatrix::from_row_slice(k, k, sym) * *x;
    }
    let m = &l_inv * p * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Largest characteristic speed over all cells and sampled directions.
/// Cells with identical `a` blocks are evaluated once.
pub fn max_characteristic_speed(a: &CellMatrices, symbols: &[Vec<f64>]) -> f64 {
    let k = a.k();
    let dirs = unit_directions(symbols.len());
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut best = 0.0f64;
    for cell in 0..a.n_cells() {
        let blk = a.block(cell);
        let key: Vec<u64> = blk.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key, ()).is_some() {
            continue;
        }
        for xi in &dirs {
            let ev = characteristic_speeds(k, blk, symbols, xi);
            best = best.max(ev[k - 1].abs()).max(ev[0].abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acoustic_speed_is_sqrt_kappa_over_rho() {
        let (kappa, rho) = (4.0, 1.0);
        let a = CellMatrices::uniform(1, 2, &[1.0 / kappa, 0.0, 0.0, rho]);
        let c = max_characteristic_speed(&a, &[vec![0.0, 1.0, 1.0, 0.0]]);
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn directions_are_unit() {
        for d in 1..=3 {
            for x in unit_directions(d) {
                let n: f64 = x.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(unit_directions(3).len(), 2048);
    }
}
