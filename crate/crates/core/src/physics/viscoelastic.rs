use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fields::{CoefficientField, Grid, MemoryKernel, PronyTerm, TabulatedKernel};
use crate::linalg::{block_inverse, block_is_symmetric, sym_eigenvalues, CellMatrices};
use crate::operators::{unit_directions, Boundary, DiscreteSystem};
use crate::{Error, Result};

/// Number of independent stress components in `d` dimensions.
pub fn mandel_size(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Index pairs of the Mandel ordering: diagonal entries first, then the
/// off-diagonal pairs `(1,2)`, `(0,2)`, `(0,1)` (3D) or `(0,1)` (2D).
pub fn mandel_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
    match dim {
        2 => out.push((0, 1)),
        3 => out.extend([(1, 2), (0, 2), (0, 1)]),
        _ => {}
    }
    out
}

/// Converts a 4-index tensor (`d⁴` entries, `c[((i d + j) d + k) d + l]`) with
/// minor and major symmetries to its symmetric Mandel matrix.
pub fn tensor_to_mandel(dim: usize, c: &[f64]) -> Result<Vec<f64>> {
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * dim + j) * dim + k) * dim + l;
    if c.len() != dim.pow(4) {
        return Err(Error::DimensionMismatch { expected: dim.pow(4), got: c.len() });
    }
    let scale = c.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let v = c[idx(i, j, k, l)];
                    for w in [c[idx(j, i, k, l)], c[idx(i, j, l, k)], c[idx(k, l, i, j)]] {
                        if (v - w).abs() > 1e-12 * scale {
                            return Err(Error::invalid(format!("tensor lacks symmetry at ({i},{j},{k},{l})")));
                        }
                    }
                }
            }
        }
    }
    let pairs = mandel_pairs(dim);
    let m = pairs.len();
    let mut out = vec![0.0; m * m];
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (s, &(k, l)) in pairs.iter().enumerate() {
            let fr = if i == j { 1.0 } else { SQRT_2 };
            let fs = if k == l { 1.0 } else { SQRT_2 };
            out[r * m + s] = fr * fs * c[idx(i, j, k, l)];
        }
    }
    Ok(out)
}

/// Isotropic stiffness `λ 1⊗1 + 2μ I` in Mandel form.
pub fn isotropic_stiffness(dim: usize, lambda: f64, mu: f64) -> Vec<f64> {
    let m = mandel_size(dim);
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        out[r * m + r] = 2.0 * mu;
    }
    for r in 0..dim {
        for s in 0..dim {
            out[r * m + s] += lambda;
        }
    }
    out
}

/// Isotropic compliance `I/(2μ) − λ/(2μ(dλ + 2μ)) 1⊗1` in Mandel form.
pub fn isotropic_compliance(dim: usize, lambda: f64, mu: f64) -> Vec<f64> {
    let m = mandel_size(dim);
    let off = lambda / (2.0 * mu * (dim as f64 * lambda + 2.0 * mu));
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        out[r * m + r] = 1.0 / (2.0 * mu);
    }
    for r in 0..dim {
        for s in 0..dim {
            out[r * m + s] -= off;
        }
    }
    out
}

/// Mandel strain-rate operator for axis `j`: the `m × d` matrix `E_j` with
/// `ε(v) = Σ_j E_j ∂v/∂x_j`. Its transpose is the divergence on axis `j`.
pub fn strain_symbol(dim: usize, axis: usize) -> Vec<f64> {
    let pairs = mandel_pairs(dim);
    let mut e = vec![0.0; pairs.len() * dim];
    for (r, &(a, b)) in pairs.iter().enumerate() {
        if a == b {
            if a == axis {
                e[r * dim + a] = 1.0;
            }
        } else {
            if axis == a {
                e[r * dim + b] += 1.0 / SQRT_2;
            }
            if axis == b {
                e[r * dim + a] += 1.0 / SQRT_2;
            }
        }
    }
    e
}

/// Symbols of the stress/velocity system on `(σ (Mandel), v)`:
/// `p_j = −[[0, E_j], [E_jᵀ, 0]]`.
pub fn elastic_symbols(dim: usize) -> Vec<Vec<f64>> {
    let m = mandel_size(dim);
    let k = m + dim;
    (0..dim)
        .map(|axis| {
            let e = strain_symbol(dim, axis);
            let mut p = vec![0.0; k * k];
            for r in 0..m {
                for c in 0..dim {
                    let v = -e[r * dim + c];
                    p[r * k + m + c] = v;
                    p[(m + c) * k + r] = v;
                }
            }
            p
        })
        .collect()
}

/// Per-cell density, elastic compliance `Γᵉ` and relaxation kernel `γ(t)`,
/// all stress quantities in Mandel form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscoelasticModel {
    pub dim: usize,
    pub rho: Vec<f64>,
    pub compliance: CellMatrices,
    pub gamma: MemoryKernel,
    pub g_lower: f64,
    pub g_upper: f64,
}

impl ViscoelasticModel {
    /// Bounds `g_*`, `g^*` inferred from the compliance spectra.
    pub fn new(dim: usize, rho: Vec<f64>, compliance: CellMatrices, gamma: MemoryKernel) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("dimension must be 1, 2 or 3"));
        }
        let m = mandel_size(dim);
        if compliance.k() != m || compliance.n_cells() != rho.len() {
            return Err(Error::DimensionMismatch { expected: m, got: compliance.k() });
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for cell in 0..rho.len() {
            let ev = sym_eigenvalues(m, compliance.block(cell));
            lo = lo.min(ev[0]);
            hi = hi.max(ev[m - 1]);
        }
        let model = Self { dim, rho, compliance, gamma, g_lower: lo, g_upper: hi };
        model.validate()?;
        Ok(model)
    }

    /// Homogeneous isotropic medium.
    pub fn isotropic(dim: usize, n_cells: usize, lambda: f64, mu: f64, rho: f64, gamma: MemoryKernel) -> Result<Self> {
        let c = CellMatrices::uniform(n_cells, mandel_size(dim), &isotropic_compliance(dim, lambda, mu));
        Self::new(dim, vec![rho; n_cells], c, gamma)
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = mandel_size(self.dim);
        for cell in 0..self.n_cells() {
            if !(self.rho[cell] > 0.0) || !self.rho[cell].is_finite() {
                return Err(Error::InvalidModel { cell, reason: "density must be positive".into() });
            }
            let g = self.compliance.block(cell);
            if !block_is_symmetric(m, g, 1e-12) {
                return Err(Error::InvalidModel { cell, reason: "compliance lacks major symmetry".into() });
            }
            let ev = sym_eigenvalues(m, g);
            let slack = 1e-12 * self.g_upper;
            if ev[0] <= 0.0 || ev[0] < self.g_lower - slack || ev[m - 1] > self.g_upper + slack {
                return Err(Error::InvalidModel {
                    cell,
                    reason: format!("compliance spectrum [{:e}, {:e}] not elliptic within bounds", ev[0], ev[m - 1]),
                });
            }
        }
        self.gamma.validate(self.n_cells(), m).map_err(|e| match e {
            Error::InvalidCoefficient { cell, reason } => Error::InvalidModel { cell, reason },
            other => other,
        })
    }

    /// `b = γ(0⁺)` on the stress block.
    pub fn instantaneous_relaxation(&self) -> CellMatrices {
        let m = mandel_size(self.dim);
        match &self.gamma {
            MemoryKernel::Zero => CellMatrices::zeros(self.n_cells(), m),
            MemoryKernel::Prony(terms) => {
                terms.iter().fold(CellMatrices::zeros(self.n_cells(), m), |acc, t| acc.add_scaled(1.0, &t.weights))
            }
            MemoryKernel::Tabulated(tab) => tab.samples[0].clone(),
        }
    }

    /// `q = ∂γ/∂t` on the stress block. Prony: weights `−c_j/τ_j`. Tabulated:
    /// second-order one-sided differences at both ends, centered inside.
    pub fn relaxation_rate(&self) -> Result<MemoryKernel> {
        Ok(match &self.gamma {
            MemoryKernel::Zero => MemoryKernel::Zero,
            MemoryKernel::Prony(terms) => MemoryKernel::Prony(
                terms.iter().map(|t| PronyTerm { tau: t.tau, weights: t.weights.scaled(-1.0 / t.tau) }).collect(),
            ),
            MemoryKernel::Tabulated(tab) => {
                let s = &tab.samples;
                let n = s.len();
                if n < 3 {
                    return Err(Error::invalid("tabulated relaxation needs at least 3 samples"));
                }
                let h = 0.5 / tab.dt;
                let samples = (0..n)
                    .map(|i| {
                        if i == 0 {
                            s[0].scaled(-3.0 * h).add_scaled(4.0 * h, &s[1]).add_scaled(-h, &s[2])
                        } else if i == n - 1 {
                            s[i].scaled(3.0 * h).add_scaled(-4.0 * h, &s[i - 1]).add_scaled(h, &s[i - 2])
                        } else {
                            s[i + 1].scaled(h).add_scaled(-h, &s[i - 1])
                        }
                    })
                    .collect();
                MemoryKernel::Tabulated(TabulatedKernel { dt: tab.dt, samples })
            }
        })
    }

    /// `max_t |b + ∫₀ᵗ q − γ(t)|` over the sample times `t`, entrywise, in one cell.
    pub fn kernel_split_residual(&self, cell: usize, times: &[f64]) -> Result<f64> {
        let m = mandel_size(self.dim);
        let b = self.instantaneous_relaxation();
        let q = self.relaxation_rate()?;
        let mut worst = 0.0f64;
        for &t in times {
            let iq = q.integral(cell, m, t);
            let g = self.gamma.eval(cell, m, t);
            for ((bi, qi), gi) in b.block(cell).iter().zip(&iq).zip(&g) {
                worst = worst.max((bi + qi - gi).abs());
            }
        }
        Ok(worst)
    }

    /// Largest quasi-p speed `√(λ_max(Q(ξ))/ρ)` over cells and sampled unit
    /// `ξ`, with the Christoffel matrix `Q(ξ) = E(ξ)ᵀ (Γᵉ)⁻¹ E(ξ)`.
    pub fn max_wavespeed(&self) -> f64 {
        let (d, m) = (self.dim, mandel_size(self.dim));
        let dirs = unit_directions(d);
        let e: Vec<DMatrix<f64>> = (0..d).map(|j| DMatrix::from_row_slice(m, d, &strain_symbol(d, j))).collect();
        let mut seen = HashMap::new();
        let mut best = 0.0f64;
        for cell in 0..self.n_cells() {
            let key: Vec<u64> =
                self.compliance.block(cell).iter().chain(std::iter::once(&self.rho[cell])).map(|v| v.to_bits()).collect();
            if seen.insert(key, ()).is_some() {
                continue;
            }
            let Some(stiff) = block_inverse(m, self.compliance.block(cell)) else { continue };
            let c = DMatrix::from_row_slice(m, m, &stiff);
            for xi in &dirs {
                let mut ex = DMatrix::<f64>::zeros(m, d);
                for (ej, x) in e.iter().zip(xi) {
                    ex += ej * *x;
                }
                let q = ex.transpose() * &c * &ex;
                let q = (&q + q.transpose()) * 0.5;
                let lmax = q.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
                best = best.max((lmax / self.rho[cell]).sqrt());
            }
        }
        best
    }

    /// Coefficient field on `(σ, v)` with `a = diag(Γᵉ, ρ I)`, `b` and `q`
    /// acting on the stress block only.
    pub fn field(&self, grid: &Grid) -> Result<CoefficientField> {
        self.validate()?;
        if grid.dim() != self.dim || grid.n_cells() != self.n_cells() {
            return Err(Error::GridMismatch("viscoelastic model does not match the grid".into()));
        }
        let m = mandel_size(self.dim);
        let k = m + self.dim;
        let n = self.n_cells();
        let embed = |s: &CellMatrices| CellMatrices::from_fn(n, k, |cell, r, c| if r < m && c < m { s.block(cell)[r * m + c] } else { 0.0 });
        let a = CellMatrices::from_fn(n, k, |cell, r, c| {
            if r < m && c < m {
                self.compliance.block(cell)[r * m + c]
            } else if r == c {
                self.rho[cell]
            } else {
                0.0
            }
        });
        let b = embed(&self.instantaneous_relaxation());
        let q = match self.relaxation_rate()? {
            MemoryKernel::Zero => MemoryKernel::Zero,
            MemoryKernel::Prony(terms) => MemoryKernel::Prony(
                terms.into_iter().map(|t| PronyTerm { tau: t.tau, weights: embed(&t.weights) }).collect(),
            ),
            MemoryKernel::Tabulated(tab) => MemoryKernel::Tabulated(TabulatedKernel {
                dt: tab.dt,
                samples: tab.samples.iter().map(embed).collect(),
            }),
        };
        CoefficientField::with_inferred_bounds(grid.clone(), k, a, b, q)
    }
}

/// Stress/velocity system (`k = 2, 5, 9` in 1D, 2D, 3D).
pub fn viscoelastic_system(model: &ViscoelasticModel, grid: &Grid, boundary: Boundary) -> Result<DiscreteSystem> {
    let field = model.field(grid)?;
    DiscreteSystem::new(field, &elastic_symbols(model.dim), boundary)
}
