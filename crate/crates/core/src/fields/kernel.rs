use serde::{Deserialize, Serialize};

use crate::linalg::{block_is_symmetric, op_norm, CellMatrices};
use crate::{Error, Result};

/// One exponential relaxation term `c · exp(−t/τ)` with per-cell weights `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub tau: f64,
    pub weights: CellMatrices,
}

/// Kernel samples `q(n·dt)`, `n = 0, 1, …`; zero past the last sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKernel {
    pub dt: f64,
    pub samples: Vec<CellMatrices>,
}

/// Causal memory kernel `q(t)`, zero for `t < 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub enum MemoryKernel {
    #[default]
    Zero,
    Prony(Vec<PronyTerm>),
    Tabulated(TabulatedKernel),
}

impl TabulatedKernel {
    /// Samples a per-cell kernel function on `n_samples` points `0, dt, …`.
    pub fn tabulate(
        n_cells: usize,
        k: usize,
        dt: f64,
        n_samples: usize,
        f: impl Fn(usize, f64, usize, usize) -> f64,
    ) -> Self {
        let samples = (0..n_samples)
            .map(|n| {
                let t = n as f64 * dt;
                CellMatrices::from_fn(n_cells, k, |cell, r, c| f(cell, t, r, c))
            })
            .collect();
        Self { dt, samples }
    }
}

impl MemoryKernel {
    pub fn is_zero(&self) -> bool {
        match self {
            MemoryKernel::Zero => true,
            MemoryKernel::Prony(terms) => terms.iter().all(|t| t.weights.is_zero()),
            MemoryKernel::Tabulated(tab) => tab.samples.iter().all(|s| s.is_zero()),
        }
    }

    /// Checks shapes, `τ_j > 0`, and per-cell symmetry of every weight or sample.
    pub fn validate(&self, n_cells: usize, k: usize) -> Result<()> {
        let check = |m: &CellMatrices, what: &str| -> Result<()> {
            if m.k() != k || m.n_cells() != n_cells {
                return Err(Error::invalid(format!(
                    "{what}: expected {n_cells} cells of {k}x{k}, got {} cells of {}x{}",
                    m.n_cells(),
                    m.k(),
                    m.k()
                )));
            }
            for cell in 0..n_cells {
                if !block_is_symmetric(k, m.block(cell), 1e-12) {
                    return Err(Error::InvalidCoefficient { cell, reason: format!("{what} is not symmetric") });
                }
            }
            Ok(())
        };
        match self {
            MemoryKernel::Zero => Ok(()),
            MemoryKernel::Prony(terms) => {
                for (j, term) in terms.iter().enumerate() {
                    if !(term.tau > 0.0) || !term.tau.is_finite() {
                        return Err(Error::invalid(format!("Prony term {j}: relaxation time must be positive")));
                    }
                    check(&term.weights, &format!("Prony weight {j}"))?;
                }
                Ok(())
            }
            MemoryKernel::Tabulated(tab) => {
                if !(tab.dt > 0.0) {
                    return Err(Error::invalid("tabulated kernel dt must be positive"));
                }
                if tab.samples.is_empty() {
                    return Err(Error::invalid("tabulated kernel needs at least the t = 0 sample"));
                }
                for (n, s) in tab.samples.iter().enumerate() {
                    check(s, &format!("kernel sample {n}"))?;
                }
                Ok(())
            }
        }
    }

    /// `q(t)` in one cell as a row-major `k×k` block.
    pub fn eval(&self, cell: usize, k: usize, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; k * k];
        if t < 0.0 {
            return out;
        }
        match self {
            MemoryKernel::Zero => {}
            MemoryKernel::Prony(terms) => {
                for term in terms {
                    let e = (-t / term.tau).exp();
                    for (o, w) in out.iter_mut().zip(term.weights.block(cell)) {
                        *o += w * e;
                    }
                }
            }
            MemoryKernel::Tabulated(tab) => {
                let x = t / tab.dt;
                let i = x.floor() as usize;
                let frac = x - i as f64;
                let n = tab.samples.len();
                if i < n {
                    let lo = tab.samples[i].block(cell);
                    if i + 1 < n && frac > 0.0 {
                        let hi = tab.samples[i + 1].block(cell);
                        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                            *o = (1.0 - frac) * a + frac * b;
                        }
                    } else if frac == 0.0 {
                        out.copy_from_slice(lo);
                    }
                }
            }
        }
        out
    }

    /// `∫₀ᵗ q(s) ds` in one cell: closed form for Prony, trapezoid for tables.
    pub fn integral(&self, cell: usize, k: usize, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; k * k];
        if t <= 0.0 {
            return out;
        }
        match self {
            MemoryKernel::Zero => {}
            MemoryKernel::Prony(terms) => {
                for term in terms {
                    let f = term.tau * -(-t / term.tau).exp_m1();
                    for (o, w) in out.iter_mut().zip(term.weights.block(cell)) {
                        *o += w * f;
                    }
                }
            }
            MemoryKernel::Tabulated(tab) => {
                let n_full = ((t / tab.dt) + 1e-9).floor() as usize;
                let mut prev = self.eval(cell, k, 0.0);
                for i in 1..=n_full {
                    let cur = self.eval(cell, k, i as f64 * tab.dt);
                    for ((o, a), b) in out.iter_mut().zip(&prev).zip(&cur) {
                        *o += 0.5 * tab.dt * (a + b);
                    }
                    prev = cur;
                }
                let rest = t - n_full as f64 * tab.dt;
                if rest > 1e-12 * tab.dt {
                    let cur = self.eval(cell, k, t);
                    for ((o, a), b) in out.iter_mut().zip(&prev).zip(&cur) {
                        *o += 0.5 * rest * (a + b);
                    }
                }
            }
        }
        out
    }

    /// Upper bound on `‖q‖_{L¹(R₊, L∞)}`.
    pub fn l1_bound(&self) -> f64 {
        match self {
            MemoryKernel::Zero => 0.0,
            MemoryKernel::Prony(terms) => terms.iter().map(|t| t.tau * t.weights.max_op_norm()).sum(),
            MemoryKernel::Tabulated(tab) => {
                let n_cells = tab.samples[0].n_cells();
                let k = tab.samples[0].k();
                (0..n_cells)
                    .map(|cell| {
                        let norms: Vec<f64> = tab.samples.iter().map(|s| op_norm(k, s.block(cell))).collect();
                        let mut acc = 0.0;
                        for w in norms.windows(2) {
                            acc += 0.5 * tab.dt * (w[0] + w[1]);
                        }
                        acc
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `self + h · other` for kernels of matching structure (same `τ_j`, same
    /// table spacing). A zero kernel on either side adopts the other's structure.
    pub fn add_scaled(&self, h: f64, other: &MemoryKernel) -> Result<MemoryKernel> {
        match (self, other) {
            (_, MemoryKernel::Zero) => Ok(self.clone()),
            (MemoryKernel::Zero, MemoryKernel::Prony(terms)) => Ok(MemoryKernel::Prony(
                terms.iter().map(|t| PronyTerm { tau: t.tau, weights: t.weights.scaled(h) }).collect(),
            )),
            (MemoryKernel::Zero, MemoryKernel::Tabulated(tab)) => Ok(MemoryKernel::Tabulated(TabulatedKernel {
                dt: tab.dt,
                samples: tab.samples.iter().map(|s| s.scaled(h)).collect(),
            })),
            (MemoryKernel::Prony(a), MemoryKernel::Prony(b)) => {
                if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.tau != y.tau) {
                    return Err(Error::invalid("Prony perturbation must share the relaxation times"));
                }
                Ok(MemoryKernel::Prony(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| PronyTerm { tau: x.tau, weights: x.weights.add_scaled(h, &y.weights) })
                        .collect(),
                ))
            }
            (MemoryKernel::Tabulated(a), MemoryKernel::Tabulated(b)) => {
                if a.dt != b.dt {
                    return Err(Error::invalid("tabulated perturbation must share the sample spacing"));
                }
                let n = a.samples.len().max(b.samples.len());
                let template = &a.samples[0];
                let zero = CellMatrices::zeros(template.n_cells(), template.k());
                let samples = (0..n)
                    .map(|i| {
                        let x = a.samples.get(i).unwrap_or(&zero);
                        let y = b.samples.get(i).unwrap_or(&zero);
                        x.add_scaled(h, y)
                    })
                    .collect();
                Ok(MemoryKernel::Tabulated(TabulatedKernel { dt: a.dt, samples }))
            }
            _ => Err(Error::invalid("kernel perturbation must use the same representation as the kernel")),
        }
    }

    pub fn scaled(&self, h: f64) -> MemoryKernel {
        MemoryKernel::Zero.add_scaled(h, self).expect("zero kernel accepts any structure")
    }
}
