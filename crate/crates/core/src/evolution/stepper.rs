use crate::fields::SourceTerm;
use crate::linalg::{block_inverse, CellMatrices, Gmres, SolveStats};
use crate::operators::{DiscreteSystem, MemoryState};
use crate::{Error, Result};

use super::trajectory::IntegratorConfig;

/// Right-hand side of a march.
#[derive(Clone, Copy)]
pub enum Forcing<'a> {
    None,
    /// Continuous source; the midpoint step uses `f(tₙ + dt/2)`.
    Source(&'a SourceTerm),
    /// Step forcing `gⁿ`, `n = 0..N−1`, used as given by the midpoint step.
    Discrete(&'a [Vec<f64>]),
}

/// Implicit midpoint step for `A u' + (P + B) u + R[u] = g`:
///
/// ```text
/// A (uⁿ⁺¹ − uⁿ)/dt + (P + B)(uⁿ⁺¹ + uⁿ)/2 + (Rⁿ⁺¹ + Rⁿ)/2 = gⁿ
/// ```
///
/// with `Rⁿ⁺¹ = W₀ uⁿ⁺¹ + (history)` solved for implicitly.
pub(crate) struct Midpoint<'a> {
    sys: &'a DiscreteSystem,
    dt: f64,
    w0: Option<CellMatrices>,
    d_inv: Option<CellMatrices>,
    gmres: Gmres,
    mem: MemoryState,
    rhs: Vec<f64>,
    tmp: Vec<f64>,
    tol: f64,
    max_iter: usize,
    pub(crate) last: SolveStats,
}

impl<'a> Midpoint<'a> {
    pub(crate) fn new(sys: &'a DiscreteSystem, config: &IntegratorConfig) -> Result<Self> {
        let dt = sys.grid().dt();
        let n = sys.state_len();
        let k = sys.k();
        let w0 = if sys.memory().is_zero() { None } else { Some(sys.memory().lag_weight(0)) };
        let d_inv = if w0.is_none() && !sys.has_b() {
            None
        } else {
            let mut d = sys.mass().blocks().add_scaled(0.5 * dt, sys.b());
            if let Some(w) = &w0 {
                d = d.add_scaled(0.5 * dt, w);
            }
            let mut inv = Vec::with_capacity(d.as_slice().len());
            for cell in 0..d.n_cells() {
                let bi = block_inverse(k, d.block(cell)).ok_or_else(|| Error::InvalidCoefficient {
                    cell,
                    reason: "A + dt/2 (B + W0) is singular".into(),
                })?;
                inv.extend_from_slice(&bi);
            }
            Some(CellMatrices::from_vec(k, inv)?)
        };
        Ok(Self {
            sys,
            dt,
            w0,
            d_inv,
            gmres: Gmres::new(n, config.restart),
            mem: sys.memory().start(),
            rhs: vec![0.0; n],
            tmp: vec![0.0; n],
            tol: config.tolerance,
            max_iter: config.max_iterations,
            last: SolveStats::default(),
        })
    }

    pub(crate) fn step(&mut self, u_n: &[f64], g: Option<&[f64]>, u_next: &mut [f64]) -> Result<()> {
        let Self { sys, dt, w0, d_inv, gmres, mem, rhs, tmp, tol, max_iter, .. } = self;
        let (sys, dt) = (*sys, *dt);
        let half = 0.5 * dt;
        sys.mass().apply(u_n, rhs);
        sys.apply_spatial(u_n, tmp);
        crate::linalg::axpy(-half, tmp, rhs);
        if w0.is_some() {
            sys.memory().current(mem, tmp);
            crate::linalg::axpy(-half, tmp, rhs);
            sys.memory().history_part(mem, u_n, tmp);
            crate::linalg::axpy(-half, tmp, rhs);
        }
        if let Some(g) = g {
            crate::linalg::axpy(dt, g, rhs);
        }
        u_next.copy_from_slice(u_n);
        let w0 = w0.as_ref();
        let apply = |x: &[f64], y: &mut [f64]| {
            sys.apply_spatial(x, y);
            if let Some(w) = w0 {
                w.apply_add(1.0, x, y);
            }
            y.iter_mut().for_each(|v| *v *= half);
            sys.mass().blocks().apply_add(1.0, x, y);
        };
        let d_inv = d_inv.as_ref();
        let precond = |x: &[f64], y: &mut [f64]| match d_inv {
            Some(d) => d.apply(x, y),
            None => sys.mass().solve(x, y),
        };
        self.last = gmres.solve(apply, precond, rhs, u_next, *tol, *max_iter)?;
        sys.memory().commit(mem, u_n, u_next);
        Ok(())
    }
}

/// Classical RK4 on `(u, s₁..s_J)` with `s_j' = u − s_j/τ_j` for Prony memory.
pub(crate) struct Rk4<'a> {
    sys: &'a DiscreteSystem,
    aux: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> Rk4<'a> {
    pub(crate) fn new(sys: &'a DiscreteSystem) -> Result<Self> {
        if matches!(sys.memory().kernel(), crate::fields::MemoryKernel::Tabulated(_)) && !sys.memory().is_zero() {
            return Err(Error::Unsupported("RK4 needs a Prony or zero memory kernel".into()));
        }
        let n = sys.state_len();
        let aux = vec![vec![0.0; n]; sys.memory().prony_terms().len()];
        Ok(Self { sys, aux, scratch: vec![0.0; n] })
    }

    /// Largest stable `dt`: `safety / (c_max Σ_j 1/h_j)`.
    pub(crate) fn dt_limit(sys: &DiscreteSystem, safety: f64) -> f64 {
        let c = sys.max_wavespeed();
        let inv_h: f64 = sys.grid().h().iter().map(|h| 1.0 / h).sum();
        if c == 0.0 {
            f64::INFINITY
        } else {
            safety / (c * inv_h)
        }
    }

    fn rhs(&mut self, f: Option<&[f64]>, u: &[f64], s: &[Vec<f64>], du: &mut [f64], ds: &mut [Vec<f64>]) {
        let sys = self.sys;
        sys.apply_spatial(u, &mut self.scratch);
        self.scratch.iter_mut().for_each(|v| *v = -*v);
        for (t, sj) in sys.memory().prony_terms().iter().zip(s) {
            t.weights.apply_add(-1.0, sj, &mut self.scratch);
        }
        if let Some(f) = f {
            crate::linalg::axpy(1.0, f, &mut self.scratch);
        }
        sys.mass().solve(&self.scratch, du);
        for ((t, sj), dsj) in sys.memory().prony_terms().iter().zip(s).zip(ds.iter_mut()) {
            for ((d, ui), si) in dsj.iter_mut().zip(u).zip(sj) {
                *d = ui - si / t.tau;
            }
        }
    }

    pub(crate) fn step(&mut self, t: f64, dt: f64, source: Option<&SourceTerm>, u: &[f64], u_next: &mut [f64]) {
        let n = u.len();
        let j = self.aux.len();
        let s0 = self.aux.clone();
        let forcing = [t, t + 0.5 * dt, t + 0.5 * dt, t + dt].map(|tt| source.map(|s| s.eval(tt)));
        let offsets = [0.0, 0.5, 0.5, 1.0];
        let mut ku: Vec<Vec<f64>> = Vec::with_capacity(4);
        let mut ks: Vec<Vec<Vec<f64>>> = Vec::with_capacity(4);
        for stage in 0..4 {
            let (ut, st) = if stage == 0 {
                (u.to_vec(), s0.clone())
            } else {
                let c = offsets[stage] * dt;
                let ut: Vec<f64> = u.iter().zip(&ku[stage - 1]).map(|(a, b)| a + c * b).collect();
                let st: Vec<Vec<f64>> = s0
                    .iter()
                    .zip(&ks[stage - 1])
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect())
                    .collect();
                (ut, st)
            };
            let mut du = vec![0.0; n];
            let mut ds = vec![vec![0.0; n]; j];
            self.rhs(forcing[stage].as_deref(), &ut, &st, &mut du, &mut ds);
            ku.push(du);
            ks.push(ds);
        }
        for idx in 0..n {
            u_next[idx] = u[idx] + dt / 6.0 * (ku[0][idx] + 2.0 * ku[1][idx] + 2.0 * ku[2][idx] + ku[3][idx]);
        }
        for (m, a) in self.aux.iter_mut().enumerate() {
            for idx in 0..n {
                a[idx] = s0[m][idx] + dt / 6.0 * (ks[0][m][idx] + 2.0 * ks[1][m][idx] + 2.0 * ks[2][m][idx] + ks[3][m][idx]);
            }
        }
    }
}
