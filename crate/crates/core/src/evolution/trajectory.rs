use serde::{Deserialize, Serialize};

use crate::fields::Grid;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Relative residual target of the per-step linear solve.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub cfl_safety: f64,
    /// Keep every `stride`-th state; 1 keeps all.
    pub stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { scheme: Scheme::ImplicitMidpoint, tolerance: 1e-13, max_iterations: 2000, restart: 40, cfl_safety: 0.5, stride: 1 }
    }
}

impl IntegratorConfig {
    pub fn rk4() -> Self {
        Self { scheme: Scheme::Rk4, ..Self::default() }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 || self.restart == 0 || self.stride == 0 {
            return Err(Error::invalid("max_iterations, restart and stride must be positive"));
        }
        if !(self.cfl_safety > 0.0) {
            return Err(Error::invalid("CFL safety factor must be positive"));
        }
        Ok(())
    }
}

/// States `u(tₙ)` with `tₙ = t0 + n dt`, `n = 0..=N`, and the energy at every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub(crate) grid: Grid,
    pub(crate) k: usize,
    pub(crate) t0: f64,
    pub(crate) stride: usize,
    pub(crate) states: Vec<Vec<f64>>,
    pub(crate) energy: Vec<f64>,
    pub(crate) scheme: Scheme,
    pub(crate) onset: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    /// Number of steps `N`; states run over `0..=N`.
    pub fn n_steps(&self) -> usize {
        self.energy.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + self.grid.dt() * n as f64
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Source onset the trajectory was driven with (`+∞` if unforced).
    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_dense(&self) -> bool {
        self.stride == 1
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    /// Stored states, every `stride`-th step.
    pub fn stored(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// State at step `n`, if stored.
    pub fn state(&self, n: usize) -> Option<&[f64]> {
        if !n.is_multiple_of(self.stride) {
            return None;
        }
        self.states.get(n / self.stride).map(|v| v.as_slice())
    }

    pub fn states(&self) -> Result<&[Vec<f64>]> {
        if !self.is_dense() {
            return Err(Error::Unsupported("trajectory is decimated; rerun with stride 1".into()));
        }
        Ok(&self.states)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Discrete time derivative `(uⁿ⁺¹ − uⁿ)/dt` on step `n`.
    pub fn derivative(&self, n: usize) -> Result<Vec<f64>> {
        let s = self.states()?;
        if n + 1 >= s.len() {
            return Err(Error::InsufficientHistory { needed: n + 1, available: s.len() });
        }
        let dt = self.dt();
        Ok(s[n + 1].iter().zip(&s[n]).map(|(a, b)| (a - b) / dt).collect())
    }

    /// Largest volume-weighted L² norm of the difference between two
    /// trajectories on the same axes.
    pub fn max_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.states.len() != other.states.len() || self.k != other.k {
            return Err(Error::GridMismatch("trajectories have different shapes".into()));
        }
        let vol = self.grid.cell_volume();
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (vol * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt())
            .fold(0.0, f64::max))
    }

    /// Largest volume-weighted L² norm over stored states.
    pub fn max_norm(&self) -> f64 {
        let vol = self.grid.cell_volume();
        self.states.iter().map(|u| (vol * u.iter().map(|x| x * x).sum::<f64>()).sqrt()).fold(0.0, f64::max)
    }
}
