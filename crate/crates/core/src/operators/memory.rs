use crate::fields::{Grid, MemoryKernel, PronyTerm};
use crate::linalg::CellMatrices;
use crate::{Error, Result};

/// One-step coefficients of the exponential recursion
/// `s ← e s + α u⁻ + β u⁺`, exact for `u` linear on the step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PronyStep {
    pub decay: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PronyStep {
    pub fn new(tau: f64, dt: f64) -> Self {
        let x = dt / tau;
        let decay = (-x).exp();
        // 1 − e^{−x} without cancellation
        let one_minus = -(-x).exp_m1();
        let beta = if x < 1e-4 {
            // τ − τ²(1−e^{−x})/dt, series in x
            dt * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0)
        } else {
            tau - tau * one_minus / x
        };
        let alpha = tau * one_minus - beta;
        Self { decay, alpha, beta }
    }

    /// Scalar convolution weight of lag `l` when the history starts at zero.
    pub fn lag_weight(&self, l: usize) -> f64 {
        if l == 0 {
            self.beta
        } else {
            self.decay.powi(l as i32 - 1) * (self.alpha + self.decay * self.beta)
        }
    }
}

/// Advances every auxiliary state `s_j ≈ ∫₀ᵗ e^{−(t−s)/τ_j} u(s) ds` over one
/// step, from `u(tₙ)` to `u(tₙ₊₁)`.
pub fn prony_advance(aux: &mut [Vec<f64>], steps: &[PronyStep], u_prev: &[f64], u_next: &[f64]) {
    for (s, st) in aux.iter_mut().zip(steps) {
        for ((si, a), b) in s.iter_mut().zip(u_prev).zip(u_next) {
            *si = st.decay * *si + st.alpha * a + st.beta * b;
        }
    }
}

/// Discrete convolution `R[u](tₙ) = ∫₀^{tₙ} q(tₙ − s) u(s) ds` on the grid's
/// time axis.
#[derive(Clone, Debug)]
pub struct MemoryOperator {
    kernel: MemoryKernel,
    k: usize,
    n_cells: usize,
    dt: f64,
    steps: Vec<PronyStep>,
}

impl MemoryOperator {
    pub fn new(kernel: MemoryKernel, grid: &Grid, k: usize) -> Result<Self> {
        kernel.validate(grid.n_cells(), k)?;
        let dt = grid.dt();
        let steps = match &kernel {
            MemoryKernel::Prony(terms) => terms.iter().map(|t| PronyStep::new(t.tau, dt)).collect(),
            MemoryKernel::Tabulated(tab) => {
                if (tab.dt - dt).abs() > 1e-12 * dt {
                    return Err(Error::invalid(format!(
                        "tabulated kernel spacing {} differs from the time step {dt}",
                        tab.dt
                    )));
                }
                Vec::new()
            }
            MemoryKernel::Zero => Vec::new(),
        };
        Ok(Self { kernel, k, n_cells: grid.n_cells(), dt, steps })
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn is_zero(&self) -> bool {
        self.kernel.is_zero()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn prony_steps(&self) -> &[PronyStep] {
        &self.steps
    }

    pub fn prony_terms(&self) -> &[PronyTerm] {
        match &self.kernel {
            MemoryKernel::Prony(t) => t,
            _ => &[],
        }
    }

    /// Per-cell weight `W_l` of lag `l` in `R^n = Σ_{m≥1} W_{n−m} u^m`
    /// (valid when `u⁰ = 0`).
    pub fn lag_weight(&self, l: usize) -> CellMatrices {
        match &self.kernel {
            MemoryKernel::Zero => CellMatrices::zeros(self.n_cells, self.k),
            MemoryKernel::Prony(terms) => {
                let mut w = CellMatrices::zeros(self.n_cells, self.k);
                for (t, st) in terms.iter().zip(&self.steps) {
                    w = w.add_scaled(st.lag_weight(l), &t.weights);
                }
                w
            }
            MemoryKernel::Tabulated(tab) => match tab.samples.get(l) {
                Some(s) => s.scaled(if l == 0 { 0.5 * self.dt } else { self.dt }),
                None => CellMatrices::zeros(self.n_cells, self.k),
            },
        }
    }

    /// `R[u](t_n)` from stored history `u⁰..`. Prony kernels use the exact
    /// recursion for piecewise-linear `u`, tabulated kernels the trapezoid rule.
    pub fn apply_memory(&self, history: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
        if n >= history.len() {
            return Err(Error::InsufficientHistory { needed: n, available: history.len() });
        }
        let len = self.n_cells * self.k;
        let mut out = vec![0.0; len];
        match &self.kernel {
            MemoryKernel::Zero => {}
            MemoryKernel::Prony(terms) => {
                let mut aux = vec![vec![0.0; len]; terms.len()];
                for m in 0..n {
                    prony_advance(&mut aux, &self.steps, &history[m], &history[m + 1]);
                }
                for (t, s) in terms.iter().zip(&aux) {
                    t.weights.apply_add(1.0, s, &mut out);
                }
            }
            MemoryKernel::Tabulated(tab) => {
                if n == 0 {
                    return Ok(out);
                }
                for m in 0..=n {
                    let lag = n - m;
                    let Some(q) = tab.samples.get(lag) else { continue };
                    let w = if m == 0 || m == n { 0.5 * self.dt } else { self.dt };
                    q.apply_add(w, &history[m], &mut out);
                }
            }
        }
        Ok(out)
    }

    pub fn start(&self) -> MemoryState {
        let len = self.n_cells * self.k;
        match &self.kernel {
            MemoryKernel::Prony(terms) => MemoryState::Prony { aux: vec![vec![0.0; len]; terms.len()] },
            MemoryKernel::Tabulated(_) => MemoryState::Tabulated { history: Vec::new() },
            MemoryKernel::Zero => MemoryState::Zero,
        }
    }

    /// `R^{n+1} − W₀ u^{n+1}`: the part of the next memory value fixed by
    /// the states `u¹..uⁿ` (requires `u⁰ = 0`).
    pub fn history_part(&self, state: &MemoryState, u_now: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match (state, &self.kernel) {
            (MemoryState::Prony { aux }, MemoryKernel::Prony(terms)) => {
                let mut tmp = vec![0.0; out.len()];
                for ((t, st), s) in terms.iter().zip(&self.steps).zip(aux) {
                    for ((x, si), ui) in tmp.iter_mut().zip(s).zip(u_now) {
                        *x = st.decay * si + st.alpha * ui;
                    }
                    t.weights.apply_add(1.0, &tmp, out);
                }
            }
            (MemoryState::Tabulated { history }, MemoryKernel::Tabulated(tab)) => {
                // history holds u¹..uⁿ; lag of u^m at step n+1 is n+1−m
                let n = history.len();
                for (idx, u) in history.iter().enumerate() {
                    let lag = n - idx;
                    if let Some(q) = tab.samples.get(lag) {
                        q.apply_add(self.dt, u, out);
                    }
                }
            }
            _ => {}
        }
    }

    /// Current value `Rⁿ` held by the state.
    pub fn current(&self, state: &MemoryState, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match (state, &self.kernel) {
            (MemoryState::Prony { aux }, MemoryKernel::Prony(terms)) => {
                for (t, s) in terms.iter().zip(aux) {
                    t.weights.apply_add(1.0, s, out);
                }
            }
            (MemoryState::Tabulated { history }, MemoryKernel::Tabulated(tab)) => {
                let n = history.len();
                for (idx, u) in history.iter().enumerate() {
                    let lag = n - 1 - idx;
                    if let Some(q) = tab.samples.get(lag) {
                        q.apply_add(if lag == 0 { 0.5 * self.dt } else { self.dt }, u, out);
                    }
                }
            }
            _ => {}
        }
    }

    /// Records the step `uⁿ → uⁿ⁺¹`.
    pub fn commit(&self, state: &mut MemoryState, u_prev: &[f64], u_next: &[f64]) {
        match state {
            MemoryState::Prony { aux } => prony_advance(aux, &self.steps, u_prev, u_next),
            MemoryState::Tabulated { history } => history.push(u_next.to_vec()),
            MemoryState::Zero => {}
        }
    }
}

/// Per-trajectory memory bookkeeping: auxiliary states or stored history.
#[derive(Clone, Debug)]
pub enum MemoryState {
    Zero,
    Prony { aux: Vec<Vec<f64>> },
    Tabulated { history: Vec<Vec<f64>> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_grid, TabulatedKernel};

    fn scalar_prony(grid: &Grid) -> MemoryOperator {
        let q = MemoryKernel::Prony(vec![PronyTerm { tau: 1.0, weights: CellMatrices::identity(grid.n_cells(), 1) }]);
        MemoryOperator::new(q, grid, 1).unwrap()
    }

    #[test]
    fn zero_kernel_and_zero_history() {
        let g = build_grid(1, &[3], &[1.0], 0.1, 1.0).unwrap();
        let r = MemoryOperator::new(MemoryKernel::Zero, &g, 1).unwrap();
        let hist = vec![vec![1.0; 3]; 4];
        assert_eq!(r.apply_memory(&hist, 3).unwrap(), vec![0.0; 3]);
        let r = scalar_prony(&g);
        assert_eq!(r.apply_memory(&vec![vec![0.0; 3]; 4], 3).unwrap(), vec![0.0; 3]);
        assert!(matches!(r.apply_memory(&hist, 4), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn prony_recursion_is_exact_for_constant_input() {
        let g = build_grid(1, &[2], &[1.0], 0.05, 2.0).unwrap();
        let steps = [PronyStep::new(1.0, 0.05)];
        let mut aux = vec![vec![0.0; 2]];
        let one = vec![1.0; 2];
        for n in 1..=40 {
            prony_advance(&mut aux, &steps, &one, &one);
            let exact = 1.0 - (-(n as f64) * 0.05).exp();
            assert!((aux[0][0] - exact).abs() < 1e-14);
        }
        // u ≡ 1 for t ≥ 0 through apply_memory
        let r = scalar_prony(&g);
        let hist = vec![one.clone(); 41];
        let v = r.apply_memory(&hist, 40).unwrap();
        assert!((v[0] - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn small_step_coefficients_are_accurate() {
        for (tau, dt) in [(1.0, 1e-6), (1.0, 1e-3), (2.0, 0.5), (0.01, 1.0)] {
            let st = PronyStep::new(tau, dt);
            // constant input: α + β = τ(1 − e^{−dt/τ})
            let expect = -tau * (-dt / tau).exp_m1();
            assert!((st.alpha + st.beta - expect).abs() <= 1e-13 * expect);
            // linear input u(s) = s over [0, dt]: ∫ e^{−(dt−s)/τ} s ds = β dt
            let m = 20_000;
            let h = dt / m as f64;
            let f = |s: f64| (-(dt - s) / tau).exp() * s;
            let mut lin = f(0.0) + f(dt);
            for i in 1..m {
                lin += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            lin *= h / 3.0;
            assert!((st.beta * dt - lin).abs() <= 1e-9 * lin.abs(), "{tau} {dt}");
        }
    }

    #[test]
    fn tabulated_agrees_with_prony_to_second_order() {
        let mut errs = Vec::new();
        for dt in [0.04, 0.02, 0.01] {
            let g = build_grid(1, &[2], &[1.0], dt, 2.0).unwrap();
            let n = g.n_steps();
            let tab = TabulatedKernel::tabulate(2, 1, dt, n + 1, |_, t, _, _| (-t).exp());
            let rt = MemoryOperator::new(MemoryKernel::Tabulated(tab), &g, 1).unwrap();
            let rp = scalar_prony(&g);
            let hist: Vec<Vec<f64>> = (0..=n).map(|m| vec![(3.0 * g.time(m)).sin(); 2]).collect();
            let a = rt.apply_memory(&hist, n).unwrap()[0];
            let b = rp.apply_memory(&hist, n).unwrap()[0];
            errs.push((a - b).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn marching_state_matches_direct_evaluation() {
        let g = build_grid(1, &[3], &[1.0], 0.1, 1.0).unwrap();
        let tab = TabulatedKernel::tabulate(3, 1, 0.1, 6, |c, t, _, _| (1.0 + c as f64) * (1.0 - t));
        for r in [scalar_prony(&g), MemoryOperator::new(MemoryKernel::Tabulated(tab), &g, 1).unwrap()] {
            let hist: Vec<Vec<f64>> =
                (0..=10).map(|m| if m == 0 { vec![0.0; 3] } else { vec![m as f64, 1.0, -(m as f64)] }).collect();
            let mut st = r.start();
            let mut x = vec![0.0; 3];
            let mut cur = vec![0.0; 3];
            for n in 0..10 {
                r.history_part(&st, &hist[n], &mut x);
                r.lag_weight(0).apply_add(1.0, &hist[n + 1], &mut x);
                let direct = r.apply_memory(&hist, n + 1).unwrap();
                for (a, b) in x.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12);
                }
                r.commit(&mut st, &hist[n], &hist[n + 1]);
                r.current(&st, &mut cur);
                for (a, b) in cur.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12);
                }
                // convolution weights reproduce the same value
                let mut conv = vec![0.0; 3];
                for m in 1..=n + 1 {
                    r.lag_weight(n + 1 - m).apply_add(1.0, &hist[m], &mut conv);
                }
                for (a, b) in conv.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tabulated_spacing_must_match() {
        let g = build_grid(1, &[3], &[1.0], 0.1, 1.0).unwrap();
        let tab = TabulatedKernel::tabulate(3, 1, 0.05, 6, |_, _, _, _| 1.0);
        assert!(MemoryOperator::new(MemoryKernel::Tabulated(tab), &g, 1).is_err());
    }
}
