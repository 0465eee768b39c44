use super::*;
use crate::fields::{build_grid, Bounds, CoefficientField, MemoryKernel, PronyTerm, SourceTerm, Wavelet};
use crate::linalg::CellMatrices;
use crate::operators::{Boundary, DiscreteSystem};

fn acoustic_1d(cells: usize, dt: f64, t_end: f64, b: f64, q: MemoryKernel) -> DiscreteSystem {
    let g = build_grid(1, &[cells], &[1.0], dt, t_end).unwrap();
    let n = g.n_cells();
    let bm = CellMatrices::diagonal(n, 2, |_, r| if r == 0 { b } else { 0.0 });
    let field = CoefficientField::new(g, 2, CellMatrices::identity(n, 2), bm, q, Bounds::new(1.0, 1.0, 1.0, 10.0).unwrap())
        .unwrap();
    DiscreteSystem::new(field, &[vec![0.0, 1.0, 1.0, 0.0]], Boundary::AcousticFree).unwrap()
}

fn pulse(sys: &DiscreteSystem) -> Vec<f64> {
    let g = sys.grid();
    let mut u = vec![0.0; sys.state_len()];
    for cell in 0..g.n_cells() {
        let x = g.center(cell)[0];
        u[2 * cell] = (-((x - 0.5) / 0.05).powi(2)).exp();
    }
    u
}

fn point_source(sys: &DiscreteSystem, cell: usize, onset: f64) -> SourceTerm {
    let mut fp = vec![0.0; sys.state_len()];
    fp[2 * cell] = 1.0;
    SourceTerm::separable(fp, Wavelet::SinePower { onset, width: 0.2, power: 4 })
}

fn prony(n: usize, c: f64, tau: f64) -> MemoryKernel {
    MemoryKernel::Prony(vec![PronyTerm {
        tau,
        weights: CellMatrices::diagonal(n, 2, |_, r| if r == 0 { c } else { 0.0 }),
    }])
}

#[test]
fn zero_source_gives_zero_solution() {
    let sys = acoustic_1d(20, 0.01, 0.5, 0.0, prony(20, 1.0, 0.1));
    let tr = solve_causal(&sys, &SourceTerm::zero(sys.state_len()), &IntegratorConfig::default()).unwrap();
    assert!(tr.stored().iter().all(|u| u.iter().all(|v| *v == 0.0)));
    assert!(tr.energy().iter().all(|e| *e == 0.0));
}

#[test]
fn solution_vanishes_before_onset() {
    let sys = acoustic_1d(40, 0.01, 0.6, 0.5, prony(40, 1.0, 0.1));
    let src = point_source(&sys, 10, 0.3);
    for cfg in [IntegratorConfig::default(), IntegratorConfig::rk4()] {
        let tr = solve_causal(&sys, &src, &cfg).unwrap();
        for n in 0..=tr.n_steps() {
            if tr.time(n) < 0.3 {
                assert!(tr.state(n).unwrap().iter().all(|v| *v == 0.0), "step {n}");
            }
        }
        assert!(tr.max_norm() > 0.0);
    }
}

#[test]
fn midpoint_conserves_energy_without_damping() {
    let sys = acoustic_1d(200, 1e-3, 1.0, 0.0, MemoryKernel::Zero);
    let u0 = pulse(&sys);
    let cfg = IntegratorConfig::default().with_tolerance(1e-14);
    let tr = solve_ivp(&sys, &u0, 0.0, &SourceTerm::zero(sys.state_len()), &cfg).unwrap();
    assert_eq!(tr.n_steps(), 1000);
    let e0 = tr.energy()[0];
    let drift = tr.energy().iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
    assert!(drift <= 1e-10, "drift {drift:e}");
    let res = energy_identity_residual(&tr, &sys, &SourceTerm::zero(sys.state_len())).unwrap();
    assert!(res.iter().all(|r| r.abs() <= 1e-12));
}

#[test]
fn midpoint_is_reversible() {
    let sys = acoustic_1d(100, 2e-3, 0.2, 0.0, MemoryKernel::Zero);
    let back = sys.transposed().unwrap();
    let u0 = pulse(&sys);
    let cfg = IntegratorConfig::default().with_tolerance(1e-14);
    let zero = SourceTerm::zero(sys.state_len());
    let fwd = solve_ivp(&sys, &u0, 0.0, &zero, &cfg).unwrap();
    let rev = solve_ivp(&back, fwd.final_state(), 0.0, &zero, &cfg).unwrap();
    let err: f64 = rev.final_state().iter().zip(&u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-11, "{err:e}");
}

#[test]
fn ivp_with_memory_is_rejected() {
    let sys = acoustic_1d(10, 0.01, 0.1, 0.0, prony(10, 1.0, 1.0));
    let zero = SourceTerm::zero(sys.state_len());
    let err = solve_ivp(&sys, &vec![0.0; sys.state_len()], 0.0, &zero, &IntegratorConfig::default()).unwrap_err();
    assert!(matches!(err, crate::Error::Unsupported(_)));
}

#[test]
fn rk4_checks_the_cfl_limit() {
    let sys = acoustic_1d(100, 0.02, 0.1, 0.0, MemoryKernel::Zero);
    let src = point_source(&sys, 50, 0.0);
    match solve_causal(&sys, &src, &IntegratorConfig::rk4()) {
        Err(crate::Error::Stability { limit, suggested, .. }) => {
            assert!((limit - 0.5 * 0.01).abs() < 1e-12);
            assert_eq!(limit, suggested);
        }
        other => panic!("expected stability error, got {other:?}"),
    }
}

#[test]
fn rk4_and_midpoint_agree_with_memory() {
    let mut errs = Vec::new();
    for dt in [2e-3, 1e-3] {
        let sys = acoustic_1d(50, dt, 0.4, 0.3, prony(50, 2.0, 0.05));
        let src = point_source(&sys, 25, 0.05);
        let a = solve_causal(&sys, &src, &IntegratorConfig::default()).unwrap();
        let b = solve_causal(&sys, &src, &IntegratorConfig::rk4()).unwrap();
        errs.push(a.max_distance(&b).unwrap() / b.max_norm());
    }
    assert!(errs[0] < 1e-2, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn determinism() {
    let sys = acoustic_1d(30, 0.01, 0.3, 0.2, prony(30, 1.0, 0.1));
    let src = point_source(&sys, 5, 0.0);
    let a = solve_causal(&sys, &src, &IntegratorConfig::default()).unwrap();
    let b = solve_causal(&sys, &src, &IntegratorConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn energy_identity_residual_is_second_order_with_memory() {
    let mut maxes = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let sys = acoustic_1d(60, dt, 0.3, 0.5, prony(60, 3.0, 0.05));
        let src = point_source(&sys, 30, 0.0);
        let tr = solve_causal(&sys, &src, &IntegratorConfig::default()).unwrap();
        let r = energy_identity_residual(&tr, &sys, &src).unwrap();
        maxes.push(r.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    for w in maxes.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{maxes:?}");
    }
}

#[test]
fn smoothing_window_of_one_is_identity() {
    let sys = acoustic_1d(20, 0.01, 0.2, 0.0, MemoryKernel::Zero);
    let src = point_source(&sys, 5, 0.0);
    let tr = solve_causal(&sys, &src, &IntegratorConfig::default()).unwrap();
    let sm = smooth_trajectory(&tr, &sys, 1).unwrap();
    assert_eq!(sm.stored(), tr.stored());
    let sm = smooth_trajectory(&tr, &sys, 4).unwrap();
    assert_eq!(sm.n_steps(), tr.n_steps());
    assert!(graph_norm_series(&sm, &sys).unwrap().iter().all(|v| v.is_finite()));
}
