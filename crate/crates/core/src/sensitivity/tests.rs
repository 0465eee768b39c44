use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::evolution::{solve_causal, Trajectory};
use crate::fields::{build_grid, CoefficientField, Grid, MemoryKernel, PronyTerm, SourceTerm, TabulatedKernel, Wavelet};
use crate::forward::{build_sampler, forward_map, ReceiverGeometry, SeismogramData, TraceTag};
use crate::linalg::CellMatrices;
use crate::operators::{Boundary, DiscreteSystem};
use crate::physics::acoustic_symbols;

fn acoustic_1d(cells: usize, steps: usize, b: f64, q: MemoryKernel) -> DiscreteSystem {
    let dt = 0.4 / cells as f64;
    let g = build_grid(1, &[cells], &[1.0], dt, dt * steps as f64).unwrap();
    let a = CellMatrices::diagonal(cells, 2, |c, r| 1.0 + 0.3 * ((c * 7 + r) as f64).sin().abs());
    let bm = CellMatrices::from_fn(cells, 2, |c, r, s| if r == s { b } else { 0.1 * b * ((c + 3 * r + s) as f64).cos() });
    let field = CoefficientField::with_inferred_bounds(g, 2, a, bm, q).unwrap();
    let wide = crate::fields::Bounds::new(0.1, 10.0, 10.0, 10.0).unwrap();
    DiscreteSystem::new(field.with_bounds(wide).unwrap(), &acoustic_symbols(1), Boundary::AcousticFree).unwrap()
}

fn source(g: &Grid, k: usize, cell: usize) -> SourceTerm {
    let mut fp = vec![0.0; g.state_len(k)];
    fp[cell * k] = 1.0 / g.cell_volume();
    SourceTerm::separable(fp, Wavelet::SinePower { onset: 0.0, width: 0.1, power: 4 })
}

fn prony(n: usize, k: usize, c: f64) -> MemoryKernel {
    MemoryKernel::Prony(vec![PronyTerm { tau: 0.05, weights: CellMatrices::diagonal(n, k, |_, _| c) }])
}

fn random_residual(rng: &mut ChaCha8Rng, dt: f64, n_steps: usize, channels: usize) -> SeismogramData {
    let samples = (0..=n_steps).map(|_| (0..channels).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    SeismogramData::new(dt, samples).unwrap()
}

fn random_pert(rng: &mut ChaCha8Rng, sys: &DiscreteSystem) -> CoefficientPerturbation {
    let (n, k) = (sys.grid().n_cells(), sys.k());
    let da = CellMatrices::from_fn(n, k, |c, r, s| {
        let v = ((c * 31 + r * 7 + s * 7) as f64 * 0.37).sin();
        if r == s { v } else { 0.5 * v }
    });
    let vals: Vec<f64> = (0..n * k * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let db = CellMatrices::from_vec(k, vals).unwrap();
    let dq = match sys.field().q() {
        MemoryKernel::Prony(t) => MemoryKernel::Prony(
            t.iter().map(|t| PronyTerm { tau: t.tau, weights: CellMatrices::diagonal(n, k, |c, r| ((c + r) as f64).cos()) }).collect(),
        ),
        MemoryKernel::Tabulated(tab) => MemoryKernel::Tabulated(TabulatedKernel {
            dt: tab.dt,
            samples: tab.samples.iter().map(|_| CellMatrices::diagonal(n, k, |c, r| ((c * 3 + r) as f64).sin())).collect(),
        }),
        MemoryKernel::Zero => MemoryKernel::Zero,
    };
    CoefficientPerturbation { da, db, dq }
}

#[test]
fn zero_perturbation_gives_zero_derivative() {
    let sys = acoustic_1d(40, 30, 0.5, prony(40, 2, 1.0));
    let src = source(sys.grid(), 2, 10);
    let base = solve_causal(&sys, &src, &Default::default()).unwrap();
    let du = directional_derivative(&sys, &base, &CoefficientPerturbation::zeros(40, 2), &Default::default()).unwrap();
    assert_eq!(du.max_norm(), 0.0);
}

#[test]
fn derivative_is_linear_in_the_perturbation() {
    let sys = acoustic_1d(40, 30, 0.2, prony(40, 2, 0.5));
    let src = source(sys.grid(), 2, 10);
    let base = solve_causal(&sys, &src, &Default::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_pert(&mut rng, &sys);
    let d1 = directional_derivative(&sys, &base, &p, &Default::default()).unwrap();
    let d2 = directional_derivative(&sys, &base, &p.scaled(2.0), &Default::default()).unwrap();
    let diff: Vec<Vec<f64>> = d2.states().unwrap().iter().zip(d1.states().unwrap()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - 2.0 * y).collect()).collect();
    assert!(trajectory_sup_norm(&diff, 1.0) <= 1e-10 * d2.max_norm());
}

#[test]
fn objective_arithmetic() {
    let f = SeismogramData::new(1.0, vec![vec![0.0]]).unwrap();
    let d = SeismogramData::new(1.0, vec![vec![2.0]]).unwrap();
    assert_eq!(objective(&f, &d).unwrap(), 2.0);
    assert_eq!(objective(&d, &d).unwrap(), 0.0);
    let d3 = SeismogramData::new(1.0, vec![vec![6.0]]).unwrap();
    assert_eq!(objective(&f, &d3).unwrap(), 9.0 * 2.0);
}

#[test]
fn toy_gradient_contraction() {
    // two unit cells; only cell 0 carries a signal
    let g = build_grid(1, &[2], &[2.0], 0.1, 0.1).unwrap();
    let field = CoefficientField::with_inferred_bounds(g.clone(), 1, CellMatrices::identity(2, 1), CellMatrices::zeros(2, 1), MemoryKernel::Zero).unwrap();
    let sys = DiscreteSystem::new(field, &[vec![0.0]], Boundary::Periodic).unwrap();
    let u = Trajectory {
        grid: g,
        k: 1,
        t0: 0.0,
        stride: 1,
        states: vec![vec![0.0, 0.0], vec![0.3, 0.0]],
        energy: vec![0.0, 0.045],
        scheme: Default::default(),
        onset: 0.0,
    };
    let adj = AdjointState::from_w(0.1, 1.0, vec![vec![2.0, 0.0]]);
    let rep = assemble_gradient(&u, &adj, &sys).unwrap();
    assert!((rep.g_a.block(0)[0] - 0.6).abs() < 1e-14);
    assert_eq!(rep.g_a.block(1)[0], 0.0);
    let zero = AdjointState::from_w(0.1, 1.0, vec![vec![0.0, 0.0]]);
    assert_eq!(assemble_gradient(&u, &zero, &sys).unwrap().max_abs(), 0.0);
}

#[test]
fn zero_residual_gives_zero_adjoint_and_gradient() {
    let sys = acoustic_1d(30, 20, 0.3, prony(30, 2, 1.0));
    let src = source(sys.grid(), 2, 5);
    let s = build_sampler(&ReceiverGeometry::Points(vec![vec![0.7]]), TraceTag::Pressure, sys.grid(), 2).unwrap();
    let cfg = Default::default();
    let d = forward_map(&sys, &src, &s, &cfg).unwrap();
    let rep = gradient(&sys, &src, &s, &d, &cfg).unwrap();
    assert_eq!(rep.objective, 0.0);
    assert_eq!(rep.max_abs(), 0.0);
    let adj = adjoint_solve(&sys, &SeismogramData::zeros(sys.grid().dt(), 20, 1), &s, &cfg).unwrap();
    assert_eq!(adj.max_abs(), 0.0);
    assert!(adj.w(21).iter().all(|v| *v == 0.0));
}

#[test]
fn gradient_blocks_for_a_are_symmetric() {
    let sys = acoustic_1d(30, 25, 0.3, MemoryKernel::Zero);
    let src = source(sys.grid(), 2, 5);
    let s = build_sampler(&ReceiverGeometry::Points(vec![vec![0.6]]), TraceTag::Pressure, sys.grid(), 2).unwrap();
    let d = SeismogramData::zeros(sys.grid().dt(), 25, 1);
    let rep = gradient(&sys, &src, &s, &d, &Default::default()).unwrap();
    for cell in 0..30 {
        let b = rep.g_a.block(cell);
        assert_eq!(b[1], b[2]);
    }
    assert!(rep.objective > 0.0);
}

fn dot_case(sys: &DiscreteSystem, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = source(sys.grid(), sys.k(), 3);
    let s = build_sampler(&ReceiverGeometry::Points(vec![vec![0.55], vec![0.8]]), TraceTag::Pressure, sys.grid(), 2).unwrap();
    let r = random_residual(&mut rng, sys.grid().dt(), sys.grid().n_steps(), 2);
    let p = random_pert(&mut rng, sys);
    dot_product_test(sys, &src, &s, &p, &r, &Default::default()).unwrap().relative_error
}

#[test]
fn dot_product_test_without_memory() {
    assert!(dot_case(&acoustic_1d(40, 40, 0.4, MemoryKernel::Zero), 3) < 1e-9);
}

#[test]
fn dot_product_test_with_prony_memory() {
    assert!(dot_case(&acoustic_1d(40, 40, 0.4, prony(40, 2, 2.0)), 4) < 1e-9);
}

#[test]
fn dot_product_test_with_tabulated_memory() {
    let dt = 0.4 / 40.0;
    let q = MemoryKernel::Tabulated(TabulatedKernel::tabulate(40, 2, dt, 12, |_, t, r, c| if r == c { (-t / 0.05).exp() } else { 0.0 }));
    assert!(dot_case(&acoustic_1d(40, 40, 0.4, q), 5) < 1e-9);
}

#[test]
fn gradient_matches_finite_differences() {
    let sys = acoustic_1d(40, 60, 0.3, prony(40, 2, 1.0));
    let src = source(sys.grid(), 2, 5);
    let s = build_sampler(&ReceiverGeometry::Points(vec![vec![0.7]]), TraceTag::Pressure, sys.grid(), 2).unwrap();
    let cfg = Default::default();
    let d = forward_map(&sys, &src, &s, &cfg).unwrap().scaled(0.5);
    let rep = gradient(&sys, &src, &s, &d, &cfg).unwrap();
    let p = CoefficientPerturbation::a_bump(40, 2, 15, &[1.0, 0.0, 0.0, 0.5]);
    let row = fd_check(&sys, &src, &s, &d, &p, [1e-2, 1e-3, 1e-4], rep.pairing(&p).unwrap(), &cfg).unwrap();
    assert!(row.relative_error < 1e-4, "{row:?}");
}

#[test]
fn newton_quotients_converge() {
    let sys = acoustic_1d(40, 60, 0.0, MemoryKernel::Zero);
    let src = source(sys.grid(), 2, 10);
    let p = CoefficientPerturbation::a_bump(40, 2, 20, &[0.5, 0.0, 0.0, 0.0]);
    let t = quotient_study(&sys, &src, &p, &[1e-1, 1e-2, 1e-3], &Default::default()).unwrap();
    assert!(t.is_monotone_decreasing(), "{t:?}");
    assert!(t.slope.unwrap() > 0.9);
    let z = quotient_study(&sys, &src, &CoefficientPerturbation::zeros(40, 2), &[1e-1, 1e-2], &Default::default()).unwrap();
    assert!(z.rows.iter().all(|r| r.remainder == Some(0.0)));
    let far = quotient_study(&sys, &src, &p, &[100.0], &Default::default()).unwrap();
    assert!(far.rows[0].remainder.is_none());
}

#[test]
fn rk4_is_rejected_for_derivatives() {
    let sys = acoustic_1d(20, 10, 0.0, MemoryKernel::Zero);
    let src = source(sys.grid(), 2, 5);
    let base = solve_causal(&sys, &src, &Default::default()).unwrap();
    let err = directional_derivative(&sys, &base, &CoefficientPerturbation::zeros(20, 2), &crate::evolution::IntegratorConfig::rk4());
    assert!(matches!(err, Err(crate::Error::Unsupported(_))));
}
