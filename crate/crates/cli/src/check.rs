//! Invariant suite for the configured system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roughwave::evolution::{energy_identity_residual, solve_causal, solve_ivp, IntegratorConfig, Scheme};
use roughwave::experiments::{cone_leak, log_log_slope, ConeSpec};
use roughwave::fields::{mollify_field, Bounds, CoefficientField, MemoryKernel, SourceTerm};
use roughwave::forward::{forward_map, Sampler, SeismogramData};
use roughwave::linalg::{dot, norm, CellMatrices};
use roughwave::operators::DiscreteSystem;
use roughwave::sensitivity::{dot_product_test, fd_check, gradient, CoefficientPerturbation};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::setup::Setup;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

const SKEW_TOL: f64 = 1e-12;
const DRIFT_TOL: f64 = 1e-10;
const DOT_TOL: f64 = 1e-8;
const FD_TOL: f64 = 1e-3;
const LINEARITY_TOL: f64 = 1e-12;

pub(crate) fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub(crate) fn random_sym(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    for r in 0..k {
        for c in r..k {
            let v = scale * rng.gen_range(-1.0..1.0);
            m[r * k + c] = v;
            m[c * k + r] = v;
        }
    }
    m
}

fn midpoint(cfg: &RunConfig) -> IntegratorConfig {
    IntegratorConfig { scheme: Scheme::ImplicitMidpoint, stride: 1, ..cfg.integrator.clone() }
}

fn fail(name: &'static str, e: impl std::fmt::Display) -> CheckResult {
    CheckResult::new(name, false, format!("error: {e}"))
}

fn skew_antisymmetry(sys: &DiscreteSystem, rng: &mut ChaCha8Rng) -> CheckResult {
    let n = sys.state_len();
    let (mut pu, mut pv) = (vec![0.0; n], vec![0.0; n]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u = random_vec(rng, n);
        let v = random_vec(rng, n);
        sys.skew().apply(&u, &mut pu);
        sys.skew().apply(&v, &mut pv);
        worst = worst.max((dot(&pu, &v) + dot(&u, &pv)).abs() / (norm(&u) * norm(&v)));
    }
    CheckResult::new("skew_antisymmetry", worst <= SKEW_TOL, format!("max relative defect {worst:.3e} over 100 pairs"))
}

fn coefficient_bounds(sys: &DiscreteSystem) -> CheckResult {
    match sys.field().validate() {
        Ok(()) => {
            let b = sys.field().bounds();
            CheckResult::new("coefficient_bounds", true, format!("a in [{:.4e}, {:.4e}], |b| <= {:.4e}", b.c_lower, b.c_upper, b.c_b))
        }
        Err(e) => fail("coefficient_bounds", e),
    }
}

fn conservative(sys: &DiscreteSystem) -> roughwave::Result<DiscreteSystem> {
    let f = sys.field();
    let n = f.grid().n_cells();
    let b = f.bounds();
    let field = CoefficientField::new(
        f.grid().clone(),
        f.k(),
        f.a().clone(),
        CellMatrices::zeros(n, f.k()),
        MemoryKernel::Zero,
        Bounds::new(b.c_lower, b.c_upper, 0.0, 0.0)?,
    )?;
    sys.with_field(field)
}

fn energy_conservation(sys: &DiscreteSystem, config: &IntegratorConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut run = || -> roughwave::Result<f64> {
        let cons = conservative(sys)?;
        let u0 = random_vec(rng, cons.state_len());
        let traj = solve_ivp(&cons, &u0, 0.0, &SourceTerm::zero(cons.state_len()), config)?;
        let e = traj.energy();
        Ok(e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max) / e[0])
    };
    match run() {
        Ok(d) => CheckResult::new("energy_conservation", d <= DRIFT_TOL, format!("relative drift {d:.3e} with b = q = 0")),
        Err(e) => fail("energy_conservation", e),
    }
}

fn energy_identity(sys: &DiscreteSystem, source: &SourceTerm, config: &IntegratorConfig) -> CheckResult {
    let run = || -> roughwave::Result<(Vec<f64>, Vec<f64>)> {
        let dt0 = sys.grid().dt();
        let t_end = sys.grid().t_end();
        let dts = [dt0, dt0 / 2.0, dt0 / 4.0];
        let mut res = Vec::new();
        for dt in dts {
            let s = sys.with_grid(sys.grid().with_time(dt, t_end)?)?;
            let traj = solve_causal(&s, source, config)?;
            let r = energy_identity_residual(&traj, &s, source)?;
            res.push(r.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        Ok((dts.to_vec(), res))
    };
    match run() {
        Ok((dts, res)) => {
            let tiny = res.iter().all(|r| *r <= 1e-14);
            let slope = log_log_slope(&dts, &res);
            let passed = tiny || slope.is_some_and(|s| s >= 1.9);
            let slope = slope.map_or("undefined".to_string(), |s| format!("{s:.3}"));
            CheckResult::new("energy_identity", passed, format!("max residuals {}, slope {slope}", fmt_list(&res)))
        }
        Err(e) => fail("energy_identity", e),
    }
}

fn causality(sys: &DiscreteSystem, source: &SourceTerm, config: &IntegratorConfig) -> CheckResult {
    let run = || -> roughwave::Result<(usize, bool)> {
        let traj = solve_causal(sys, source, config)?;
        let onset = source.onset();
        let states = traj.states()?;
        let before: Vec<&Vec<f64>> = states.iter().enumerate().filter(|(n, _)| traj.time(*n) <= onset).map(|(_, u)| u).collect();
        Ok((before.len(), before.iter().all(|u| u.iter().all(|v| *v == 0.0))))
    };
    match run() {
        Ok((n, ok)) => CheckResult::new("causality", ok, format!("{n} states at or before the onset are zero")),
        Err(e) => fail("causality", e),
    }
}

fn linearity(sys: &DiscreteSystem, source: &SourceTerm, setup: &Setup, config: &IntegratorConfig) -> CheckResult {
    let run = || -> Result<f64, CliError> {
        let s = setup.sampler_or_default()?;
        let d1 = forward_map(sys, source, &s, config).map_err(|e| CliError::Check(e.to_string()))?;
        let d2 = forward_map(sys, &source.scaled(2.0), &s, config).map_err(|e| CliError::Check(e.to_string()))?;
        let diff = d2.max_difference(&d1.scaled(2.0)).map_err(|e| CliError::Check(e.to_string()))?;
        Ok(diff / d1.max_abs().max(f64::MIN_POSITIVE))
    };
    match run() {
        Ok(r) => CheckResult::new("forward_linearity", r <= LINEARITY_TOL, format!("relative defect {r:.3e} when doubling the source")),
        Err(e) => fail("forward_linearity", e),
    }
}

fn cone(sys: &DiscreteSystem, source: &SourceTerm, x_src: &[f64], setup: &Setup, config: &IntegratorConfig, tol: f64) -> CheckResult {
    let grid = &setup.grid;
    let c_max = sys.max_wavespeed();
    let extent = grid.extent();
    let far: Vec<f64> = grid
        .origin()
        .iter()
        .zip(&extent)
        .zip(x_src)
        .map(|((o, e), x)| if x - o < 0.5 * e { o + 0.9 * e } else { o + 0.1 * e })
        .collect();
    let full = far.iter().zip(x_src).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let dist = full.min(0.8 * c_max * (grid.t_end() - source.onset()));
    let hmax = grid.h().iter().copied().fold(0.0, f64::max);
    if dist < 4.0 * hmax {
        return CheckResult::new("cone_leak", true, "skipped: no room for a cone inside the time window".into());
    }
    let far: Vec<f64> = x_src.iter().zip(&far).map(|(x, f)| x + (f - x) * dist / full).collect();
    let run = || -> roughwave::Result<f64> {
        let cone = ConeSpec::clear_of_source(x_src, source.onset(), far.clone(), c_max, 0.1)?;
        let traj = solve_causal(sys, source, config)?;
        cone_leak(&traj, &cone, sys)
    };
    match run() {
        Ok(l) => CheckResult::new("cone_leak", l <= tol, format!("energy share {l:.3e} in the cone at {far:.3?} (tolerance {tol:.1e})")),
        Err(e) => fail("cone_leak", e),
    }
}

fn largest_block(m: &CellMatrices) -> usize {
    let mut best = (0, -1.0);
    for cell in 0..m.n_cells() {
        let v: f64 = m.block(cell).iter().map(|x| x * x).sum();
        if v > best.1 {
            best = (cell, v);
        }
    }
    best.0
}

/// Random blocks in `a` and `b`, placed in the cells where the gradient for
/// `residual` is largest so that both sides of the dot test sit far above
/// round-off.
pub(crate) fn sensitive_perturbation(
    sys: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    residual: &SeismogramData,
    config: &IntegratorConfig,
    rng: &mut ChaCha8Rng,
) -> roughwave::Result<CoefficientPerturbation> {
    let pred = forward_map(sys, source, sampler, config)?;
    let g = gradient(sys, source, sampler, &pred.add_scaled(-1.0, residual)?, config)?;
    let (n, k) = (sys.grid().n_cells(), sys.k());
    let block = random_sym(rng, k, 0.1 * sys.field().bounds().c_lower);
    let mut p = CoefficientPerturbation::a_bump(n, k, largest_block(&g.g_a), &block);
    let db: Vec<f64> = (0..k * k).map(|_| 0.1 * rng.gen_range(-1.0..1.0)).collect();
    p.db.block_mut(largest_block(&g.g_b)).copy_from_slice(&db);
    Ok(p)
}

fn adjoint_checks(
    setup: &Setup,
    source: &SourceTerm,
    bounds: Option<Bounds>,
    config: &IntegratorConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<CheckResult> {
    let mut run = || -> Result<(f64, f64), CliError> {
        let err = |e: roughwave::Error| CliError::Check(e.to_string());
        let sys = setup.widened(bounds)?;
        let s = setup.sampler_or_default()?;
        let n_steps = sys.grid().n_steps();
        let residual = SeismogramData::new(
            sys.grid().dt(),
            (0..=n_steps).map(|_| random_vec(rng, s.n_channels())).collect(),
        )
        .map_err(err)?;
        let pert = sensitive_perturbation(&sys, source, &s, &residual, config, rng).map_err(err)?;
        let dot = dot_product_test(&sys, source, &s, &pert, &residual, config).map_err(err)?;
        let observed = SeismogramData::zeros(sys.grid().dt(), n_steps, s.n_channels());
        let g = gradient(&sys, source, &s, &observed, config).map_err(err)?;
        let pairing = g.pairing(&pert).map_err(err)?;
        let fd = fd_check(&sys, source, &s, &observed, &pert, [1e-2, 1e-3, 1e-4], pairing, config).map_err(err)?;
        Ok((dot.relative_error, fd.relative_error))
    };
    match run() {
        Ok((d, f)) => vec![
            CheckResult::new("dot_product", d <= DOT_TOL, format!("relative residual {d:.3e}")),
            CheckResult::new("finite_difference", f <= FD_TOL, format!("relative error {f:.3e}")),
        ],
        Err(e) => vec![fail("dot_product", &e), fail("finite_difference", &e)],
    }
}

fn mollification(sys: &DiscreteSystem) -> CheckResult {
    let run = || -> roughwave::Result<()> {
        for n in [2, 4, 8] {
            mollify_field(sys.field(), n)?.validate()?;
        }
        Ok(())
    };
    match run() {
        Ok(()) => CheckResult::new("mollification_bounds", true, "mollified fields keep symmetry and bounds for n = 2, 4, 8".into()),
        Err(e) => fail("mollification_bounds", e),
    }
}

pub fn run_suite(setup: &Setup, cfg: &RunConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let config = midpoint(cfg);
    let sys = &setup.system;
    let source = &setup.sources[0];
    let bounds = cfg.gradient_bounds.and_then(|b| Bounds::new(b.c_lower, b.c_upper, b.c_b, b.c_q).ok());
    let mut out = vec![
        skew_antisymmetry(sys, &mut rng),
        coefficient_bounds(sys),
        energy_conservation(sys, &config, &mut rng),
        energy_identity(sys, source, &config),
        causality(sys, source, &config),
        linearity(sys, source, setup, &config),
        cone(sys, source, &setup.source_points[0], setup, &config, cfg.leak_tolerance),
    ];
    out.extend(adjoint_checks(setup, source, bounds, &config, &mut rng));
    out.push(mollification(sys));
    out
}
