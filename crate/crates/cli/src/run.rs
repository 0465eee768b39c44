use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use roughwave::evolution::{solve_causal, IntegratorConfig};
use roughwave::experiments::{measure_convergence_study, trace_regularity_probe, StudyReport};
use roughwave::fields::Bounds;
use roughwave::forward::{forward_map, SeismogramData};
use roughwave::io;
use roughwave::linalg::CellMatrices;
use roughwave::sensitivity::{dot_product_test, gradient, quotient_study, CoefficientPerturbation, GradientReport, KernelGradient};

use crate::check::{run_suite, sensitive_perturbation};
use crate::config::{Command, RunConfig, StudySpec};
use crate::error::{CliError, Context};
use crate::setup::{build, Setup};

const DOT_TOL: f64 = 1e-8;

/// Printed lines plus the names of failed checks.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let setup = build(cfg)?;
    fs::create_dir_all(&cfg.output_dir).context(|| format!("creating {}", cfg.output_dir.display()))?;
    match cfg.command {
        Command::Simulate => simulate(&setup, cfg),
        Command::Forward => forward(&setup, cfg),
        Command::Gradient => gradient_run(&setup, cfg),
        Command::Check => {
            let results = run_suite(&setup, cfg);
            let lines = results.iter().map(|r| r.line()).collect();
            let failures = results.iter().filter(|r| !r.passed).map(|r| r.name.to_string()).collect();
            Ok(Outcome { lines, failures })
        }
        Command::Study => study(&setup, cfg),
    }
}

fn shot_dir(cfg: &RunConfig, i: usize) -> Result<PathBuf, CliError> {
    let d = cfg.output_dir.join(format!("shot{i}"));
    fs::create_dir_all(&d).context(|| format!("creating {}", d.display()))?;
    Ok(d)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).context(|| format!("creating {}", path.display()))?))
}

fn simulate(setup: &Setup, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let config = IntegratorConfig { stride: cfg.snapshot_stride, ..cfg.integrator.clone() };
    let trajs = setup
        .sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| solve_causal(&setup.system, src, &config).context(|| format!("solving shot {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Outcome::default();
    for (i, traj) in trajs.iter().enumerate() {
        let dir = shot_dir(cfg, i)?;
        let times: Vec<f64> = (0..=traj.n_steps()).map(|n| traj.time(n)).collect();
        io::write_energy_csv(create(&dir.join("energy.csv"))?, &times, traj.energy()).context(|| "writing energy".into())?;
        io::write_frames(create(&dir.join("snapshots.rwf"))?, &setup.grid, setup.system.k(), traj.stored())
            .context(|| "writing snapshots".into())?;
        let e = traj.energy().last().copied().unwrap_or(0.0);
        out.lines.push(format!("shot {i}: {} steps, {} snapshots, final energy {e:.6e}", traj.n_steps(), traj.stored().len()));
    }
    Ok(out)
}

fn forward(setup: &Setup, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sampler = setup.sampler.as_ref().expect("validated config has receivers");
    let data = setup
        .sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| forward_map(&setup.system, src, sampler, &cfg.integrator).context(|| format!("forward map of shot {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Outcome::default();
    for (i, d) in data.iter().enumerate() {
        let dir = shot_dir(cfg, i)?;
        io::write_seismogram_csv(create(&dir.join("seismogram.csv"))?, d).context(|| "writing seismogram".into())?;
        io::write_seismogram_binary(create(&dir.join("seismogram.rwf"))?, d).context(|| "writing seismogram".into())?;
        out.lines.push(format!("shot {i}: {} channels, {} samples, max |d| = {:.6e}", d.n_channels(), d.n_steps() + 1, d.max_abs()));
    }
    Ok(out)
}

fn read_observed(path: &Path) -> Result<SeismogramData, CliError> {
    let f = File::open(path).context(|| format!("opening {}", path.display()))?;
    io::read_seismogram_csv(BufReader::new(f)).context(|| format!("reading {}", path.display()))
}

fn add_kernel(acc: &mut KernelGradient, g: &KernelGradient) {
    match (acc, g) {
        (KernelGradient::Prony(a), KernelGradient::Prony(b)) | (KernelGradient::Tabulated(a), KernelGradient::Tabulated(b)) => {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.add_scaled(1.0, y);
            }
        }
        _ => {}
    }
}

fn gradient_bounds(cfg: &RunConfig) -> Result<Option<Bounds>, CliError> {
    cfg.gradient_bounds
        .map(|b| Bounds::new(b.c_lower, b.c_upper, b.c_b, b.c_q))
        .transpose()
        .map_err(|e| CliError::Validation(format!("field `gradient_bounds`: {e}")))
}

fn gradient_run(setup: &Setup, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sampler = setup.sampler.as_ref().expect("validated config has receivers");
    let system = setup.widened(gradient_bounds(cfg)?)?;
    let config = IntegratorConfig { stride: 1, ..cfg.integrator.clone() };
    let observed: Vec<Option<SeismogramData>> = if cfg.observed.is_empty() {
        vec![None; setup.sources.len()]
    } else {
        cfg.observed.iter().map(|p| read_observed(p).map(Some)).collect::<Result<_, _>>()?
    };
    let reports = setup
        .sources
        .par_iter()
        .zip(&observed)
        .enumerate()
        .map(|(i, (src, obs))| -> Result<(GradientReport, SeismogramData), CliError> {
            let what = || format!("gradient of shot {i}");
            let pred = forward_map(&system, src, sampler, &config).context(what)?;
            let obs = obs.clone().unwrap_or_else(|| pred.clone());
            let residual = pred.add_scaled(-1.0, &obs).context(what)?;
            Ok((gradient(&system, src, sampler, &obs, &config).context(what)?, residual))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = reports[0].0.clone();
    for (r, _) in &reports[1..] {
        total.g_a = total.g_a.add_scaled(1.0, &r.g_a);
        total.g_b = total.g_b.add_scaled(1.0, &r.g_b);
        total.objective += r.objective;
        add_kernel(&mut total.g_q, &r.g_q);
    }

    // dot-product diagnostic on shot 0
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut residual = reports[0].1.clone();
    if residual.max_abs() == 0.0 {
        let samples = (0..=residual.n_steps()).map(|_| (0..residual.n_channels()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        residual = SeismogramData::new(residual.dt(), samples).context(|| "random residual".into())?;
    }
    let pert = sensitive_perturbation(&system, &setup.sources[0], sampler, &residual, &config, &mut rng)
        .context(|| "dot-product perturbation".into())?;
    let dot = dot_product_test(&system, &setup.sources[0], sampler, &pert, &residual, &config).context(|| "dot-product test".into())?;
    total.dot_residual = Some(dot.relative_error);

    io::save_gradient(&cfg.output_dir.join("gradient"), &setup.grid, &total).context(|| "writing gradient".into())?;
    let mut out = Outcome::default();
    out.lines.push(format!("J = {:.6e}", total.objective));
    out.lines.push(format!("max |gradient| = {:.6e}", total.max_abs()));
    out.lines.push(format!(
        "dot-product residual = {:.3e} (data side {:.9e}, model side {:.9e})",
        dot.relative_error, dot.data_side, dot.model_side
    ));
    if dot.relative_error > DOT_TOL {
        out.failures.push("dot_product".into());
    }
    Ok(out)
}

fn quotient_report(setup: &Setup, cfg: &RunConfig, schedule: &[f64], cell: usize) -> Result<StudyReport, CliError> {
    let system = setup.widened(gradient_bounds(cfg)?)?;
    let (n, k) = (setup.grid.n_cells(), system.k());
    if cell >= n {
        return Err(CliError::Validation(format!("field `study.cell`: {cell} is not below {n}")));
    }
    let block = CellMatrices::identity(1, k).scaled(system.field().bounds().c_lower).as_slice().to_vec();
    let pert = CoefficientPerturbation::a_bump(n, k, cell, &block);
    let table = quotient_study(&system, &setup.sources[0], &pert, schedule, &cfg.integrator).context(|| "quotient study".into())?;
    let mut report = StudyReport::new("newton_quotient", "h", schedule.to_vec()).context(|| "quotient study".into())?;
    report.series.insert("remainder".into(), table.rows.iter().map(|r| r.remainder.unwrap_or(f64::NAN)).collect());
    report.series.insert("derivative_norm".into(), vec![table.derivative_norm; schedule.len()]);
    report.notes = table.rows.iter().filter_map(|r| r.note.clone()).collect();
    report.slope = table.slope;
    report.passed = table.is_monotone_decreasing();
    Ok(report)
}

fn study(setup: &Setup, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.study.as_ref().expect("validated config has a study");
    let source = &setup.sources[0];
    let report = match spec {
        StudySpec::MeasureConvergence { schedule, eps } => {
            measure_convergence_study(&setup.system, source, setup.sampler.as_ref(), schedule, *eps, &cfg.integrator)
                .context(|| "measure convergence study".into())?
        }
        StudySpec::TraceRegularity { powers, width, dts } => {
            let sampler = setup.sampler_or_default()?;
            let x = &setup.source_points[0];
            let cell = setup.grid.locate(x).expect("source located at setup");
            let k = setup.system.k();
            let mut footprint = vec![0.0; setup.system.state_len()];
            footprint[cell * k + cfg.sources[0].component] = cfg.sources[0].amplitude / setup.grid.cell_volume();
            trace_regularity_probe(&setup.system, &footprint, &sampler, powers, *width, dts, &cfg.integrator)
                .context(|| "trace regularity probe".into())?
        }
        StudySpec::NewtonQuotient { schedule, cell } => quotient_report(setup, cfg, schedule, *cell)?,
    };
    io::write_study_json(create(&cfg.output_dir.join("study.json"))?, &report).context(|| "writing study".into())?;
    io::write_study_csv(create(&cfg.output_dir.join("study.csv"))?, &report).context(|| "writing study".into())?;
    let mut out = Outcome::default();
    out.lines.push(format!("study {}: {} points, slope {:?}", report.name, report.parameter.len(), report.slope));
    for (key, v) in &report.series {
        out.lines.push(format!("  {key}: {}", crate::check::fmt_list(v)));
    }
    out.lines.extend(report.notes.iter().map(|n| format!("  note: {n}")));
    out.lines.push(format!("{} {}", if report.passed { "PASS" } else { "FAIL" }, report.name));
    if !report.passed {
        out.failures.push(report.name.clone());
    }
    Ok(out)
}
