use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolution::{solve_causal, IntegratorConfig};
use crate::fields::{measure_distance, mollify_field, SourceTerm, Wavelet};
use crate::forward::{forward_map, Sampler};
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::log_log_slope;

/// Named metric series over a strictly monotone parameter schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub parameter_name: String,
    pub parameter: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub slope: Option<f64>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl StudyReport {
    pub fn new(name: &str, parameter_name: &str, parameter: Vec<f64>) -> Result<Self> {
        let inc = parameter.windows(2).all(|w| w[1] > w[0]);
        let dec = parameter.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::invalid(format!("{parameter_name} schedule must be strictly monotone")));
        }
        Ok(Self {
            name: name.into(),
            parameter_name: parameter_name.into(),
            parameter,
            series: BTreeMap::new(),
            slope: None,
            passed: false,
            notes: Vec::new(),
        })
    }

    pub fn series(&self, key: &str) -> Option<&[f64]> {
        self.series.get(key).map(|v| v.as_slice())
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Solves with `mollify_field(field, n)` for each `n` and compares with the
/// solution for the unmollified field. Series: `solution_distance`
/// (`maxₙ ‖u_n − u‖`), `measure_distance` (volume where `a` differs by more
/// than `eps`) and, with a sampler, `trace_distance` (max sample difference).
pub fn measure_convergence_study(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: Option<&Sampler>,
    schedule: &[usize],
    eps: f64,
    config: &IntegratorConfig,
) -> Result<StudyReport> {
    if schedule.len() < 3 {
        return Err(Error::invalid("measure convergence needs at least 3 mollification indices"));
    }
    let mut report =
        StudyReport::new("measure_convergence", "mollification_index", schedule.iter().map(|&n| n as f64).collect())?;
    let config = IntegratorConfig { stride: 1, ..config.clone() };
    let base = solve_causal(system, source, &config)?;
    let base_trace = sampler.map(|s| forward_map(system, source, s, &config)).transpose()?;
    let rows = schedule
        .par_iter()
        .map(|&n| -> Result<(f64, f64, Option<f64>)> {
            let field = mollify_field(system.field(), n)?;
            let sys = system.with_field(field.clone())?;
            let traj = solve_causal(&sys, source, &config)?;
            let dist = base.max_distance(&traj)?;
            let md = measure_distance(system.field(), &field, eps)?;
            let td = match (sampler, &base_trace) {
                (Some(s), Some(bt)) => Some(forward_map(&sys, source, s, &config)?.max_difference(bt)?),
                _ => None,
            };
            Ok((dist, md, td))
        })
        .collect::<Result<Vec<_>>>()?;
    let sol: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let meas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    report.slope = log_log_slope(&report.parameter, &sol);
    report.passed = strictly_decreasing(&sol);
    if !strictly_decreasing(&meas) {
        report.notes.push("measure distance is not strictly decreasing".into());
    }
    report.series.insert("solution_distance".into(), sol);
    report.series.insert("measure_distance".into(), meas);
    if sampler.is_some() {
        report.series.insert("trace_distance".into(), rows.iter().map(|r| r.2.unwrap_or(0.0)).collect());
    }
    Ok(report)
}

/// Largest `|Dʲ d|` over channels and steps, `Dʲ` the `j`-fold forward difference quotient.
fn max_difference_quotient(traces: &[Vec<f64>], dt: f64, order: usize) -> f64 {
    let mut worst = 0.0f64;
    for tr in traces {
        let mut cur = tr.clone();
        for _ in 0..order {
            cur = cur.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        }
        worst = cur.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    worst
}

/// For each power `s`, drives `footprint × sin^s` (a wavelet with `s`
/// square-integrable derivatives) over the time-step schedule and records
/// the largest discrete derivatives of the traces up to order `s − 1`.
/// Passes when the order `s − 1` series stays within a factor 2 of its
/// coarsest value.
#[allow(clippy::too_many_arguments)]
pub fn trace_regularity_probe(
    system: &DiscreteSystem,
    footprint: &[f64],
    sampler: &Sampler,
    powers: &[u32],
    wavelet_width: f64,
    dts: &[f64],
    config: &IntegratorConfig,
) -> Result<StudyReport> {
    if footprint.len() != system.state_len() {
        return Err(Error::DimensionMismatch { expected: system.state_len(), got: footprint.len() });
    }
    if powers.contains(&0) {
        return Err(Error::invalid("wavelet smoothness must be at least 1"));
    }
    let mut report = StudyReport::new("trace_regularity", "dt", dts.to_vec())?;
    let t_end = system.grid().t_end();
    let config = IntegratorConfig { stride: 1, ..config.clone() };
    let mut passed = true;
    for &s in powers {
        let wavelet = Wavelet::SinePower { onset: 0.0, width: wavelet_width, power: s };
        let source = SourceTerm::separable(footprint.to_vec(), wavelet);
        let per_dt = dts
            .par_iter()
            .map(|&dt| -> Result<Vec<f64>> {
                let sys = system.with_grid(system.grid().with_time(dt, t_end)?)?;
                let data = forward_map(&sys, &source, sampler, &config)?;
                let traces: Vec<Vec<f64>> = (0..data.n_channels()).map(|c| data.trace(c)).collect();
                Ok((0..s as usize).map(|j| max_difference_quotient(&traces, dt, j)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        for j in 0..s as usize {
            let series: Vec<f64> = per_dt.iter().map(|v| v[j]).collect();
            if j + 1 == s as usize {
                let first = series[0];
                let bounded = series.iter().all(|v| v.is_finite() && *v <= 2.0 * first.max(f64::MIN_POSITIVE));
                if !bounded {
                    report.notes.push(format!("s = {s}: derivative of order {j} grows under refinement"));
                }
                passed &= bounded || series.iter().all(|v| *v == 0.0);
            }
            report.series.insert(format!("s{s}_order{j}"), series);
        }
    }
    report.passed = passed;
    Ok(report)
}
