use serde::{Deserialize, Serialize};

use crate::evolution::{solve_causal, IntegratorConfig, Trajectory};
use crate::fields::SourceTerm;
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::sampler::{apply_sampler, Sampler};

/// Receiver data `d(channel, tₙ)`, `n = 0..=N`, stored per time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeismogramData {
    dt: f64,
    samples: Vec<Vec<f64>>,
}

impl SeismogramData {
    pub fn new(dt: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("seismogram dt must be positive"));
        }
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        Ok(Self { dt, samples })
    }

    pub fn zeros(dt: f64, n_steps: usize, n_channels: usize) -> Self {
        Self { dt, samples: vec![vec![0.0; n_channels]; n_steps + 1] }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn n_channels(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|n| n as f64 * self.dt).collect()
    }

    /// Time series of one channel.
    pub fn trace(&self, channel: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[channel]).collect()
    }

    pub fn check_axes(&self, other: &SeismogramData) -> Result<()> {
        if self.samples.len() != other.samples.len() || self.n_channels() != other.n_channels() {
            return Err(Error::GridMismatch(format!(
                "seismograms differ: {} x {} vs {} x {}",
                self.samples.len(),
                self.n_channels(),
                other.samples.len(),
                other.n_channels()
            )));
        }
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::GridMismatch(format!("seismogram dt {} vs {}", self.dt, other.dt)));
        }
        Ok(())
    }

    /// `self + alpha · other` on matching axes.
    pub fn add_scaled(&self, alpha: f64, other: &SeismogramData) -> Result<Self> {
        self.check_axes(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + alpha * y).collect())
            .collect();
        Ok(Self { dt: self.dt, samples })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { dt: self.dt, samples: self.samples.iter().map(|s| s.iter().map(|v| alpha * v).collect()).collect() }
    }

    /// Discrete `L²` inner product `Σₙ dt ⟨dⁿ, eⁿ⟩`.
    pub fn inner(&self, other: &SeismogramData) -> Result<f64> {
        self.check_axes(other)?;
        let s: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| crate::linalg::dot(a, b)).sum();
        Ok(self.dt * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute sample-wise difference.
    pub fn max_difference(&self, other: &SeismogramData) -> Result<f64> {
        self.check_axes(other)?;
        Ok(self.samples.iter().flatten().zip(other.samples.iter().flatten()).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Records a trajectory through a sampler.
pub fn record(trajectory: &Trajectory, sampler: &Sampler) -> Result<SeismogramData> {
    let samples = trajectory.states()?.iter().map(|u| apply_sampler(sampler, u)).collect::<Result<Vec<_>>>()?;
    SeismogramData::new(trajectory.dt(), samples)
}

/// Causal solve followed by sampling at every step.
pub fn forward_map(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    config: &IntegratorConfig,
) -> Result<SeismogramData> {
    forward_map_with_trajectory(system, source, sampler, config).map(|(d, _)| d)
}

pub fn forward_map_with_trajectory(
    system: &DiscreteSystem,
    source: &SourceTerm,
    sampler: &Sampler,
    config: &IntegratorConfig,
) -> Result<(SeismogramData, Trajectory)> {
    if sampler.state_len() != system.state_len() {
        return Err(Error::DimensionMismatch { expected: system.state_len(), got: sampler.state_len() });
    }
    if source.smoothness() < 2 {
        log::warn!("source smoothness {} is below 2; traces may not depend smoothly on the coefficients", source.smoothness());
    }
    let config = IntegratorConfig { stride: 1, ..config.clone() };
    let traj = solve_causal(system, source, &config)?;
    Ok((record(&traj, sampler)?, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_grid, make_ricker_source, Wavelet};
    use crate::forward::{build_sampler, ReceiverGeometry, TraceTag};
    use crate::operators::Boundary;
    use crate::physics::{acoustics_system, AcousticModel};

    fn setup(cells: usize, t_end: f64) -> (DiscreteSystem, Sampler) {
        let g = build_grid(1, &[cells], &[2.0], 0.5 * 2.0 / cells as f64, t_end).unwrap();
        let m = AcousticModel::homogeneous(cells, 1.0, 1.0).unwrap();
        let sys = acoustics_system(&m, &g, Boundary::AcousticFree).unwrap();
        let s = build_sampler(&ReceiverGeometry::Points(vec![vec![1.5]]), TraceTag::Pressure, &g, 2).unwrap();
        (sys, s)
    }

    #[test]
    fn zero_source_gives_zero_data() {
        let (sys, s) = setup(50, 0.2);
        let src = SourceTerm::zero(sys.state_len());
        let d = forward_map(&sys, &src, &s, &IntegratorConfig::default()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
        assert_eq!(d.n_steps(), sys.grid().n_steps());
    }

    #[test]
    fn first_arrival_follows_the_wavespeed() {
        let cells = 400;
        let (sys, s) = setup(cells, 1.2);
        let g = sys.grid().clone();
        let src_cell = g.locate(&[0.5]).unwrap();
        let freq = 10.0;
        let src = make_ricker_source(&g, 2, src_cell, 0, freq, 0.0, 1.0).unwrap();
        let d = forward_map(&sys, &src, &s, &IntegratorConfig::default()).unwrap();
        let tr = d.trace(0);
        let peak = tr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let first = tr.iter().position(|v| v.abs() > 1e-3 * peak).unwrap() as f64 * d.dt();
        // distance 1 at speed 1; onset-to-peak of the wavelet is 2/f
        let width = 2.0 / freq;
        let travel = (g.center(src_cell)[0] - 1.5).abs();
        assert!(first >= travel - 0.02 && first <= travel + width, "first arrival {first}");
    }

    #[test]
    fn data_scale_linearly_with_the_source() {
        let (sys, s) = setup(60, 0.5);
        let src = SourceTerm::separable(
            (0..sys.state_len()).map(|i| if i == 40 { 1.0 } else { 0.0 }).collect(),
            Wavelet::SinePower { onset: 0.0, width: 0.2, power: 3 },
        );
        let cfg = IntegratorConfig::default();
        let d1 = forward_map(&sys, &src, &s, &cfg).unwrap();
        let d3 = forward_map(&sys, &src.scaled(3.0), &s, &cfg).unwrap();
        let diff = d3.add_scaled(-3.0, &d1).unwrap().max_abs();
        assert!(diff <= 1e-11 * d3.max_abs());
        assert!(d1.max_abs() > 0.0);
    }
}
