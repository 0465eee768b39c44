use roughwave::fields::{make_ricker_source, Bounds, CoefficientField, Grid, SourceTerm};
use roughwave::forward::{build_sampler, ReceiverGeometry, Sampler, TraceTag};
use roughwave::operators::DiscreteSystem;

use crate::config::{RunConfig, SourceSpec};
use crate::error::{CliError, Context};
use crate::model::{build_grid_from, build_system, read_model};

/// Everything a command needs, built once from the config.
pub struct Setup {
    pub grid: Grid,
    pub system: DiscreteSystem,
    pub sources: Vec<SourceTerm>,
    pub source_points: Vec<Vec<f64>>,
    pub sampler: Option<Sampler>,
}

pub fn build(cfg: &RunConfig) -> Result<Setup, CliError> {
    let grid = build_grid_from(&cfg.grid)?;
    let model = read_model(&cfg.model)?;
    let system = build_system(&model, &cfg.model, &grid, cfg.boundary)?;
    let k = system.k();
    let mut sources = Vec::new();
    let mut source_points = Vec::new();
    for (i, s) in cfg.sources.iter().enumerate() {
        let (src, x) = point_source(&grid, k, s).map_err(|e| CliError::Validation(format!("field `sources[{i}]`: {e}")))?;
        sources.push(src);
        source_points.push(x);
    }
    let sampler = cfg
        .receivers
        .as_ref()
        .map(|r| build_sampler(&r.geometry, r.tag.clone(), &grid, k))
        .transpose()
        .map_err(|e| CliError::Validation(format!("field `receivers`: {e}")))?;
    Ok(Setup { grid, system, sources, source_points, sampler })
}

fn point_source(grid: &Grid, k: usize, s: &SourceSpec) -> roughwave::Result<(SourceTerm, Vec<f64>)> {
    let cell = grid
        .locate(&s.position)
        .ok_or_else(|| roughwave::Error::InvalidArgument(format!("position {:?} lies outside the grid", s.position)))?;
    let src = make_ricker_source(grid, k, cell, s.component, s.peak_frequency, s.onset, s.amplitude)?;
    Ok((src, grid.center(cell)))
}

impl Setup {
    /// The configured sampler, or component 0 at the domain centre.
    pub fn sampler_or_default(&self) -> Result<Sampler, CliError> {
        if let Some(s) = &self.sampler {
            return Ok(s.clone());
        }
        let centre: Vec<f64> = self.grid.origin().iter().zip(self.grid.extent()).map(|(o, e)| o + 0.5 * e).collect();
        let k = self.system.k();
        let mut weights = vec![0.0; k];
        weights[0] = 1.0;
        build_sampler(&ReceiverGeometry::Points(vec![centre]), TraceTag::Custom { rows: 1, weights }, &self.grid, k)
            .context(|| "default receiver".into())
    }

    /// The system with a wider admissible set, for perturbation studies.
    pub fn widened(&self, bounds: Option<Bounds>) -> Result<DiscreteSystem, CliError> {
        let f = self.system.field();
        let b = match bounds {
            Some(b) => b,
            None => {
                let cur = f.bounds();
                Bounds::new(0.5 * cur.c_lower, 2.0 * cur.c_upper, cur.c_b + 1.0, cur.c_q + 1.0)
                    .context(|| "widening bounds".into())?
            }
        };
        let field: CoefficientField = f.with_bounds(b).context(|| "applying gradient bounds".into())?;
        self.system.with_field(field).context(|| "rebuilding the system".into())
    }
}
