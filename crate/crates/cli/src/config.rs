//! Run configuration.
//!
//! A run is described by a JSON file:
//!
//! ```json
//! {
//!   "command": "forward",
//!   "model": "model.json",
//!   "grid": { "cells": [200], "extent": [1.0], "dt": 0.0025, "t_end": 1.0 },
//!   "sources": [{ "position": [0.3], "peak_frequency": 10.0 }],
//!   "receivers": { "geometry": { "Points": [[0.7]] }, "tag": "Pressure" }
//! }
//! ```
//!
//! `model` names a second JSON file (see [`ModelFile`]). Relative paths are
//! resolved against the directory of the config file. Optional fields:
//! `boundary` (`"AcousticFree"` or `"Periodic"`), `integrator`, `observed`
//! (one seismogram CSV per source), `output_dir`, `seed`, `leak_tolerance`,
//! `snapshot_stride`, `gradient_bounds` and `study`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use roughwave::evolution::IntegratorConfig;
use roughwave::forward::{ReceiverGeometry, TraceTag};
use roughwave::operators::Boundary;

use crate::error::CliError;

pub const COMMANDS: [&str; 5] = ["simulate", "forward", "gradient", "check", "study"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Forward,
    Gradient,
    Check,
    Study,
}

impl Command {
    pub fn parse(tag: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(tag.to_string()))
            .map_err(|_| CliError::Validation(format!("unknown command `{tag}`; valid commands: {}", COMMANDS.join(", "))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cells: Vec<usize>,
    /// One entry for a cube, else one per axis.
    pub extent: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
}

/// Ricker point source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub position: Vec<f64>,
    #[serde(default)]
    pub component: usize,
    pub peak_frequency: f64,
    #[serde(default)]
    pub onset: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    pub geometry: ReceiverGeometry,
    pub tag: TraceTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudySpec {
    /// Mollify the coefficients at each index and compare solutions.
    MeasureConvergence { schedule: Vec<usize>, eps: f64 },
    /// Wavelets `sin^s` of the given width over a time-step schedule.
    TraceRegularity { powers: Vec<u32>, width: f64, dts: Vec<f64> },
    /// Newton quotients of a one-cell bump of `a` in `cell`.
    NewtonQuotient { schedule: Vec<f64>, cell: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarBounds {
    pub c_lower: f64,
    pub c_upper: f64,
    pub c_b: f64,
    pub c_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: PathBuf,
    pub grid: GridSpec,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub receivers: Option<ReceiverSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub observed: Vec<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_leak_tolerance")]
    pub leak_tolerance: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Admissible set used by gradient finite differences and quotient studies.
    #[serde(default)]
    pub gradient_bounds: Option<ScalarBounds>,
    #[serde(default)]
    pub study: Option<StudySpec>,
}

fn default_boundary() -> Boundary {
    Boundary::AcousticFree
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_leak_tolerance() -> f64 {
    1e-6
}

fn default_stride() -> usize {
    10
}

/// Parses and validates a config file. Relative paths are resolved against
/// the file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    if let Some(tag) = value.get("command").and_then(|v| v.as_str()) {
        Command::parse(tag)?;
    }
    let mut cfg: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::Validation(format!("config schema: {e}")))?;
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    cfg.model = resolve(&cfg.model);
    cfg.observed = cfg.observed.iter().map(resolve).collect();
    cfg.output_dir = resolve(&cfg.output_dir);
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: &str| Err(CliError::Validation(format!("field `{field}`: {msg}")));
        if !self.model.is_file() {
            return bad("model", &format!("file {} does not exist", self.model.display()));
        }
        if self.grid.cells.is_empty() || self.grid.cells.len() > 3 {
            return bad("grid.cells", "needs 1 to 3 entries");
        }
        if !(self.grid.dt > 0.0) || !(self.grid.t_end > 0.0) {
            return bad("grid", "dt and t_end must be positive");
        }
        if self.integrator.validate().is_err() {
            return bad("integrator", "tolerance, iteration counts, stride and CFL safety must be positive");
        }
        if !(self.leak_tolerance > 0.0) {
            return bad("leak_tolerance", "must be positive");
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride", "must be positive");
        }
        let dim = self.grid.cells.len();
        for (i, s) in self.sources.iter().enumerate() {
            if s.position.len() != dim {
                return bad(&format!("sources[{i}].position"), &format!("needs {dim} coordinates"));
            }
        }
        let needs_source = !matches!(self.command, Command::Study) || self.study.is_some();
        if needs_source && self.sources.is_empty() {
            return bad("sources", "at least one source is required");
        }
        if matches!(self.command, Command::Forward | Command::Gradient) && self.receivers.is_none() {
            return bad("receivers", "required for forward and gradient runs");
        }
        if !self.observed.is_empty() && self.observed.len() != self.sources.len() {
            return bad("observed", "give one seismogram per source or none");
        }
        if let Some(p) = self.observed.iter().find(|p| !p.is_file()) {
            return bad("observed", &format!("file {} does not exist", p.display()));
        }
        if matches!(self.command, Command::Study) && self.study.is_none() {
            return bad("study", "required for study runs");
        }
        Ok(())
    }
}
