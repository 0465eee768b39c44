use std::path::Path;

use serde::{Deserialize, Serialize};

use roughwave::experiments::advection_system;
use roughwave::fields::{build_grid, Grid, MemoryKernel, PronyTerm};
use roughwave::io::load_field;
use roughwave::linalg::CellMatrices;
use roughwave::operators::{Boundary, DiscreteSystem};
use roughwave::physics::{acoustic_symbols, acoustics_system, elastic_symbols, mandel_size, viscoelastic_system};
use roughwave::physics::{AcousticModel, ViscoelasticModel};

use crate::config::GridSpec;
use crate::error::{CliError, Context};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSpec {
    pub tau: f64,
    /// Multiple of the identity on the stress block.
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Physics {
    Acoustic,
    Elastic,
}

/// Contents of the model file named by a run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFile {
    Acoustic { kappa: f64, rho: f64 },
    /// Layers along axis 0; `layers[i] = [kappa, rho]`.
    AcousticLayered { interfaces: Vec<f64>, layers: Vec<(f64, f64)> },
    Viscoelastic {
        lambda: f64,
        mu: f64,
        rho: f64,
        #[serde(default)]
        relaxation: Vec<RelaxationSpec>,
    },
    Advection { speed: f64 },
    /// A coefficient field written by `roughwave::io::save_field`.
    Field { manifest: std::path::PathBuf, physics: Physics },
}

pub fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path).context(|| format!("reading model {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("model {}: {e}", path.display())))
}

pub fn build_grid_from(spec: &GridSpec) -> Result<Grid, CliError> {
    let g = build_grid(spec.cells.len(), &spec.cells, &spec.extent, spec.dt, spec.t_end)
        .map_err(|e| CliError::Validation(format!("field `grid`: {e}")))?;
    match &spec.origin {
        Some(o) => g.with_origin(o).map_err(|e| CliError::Validation(format!("field `grid.origin`: {e}"))),
        None => Ok(g),
    }
}

pub fn build_system(model: &ModelFile, model_path: &Path, grid: &Grid, boundary: Boundary) -> Result<DiscreteSystem, CliError> {
    let n = grid.n_cells();
    let what = || "building the model".to_string();
    match model {
        ModelFile::Acoustic { kappa, rho } => {
            let m = AcousticModel::homogeneous(n, *kappa, *rho).context(what)?;
            acoustics_system(&m, grid, boundary).context(what)
        }
        ModelFile::AcousticLayered { interfaces, layers } => {
            let m = AcousticModel::layered(grid, interfaces, layers).context(what)?;
            acoustics_system(&m, grid, boundary).context(what)
        }
        ModelFile::Viscoelastic { lambda, mu, rho, relaxation } => {
            let dim = grid.dim();
            let gamma = if relaxation.is_empty() {
                MemoryKernel::Zero
            } else {
                let m = mandel_size(dim);
                MemoryKernel::Prony(
                    relaxation
                        .iter()
                        .map(|r| PronyTerm { tau: r.tau, weights: CellMatrices::diagonal(n, m, |_, _| r.weight) })
                        .collect(),
                )
            };
            let m = ViscoelasticModel::isotropic(dim, n, *lambda, *mu, *rho, gamma).context(what)?;
            viscoelastic_system(&m, grid, boundary).context(what)
        }
        ModelFile::Advection { speed } => advection_system(grid, *speed).context(what),
        ModelFile::Field { manifest, physics } => {
            let path = if manifest.is_absolute() {
                manifest.clone()
            } else {
                model_path.parent().unwrap_or(Path::new(".")).join(manifest)
            };
            let field = load_field(&path, grid).context(|| format!("loading field {}", path.display()))?;
            let symbols = match physics {
                Physics::Acoustic => acoustic_symbols(grid.dim()),
                Physics::Elastic => elastic_symbols(grid.dim()),
            };
            DiscreteSystem::new(field, &symbols, boundary).context(what)
        }
    }
}
