//! Grids, per-cell coefficient fields, memory kernels, sources, and the
//! mollification and measure utilities used by the continuity studies.

mod coefficient;
mod grid;
mod kernel;
mod measure;
mod mollify;
mod source;

pub use coefficient::{Bounds, CoefficientField};
pub use grid::{build_grid, Grid};
pub use kernel::{MemoryKernel, PronyTerm, TabulatedKernel};
pub use measure::{measure_distance, measure_distance_of, MeasureTarget};
pub use mollify::{hat_weights, mollify_field, mollify_values};
pub use source::{check_resolution, make_ricker_source, SourceTerm, Wavelet};
