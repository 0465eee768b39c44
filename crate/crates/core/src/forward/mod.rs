//! Receiver traces of a solution and the forward map from coefficients to data.

mod sampler;
mod seismogram;

pub use sampler::{apply_sampler, build_sampler, sampler_adjoint_source, ReceiverGeometry, Sampler, TraceTag};
pub use seismogram::{forward_map, forward_map_with_trajectory, record, SeismogramData};
