//! Discrete operators of the evolution problem `A u' + P u + B u + R[u] = f`.

mod mass;
mod memory;
mod skew;
mod speed;
mod system;

pub use mass::{assemble_mass, energy, MassOperator};
pub use memory::{prony_advance, MemoryOperator, MemoryState, PronyStep};
pub use skew::{assemble_skew, mirror_parity, Boundary, SkewOperator};
pub use speed::{characteristic_speeds, max_characteristic_speed, unit_directions};
pub use system::DiscreteSystem;
