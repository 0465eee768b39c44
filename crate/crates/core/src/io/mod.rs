//! File formats.
//!
//! Binary arrays use the `RWF1` layout: the magic bytes, then `dim`, `k` and
//! the cell count per axis as little-endian `u64`, then little-endian `f64`
//! records to the end of the file. A coefficient array stores one row-major
//! `k×k` block per cell; a frame file stores one length-`k` vector per cell
//! per frame. Text outputs are CSV and JSON.

mod binary;
mod text;

pub use binary::{
    load_field, load_matrices, read_frames, read_rwf, read_seismogram_binary, save_field, save_gradient, save_matrices,
    write_frames, write_rwf, write_seismogram_binary, FieldManifest, RwfHeader,
};
pub use text::{
    read_seismogram_csv, write_coo, write_energy_csv, write_seismogram_csv, write_study_csv, write_study_json,
};
