use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fields::{Bounds, CoefficientField, Grid, MemoryKernel};
use crate::forward::SeismogramData;
use crate::linalg::CellMatrices;
use crate::sensitivity::{GradientReport, KernelGradient};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"RWF1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RwfHeader {
    pub dim: usize,
    pub k: usize,
    pub cells: Vec<usize>,
}

impl RwfHeader {
    pub fn for_grid(grid: &Grid, k: usize) -> Self {
        Self { dim: grid.dim(), k, cells: grid.cells().to_vec() }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    fn matches(&self, grid: &Grid, k: usize) -> Result<()> {
        if self.dim != grid.dim() || self.cells != grid.cells() || self.k != k {
            return Err(Error::GridMismatch(format!(
                "file holds dim {} k {} cells {:?}, expected dim {} k {k} cells {:?}",
                self.dim,
                self.k,
                self.cells,
                grid.dim(),
                grid.cells()
            )));
        }
        Ok(())
    }
}

pub fn write_rwf(mut w: impl Write, header: &RwfHeader, data: &[f64]) -> Result<()> {
    if header.cells.len() != header.dim {
        return Err(Error::invalid("header needs one cell count per axis"));
    }
    w.write_all(MAGIC)?;
    for v in [header.dim, header.k].iter().chain(&header.cells) {
        w.write_all(&(*v as u64).to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Format("header value overflows".into()))
}

pub fn read_rwf(mut r: impl Read) -> Result<(RwfHeader, Vec<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("file too short for a header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let dim = read_u64(&mut r)?;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim} not in 1..=3")));
    }
    let k = read_u64(&mut r)?;
    let cells = (0..dim).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format("payload is not a whole number of f64 values".into()));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((RwfHeader { dim, k, cells }, data))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_matrices(path: &Path, grid: &Grid, m: &CellMatrices) -> Result<()> {
    if m.n_cells() != grid.n_cells() {
        return Err(Error::DimensionMismatch { expected: grid.n_cells(), got: m.n_cells() });
    }
    write_rwf(create(path)?, &RwfHeader::for_grid(grid, m.k()), m.as_slice())
}

pub fn load_matrices(path: &Path, grid: &Grid, k: usize) -> Result<CellMatrices> {
    let (h, data) = read_rwf(open(path)?)?;
    h.matches(grid, k)?;
    if data.len() != grid.n_cells() * k * k {
        return Err(Error::Format(format!("{}: expected {} values, found {}", path.display(), grid.n_cells() * k * k, data.len())));
    }
    CellMatrices::from_vec(k, data)
}

/// Per-step frames of `k` values per cell.
pub fn write_frames(w: impl Write, grid: &Grid, k: usize, frames: &[Vec<f64>]) -> Result<()> {
    let len = grid.state_len(k);
    if let Some(f) = frames.iter().find(|f| f.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: f.len() });
    }
    let flat: Vec<f64> = frames.concat();
    write_rwf(w, &RwfHeader::for_grid(grid, k), &flat)
}

pub fn read_frames(r: impl Read) -> Result<(RwfHeader, Vec<Vec<f64>>)> {
    let (h, data) = read_rwf(r)?;
    let len = h.n_cells() * h.k;
    if len == 0 || data.len() % len != 0 {
        return Err(Error::Format("payload is not a whole number of frames".into()));
    }
    Ok((h, data.chunks(len).map(|c| c.to_vec()).collect()))
}

/// Seismograms as frames over a 1D "grid" of channels with `k = 1`.
pub fn write_seismogram_binary(w: impl Write, data: &SeismogramData) -> Result<()> {
    let header = RwfHeader { dim: 1, k: 1, cells: vec![data.n_channels()] };
    write_rwf(w, &header, &data.samples().concat())
}

pub fn read_seismogram_binary(r: impl Read, dt: f64) -> Result<SeismogramData> {
    let (h, frames) = read_frames(r)?;
    if h.dim != 1 || h.k != 1 {
        return Err(Error::Format("seismogram files have dim 1 and k 1".into()));
    }
    SeismogramData::new(dt, frames)
}

/// JSON manifest written next to the binary arrays of a coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub dim: usize,
    pub k: usize,
    pub cells: Vec<usize>,
    pub h: Vec<f64>,
    pub origin: Vec<f64>,
    pub bounds: Bounds,
    pub units: BTreeMap<String, String>,
    pub a_file: String,
    pub b_file: String,
    pub kernel: MemoryKernel,
}

fn sibling(path: &Path, suffix: &str) -> (PathBuf, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    let name = format!("{stem}.{suffix}.rwf");
    (path.with_file_name(&name), name)
}

/// Writes `path` (JSON manifest) plus `<stem>.a.rwf` and `<stem>.b.rwf` beside it.
pub fn save_field(path: &Path, field: &CoefficientField, units: BTreeMap<String, String>) -> Result<()> {
    let grid = field.grid();
    let (a_path, a_file) = sibling(path, "a");
    let (b_path, b_file) = sibling(path, "b");
    save_matrices(&a_path, grid, field.a())?;
    save_matrices(&b_path, grid, field.b())?;
    let manifest = FieldManifest {
        dim: grid.dim(),
        k: field.k(),
        cells: grid.cells().to_vec(),
        h: grid.h().to_vec(),
        origin: grid.origin().to_vec(),
        bounds: field.bounds(),
        units,
        a_file,
        b_file,
        kernel: field.q().clone(),
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.flush()?;
    Ok(())
}

/// Reads a field saved by [`save_field`] onto `grid` (same spatial layout).
pub fn load_field(path: &Path, grid: &Grid) -> Result<CoefficientField> {
    let manifest: FieldManifest = serde_json::from_reader(open(path)?)?;
    if manifest.dim != grid.dim() || manifest.cells != grid.cells() {
        return Err(Error::GridMismatch(format!("{} describes cells {:?}, grid has {:?}", path.display(), manifest.cells, grid.cells())));
    }
    let a = load_matrices(&path.with_file_name(&manifest.a_file), grid, manifest.k)?;
    let b = load_matrices(&path.with_file_name(&manifest.b_file), grid, manifest.k)?;
    CoefficientField::new(grid.clone(), manifest.k, a, b, manifest.kernel, manifest.bounds)
}

#[derive(Serialize)]
struct GradientDiagnostics<'a> {
    objective: f64,
    dot_residual: Option<f64>,
    fd_table: &'a [crate::sensitivity::FdRow],
    max_abs: f64,
    kernel_files: Vec<String>,
}

/// Writes `g_a.rwf`, `g_b.rwf`, one `g_q<j>.rwf` per kernel parameter block and
/// `gradient.json` with the scalar diagnostics into `dir`.
pub fn save_gradient(dir: &Path, grid: &Grid, report: &GradientReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_matrices(&dir.join("g_a.rwf"), grid, &report.g_a)?;
    save_matrices(&dir.join("g_b.rwf"), grid, &report.g_b)?;
    let blocks: &[CellMatrices] = match &report.g_q {
        KernelGradient::None => &[],
        KernelGradient::Prony(v) | KernelGradient::Tabulated(v) => v,
    };
    let mut kernel_files = Vec::new();
    for (j, m) in blocks.iter().enumerate() {
        let name = format!("g_q{j}.rwf");
        save_matrices(&dir.join(&name), grid, m)?;
        kernel_files.push(name);
    }
    let diag = GradientDiagnostics {
        objective: report.objective,
        dot_residual: report.dot_residual,
        fd_table: &report.fd_table,
        max_abs: report.max_abs(),
        kernel_files,
    };
    let mut w = create(&dir.join("gradient.json"))?;
    serde_json::to_writer_pretty(&mut w, &diag)?;
    w.flush()?;
    Ok(())
}
