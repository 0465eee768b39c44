use serde::{Deserialize, Serialize};

use crate::fields::Grid;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

use super::seismogram::SeismogramData;

/// Which combination of state components a receiver records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TraceTag {
    /// Component 0 of an acoustic state `(p, v)`.
    Pressure,
    /// `n · v` on the trailing `d` velocity components.
    NormalVelocity { normal: Vec<f64> },
    /// Arbitrary `l × k` weight matrix, row-major.
    Custom { rows: usize, weights: Vec<f64> },
}

/// Receiver positions: an explicit list or `count` points evenly spaced on a
/// segment (endpoints included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReceiverGeometry {
    Points(Vec<Vec<f64>>),
    Line { start: Vec<f64>, end: Vec<f64>, count: usize },
}

impl ReceiverGeometry {
    pub fn positions(&self) -> Vec<Vec<f64>> {
        match self {
            ReceiverGeometry::Points(p) => p.clone(),
            ReceiverGeometry::Line { start, end, count } => {
                let n = *count;
                (0..n)
                    .map(|i| {
                        let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        start.iter().zip(end).map(|(a, b)| a + s * (b - a)).collect()
                    })
                    .collect()
            }
        }
    }
}

/// Linear map from a state to receiver values: multilinear interpolation onto
/// cell centres followed by the per-receiver weight rows `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    tag: TraceTag,
    positions: Vec<Vec<f64>>,
    k: usize,
    rows_per_receiver: usize,
    matrix: CsrMatrix,
}

fn weight_rows(tag: &TraceTag, dim: usize, k: usize) -> Result<(usize, Vec<f64>)> {
    match tag {
        TraceTag::Pressure => {
            if k != dim + 1 {
                return Err(Error::invalid(format!("pressure traces need an acoustic state of width {}, got {k}", dim + 1)));
            }
            let mut m = vec![0.0; k];
            m[0] = 1.0;
            Ok((1, m))
        }
        TraceTag::NormalVelocity { normal } => {
            if normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: normal.len() });
            }
            if k < dim + 1 {
                return Err(Error::invalid("normal-velocity traces need a velocity block"));
            }
            let len = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(len > 0.0) {
                return Err(Error::invalid("receiver normal must be nonzero"));
            }
            let mut m = vec![0.0; k];
            for (j, nj) in normal.iter().enumerate() {
                m[k - dim + j] = nj / len;
            }
            Ok((1, m))
        }
        TraceTag::Custom { rows, weights } => {
            if *rows == 0 || weights.len() != rows * k {
                return Err(Error::DimensionMismatch { expected: rows * k, got: weights.len() });
            }
            log::warn!("custom trace weights are not checked for trace continuity");
            Ok((*rows, weights.clone()))
        }
    }
}

/// Interpolation stencil `(cell, weight)` of a point; clamped to the outermost
/// cell centres near the boundary.
fn stencil(grid: &Grid, x: &[f64]) -> Vec<(usize, f64)> {
    let dim = grid.dim();
    let mut per_axis = Vec::with_capacity(dim);
    for axis in 0..dim {
        let n = grid.cells()[axis];
        let mut rel = (x[axis] - grid.origin()[axis]) / grid.h()[axis] - 0.5;
        if (rel - rel.round()).abs() < 1e-9 {
            rel = rel.round();
        }
        if n == 1 {
            per_axis.push(vec![(0usize, 1.0)]);
            continue;
        }
        let i0 = (rel.floor().max(0.0) as usize).min(n - 2);
        let frac = (rel - i0 as f64).clamp(0.0, 1.0);
        let mut pts = vec![(i0, 1.0 - frac)];
        if frac > 0.0 {
            pts.push((i0 + 1, frac));
        }
        per_axis.push(pts);
    }
    let mut out = vec![(Vec::new(), 1.0)];
    for pts in &per_axis {
        out = out
            .into_iter()
            .flat_map(|(idx, w): (Vec<usize>, f64)| {
                pts.iter().map(move |&(i, wi)| {
                    let mut idx = idx.clone();
                    idx.push(i);
                    (idx, w * wi)
                })
            })
            .collect();
    }
    out.into_iter().filter(|(_, w)| *w != 0.0).map(|(idx, w)| (grid.linear_index(&idx), w)).collect()
}

pub fn build_sampler(geometry: &ReceiverGeometry, tag: TraceTag, grid: &Grid, k: usize) -> Result<Sampler> {
    let positions = geometry.positions();
    let dim = grid.dim();
    let (rows, m) = weight_rows(&tag, dim, k)?;
    let mut triplets = Vec::new();
    for (index, x) in positions.iter().enumerate() {
        if x.len() != dim || !grid.contains(x) {
            return Err(Error::ReceiverOutside { index, position: x.clone() });
        }
        for (cell, w) in stencil(grid, x) {
            for r in 0..rows {
                for c in 0..k {
                    let v = m[r * k + c];
                    if v != 0.0 {
                        triplets.push((index * rows + r, cell * k + c, w * v));
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(positions.len() * rows, grid.state_len(k), triplets);
    Ok(Sampler { tag, positions, k, rows_per_receiver: rows, matrix })
}

impl Sampler {
    pub fn tag(&self) -> &TraceTag {
        &self.tag
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Rows `l` recorded per receiver.
    pub fn rows_per_receiver(&self) -> usize {
        self.rows_per_receiver
    }

    /// Total number of recorded channels.
    pub fn n_channels(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn state_len(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

pub fn apply_sampler(s: &Sampler, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != s.state_len() {
        return Err(Error::DimensionMismatch { expected: s.state_len(), got: u.len() });
    }
    let mut out = vec![0.0; s.n_channels()];
    s.matrix.matvec(u, &mut out);
    Ok(out)
}

/// `Sᵀ rⁿ` for every time step of the residual.
pub fn sampler_adjoint_source(s: &Sampler, residual: &SeismogramData) -> Result<Vec<Vec<f64>>> {
    if residual.n_channels() != s.n_channels() {
        return Err(Error::DimensionMismatch { expected: s.n_channels(), got: residual.n_channels() });
    }
    Ok(residual
        .samples()
        .iter()
        .map(|r| {
            let mut out = vec![0.0; s.state_len()];
            s.matrix.transpose_matvec(r, &mut out);
            out
        })
        .collect())
}
