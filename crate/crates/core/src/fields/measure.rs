use serde::{Deserialize, Serialize};

use super::coefficient::CoefficientField;
use crate::{Error, Result};

/// Which coefficient `measure_distance_of` compares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureTarget {
    A,
    B,
    /// `∫₀^horizon |q₁ − q₂|`, entrywise max, by fine trapezoid quadrature.
    KernelL1 { horizon: f64 },
}

const KERNEL_QUAD_POINTS: usize = 512;

/// Volume of the cells where the `a` parts differ by more than `eps`
/// (max-norm over entries).
pub fn measure_distance(f1: &CoefficientField, f2: &CoefficientField, eps: f64) -> Result<f64> {
    measure_distance_of(f1, f2, eps, MeasureTarget::A)
}

pub fn measure_distance_of(f1: &CoefficientField, f2: &CoefficientField, eps: f64, target: MeasureTarget) -> Result<f64> {
    f1.grid().check_same_space(f2.grid())?;
    if f1.k() != f2.k() {
        return Err(Error::DimensionMismatch { expected: f1.k(), got: f2.k() });
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let k = f1.k();
    let n = f1.grid().n_cells();
    let vol = f1.grid().cell_volume();
    let gap = |cell: usize| -> f64 {
        match target {
            MeasureTarget::A => max_diff(f1.a().block(cell), f2.a().block(cell)),
            MeasureTarget::B => max_diff(f1.b().block(cell), f2.b().block(cell)),
            MeasureTarget::KernelL1 { horizon } => {
                let dt = horizon / KERNEL_QUAD_POINTS as f64;
                let mut acc = vec![0.0; k * k];
                let mut prev = vec![0.0; k * k];
                for i in 0..=KERNEL_QUAD_POINTS {
                    let t = i as f64 * dt;
                    let q1 = f1.q().eval(cell, k, t);
                    let q2 = f2.q().eval(cell, k, t);
                    let cur: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| (a - b).abs()).collect();
                    if i > 0 {
                        for ((s, a), b) in acc.iter_mut().zip(&prev).zip(&cur) {
                            *s += 0.5 * dt * (a + b);
                        }
                    }
                    prev = cur;
                }
                acc.into_iter().fold(0.0, f64::max)
            }
        }
    };
    Ok((0..n).filter(|&cell| gap(cell) > eps).count() as f64 * vol)
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
