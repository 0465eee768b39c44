use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::{Error, Result};

/// Causal temporal signature of a source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Wavelet {
    Zero,
    /// Ricker pulse centred `2 / peak_frequency` after the onset, cut to zero before it.
    Ricker { peak_frequency: f64, onset: f64 },
    /// `sin^power(π (t − onset) / width)` on `[onset, onset + width]`, else 0.
    SinePower { onset: f64, width: f64, power: u32 },
    /// Samples at `onset + n dt`, linearly interpolated, zero outside.
    Sampled { onset: f64, dt: f64, values: Vec<f64> },
}

impl Wavelet {
    pub fn ricker_delay(peak_frequency: f64) -> f64 {
        2.0 / peak_frequency
    }

    pub fn onset(&self) -> f64 {
        match self {
            Wavelet::Zero => f64::INFINITY,
            Wavelet::Ricker { onset, .. } | Wavelet::SinePower { onset, .. } | Wavelet::Sampled { onset, .. } => *onset,
        }
    }

    /// Declared number of square-integrable derivatives of the analytic form.
    pub fn smoothness(&self) -> u32 {
        match self {
            Wavelet::Zero => u32::MAX,
            Wavelet::Ricker { .. } => 4,
            Wavelet::SinePower { power, .. } => *power,
            Wavelet::Sampled { .. } => 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Wavelet::Zero => 0.0,
            Wavelet::Ricker { peak_frequency, onset } => {
                if t < *onset {
                    return 0.0;
                }
                let s = PI * peak_frequency * (t - onset - Self::ricker_delay(*peak_frequency));
                let s2 = s * s;
                (1.0 - 2.0 * s2) * (-s2).exp()
            }
            Wavelet::SinePower { onset, width, power } => {
                let x = (t - onset) / width;
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                (PI * x).sin().powi(*power as i32)
            }
            Wavelet::Sampled { onset, dt, values } => {
                let x = (t - onset) / dt;
                if x < 0.0 || values.is_empty() {
                    return 0.0;
                }
                let i = x.floor() as usize;
                let frac = x - i as f64;
                match (values.get(i), values.get(i + 1)) {
                    (Some(a), Some(b)) => (1.0 - frac) * a + frac * b,
                    (Some(a), None) if frac == 0.0 => *a,
                    _ => 0.0,
                }
            }
        }
    }
}

type FieldFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
struct FieldSource {
    onset: f64,
    smoothness: u32,
    f: FieldFn,
}

/// Distributed source `f(t)` as a sum of `footprint × wavelet` terms, plus an
/// optional general space-time term for data that do not separate.
#[derive(Clone)]
pub struct SourceTerm {
    len: usize,
    terms: Vec<(Vec<f64>, Wavelet)>,
    field: Vec<FieldSource>,
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceTerm")
            .field("len", &self.len)
            .field("terms", &self.terms.len())
            .field("field_terms", &self.field.len())
            .field("onset", &self.onset())
            .finish()
    }
}

impl SourceTerm {
    pub fn zero(len: usize) -> Self {
        Self { len, terms: Vec::new(), field: Vec::new() }
    }

    pub fn separable(footprint: Vec<f64>, wavelet: Wavelet) -> Self {
        let len = footprint.len();
        Self { len, terms: vec![(footprint, wavelet)], field: Vec::new() }
    }

    /// General source; `f(t, out)` overwrites `out` with the source at `t` and
    /// must leave it zero for `t < onset`.
    pub fn from_fn(len: usize, onset: f64, smoothness: u32, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self { len, terms: Vec::new(), field: vec![FieldSource { onset, smoothness, f: Arc::new(f) }] }
    }

    pub fn plus(mut self, other: SourceTerm) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch { expected: self.len, got: other.len });
        }
        self.terms.extend(other.terms);
        self.field.extend(other.field);
        Ok(self)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let terms = self.terms.iter().map(|(fp, w)| (fp.iter().map(|v| alpha * v).collect(), w.clone())).collect();
        let field = self
            .field
            .iter()
            .map(|fs| {
                let inner = fs.f.clone();
                FieldSource {
                    onset: fs.onset,
                    smoothness: fs.smoothness,
                    f: Arc::new(move |t: f64, out: &mut [f64]| {
                        inner(t, out);
                        out.iter_mut().for_each(|v| *v *= alpha);
                    }),
                }
            })
            .collect();
        Self { len: self.len, terms, field }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.field.is_empty()
            && self.terms.iter().all(|(fp, w)| matches!(w, Wavelet::Zero) || fp.iter().all(|v| *v == 0.0))
    }

    /// Earliest time at which the source may be nonzero (`+∞` for a zero source).
    pub fn onset(&self) -> f64 {
        let t = self.terms.iter().filter(|(fp, _)| fp.iter().any(|v| *v != 0.0)).map(|(_, w)| w.onset());
        let f = self.field.iter().map(|fs| fs.onset);
        t.chain(f).fold(f64::INFINITY, f64::min)
    }

    pub fn smoothness(&self) -> u32 {
        let t = self.terms.iter().map(|(_, w)| w.smoothness());
        let f = self.field.iter().map(|fs| fs.smoothness);
        t.chain(f).min().unwrap_or(u32::MAX)
    }

    pub fn wavelets(&self) -> impl Iterator<Item = &Wavelet> {
        self.terms.iter().map(|(_, w)| w)
    }

    /// Writes `f(t)` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (fp, w) in &self.terms {
            let s = w.eval(t);
            if s != 0.0 {
                for (o, f) in out.iter_mut().zip(fp) {
                    *o += s * f;
                }
            }
        }
        if !self.field.is_empty() {
            let mut tmp = vec![0.0; self.len];
            for fs in &self.field {
                if t >= fs.onset {
                    fs.f.as_ref()(t, &mut tmp);
                    for (o, v) in out.iter_mut().zip(&tmp) {
                        *o += v;
                    }
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.eval_into(t, &mut out);
        out
    }
}

/// Ricker point source in one cell and one component. The footprint is
/// `amplitude / cell_volume`, so the source integrates to `amplitude` in space.
pub fn make_ricker_source(
    grid: &Grid,
    k: usize,
    cell: usize,
    component: usize,
    peak_frequency: f64,
    onset: f64,
    amplitude: f64,
) -> Result<SourceTerm> {
    if cell >= grid.n_cells() || component >= k {
        return Err(Error::invalid(format!("source cell {cell} / component {component} out of range")));
    }
    if !(peak_frequency > 0.0) || !(onset >= 0.0) {
        return Err(Error::invalid("Ricker source needs peak frequency > 0 and onset >= 0"));
    }
    let mut footprint = vec![0.0; grid.state_len(k)];
    footprint[cell * k + component] = amplitude / grid.cell_volume();
    Ok(SourceTerm::separable(footprint, Wavelet::Ricker { peak_frequency, onset }))
}

/// Logs a warning when fewer than ten cells per dominant wavelength are available.
pub fn check_resolution(grid: &Grid, peak_frequency: f64, max_speed: f64) -> bool {
    let hmax = grid.h().iter().copied().fold(0.0, f64::max);
    let cells_per_wavelength = max_speed / peak_frequency / hmax;
    if cells_per_wavelength < 10.0 {
        log::warn!("source resolved by only {cells_per_wavelength:.1} cells per wavelength");
        false
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_grid;

    #[test]
    fn ricker_is_causal_and_zero_mean() {
        let w = Wavelet::Ricker { peak_frequency: 5.0, onset: 0.3 };
        assert_eq!(w.eval(0.29), 0.0);
        assert_eq!(w.eval(-1.0), 0.0);
        assert!((w.eval(0.3 + 0.4) - 1.0).abs() < 1e-15);
        // composite Simpson over the effective support
        let (a, b, n) = (0.3, 1.5, 20_000);
        let h = (b - a) / n as f64;
        let mut s = w.eval(a) + w.eval(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * w.eval(a + i as f64 * h);
        }
        assert!((s * h / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_gives_zero_source() {
        let g = build_grid(1, &[10], &[1.0], 0.01, 1.0).unwrap();
        let s = make_ricker_source(&g, 2, 4, 0, 10.0, 0.0, 0.0).unwrap();
        assert!(s.is_zero());
        assert!(s.eval(0.2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sine_power_and_sampled() {
        let w = Wavelet::SinePower { onset: 1.0, width: 2.0, power: 3 };
        assert_eq!(w.eval(0.999), 0.0);
        assert!((w.eval(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(w.smoothness(), 3);
        let s = Wavelet::Sampled { onset: 0.0, dt: 0.5, values: vec![0.0, 1.0, 3.0] };
        assert!((s.eval(0.75) - 2.0).abs() < 1e-15);
        assert_eq!(s.eval(1.0), 3.0);
        assert_eq!(s.eval(1.1), 0.0);
    }

    #[test]
    fn footprint_integrates_to_amplitude() {
        let g = build_grid(2, &[8, 8], &[2.0], 0.01, 1.0).unwrap();
        let s = make_ricker_source(&g, 3, 10, 0, 4.0, 0.0, 2.0).unwrap();
        let t_peak = 0.5;
        let total: f64 = s.eval(t_peak).iter().sum::<f64>() * g.cell_volume();
        assert!((total - 2.0).abs() < 1e-12);
        assert_eq!(s.onset(), 0.0);
    }

    #[test]
    fn general_sources_add() {
        let a = SourceTerm::from_fn(2, 0.5, 2, |t, out| {
            out[0] = t;
            out[1] = 0.0;
        });
        let b = SourceTerm::separable(vec![0.0, 1.0], Wavelet::SinePower { onset: 0.0, width: 1.0, power: 2 });
        let s = a.plus(b).unwrap();
        assert_eq!(s.onset(), 0.0);
        assert_eq!(s.smoothness(), 2);
        let v = s.eval(0.5);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        assert_eq!(s.eval(0.25)[0], 0.0);
        assert!((s.scaled(2.0).eval(0.5)[0] - 1.0).abs() < 1e-15);
    }
}
