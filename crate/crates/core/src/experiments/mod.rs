//! Executable checks of the qualitative theory: analytic oracles, cone
//! leakage, convergence in measure and trace regularity.

mod cone;
mod oracles;
mod quadrature;
mod studies;

pub use cone::{cone_leak, ConeSpec};
pub use oracles::{acoustic_oracle, advection_oracle, advection_system, bump, oscillatory_source};
pub use quadrature::{adaptive_simpson, integrate};
pub use studies::{measure_convergence_study, trace_regularity_probe, StudyReport};

/// Least-squares slope of `y` against `x`; `None` with fewer than two points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    fit_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_power_laws() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|h| 3.0 * h * h).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_slope(&[(1.0, 1.0)]).is_none());
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }
}
