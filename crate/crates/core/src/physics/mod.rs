//! Acoustic and viscoelastic material models mapped onto discrete systems.

mod acoustics;
mod viscoelastic;

pub use acoustics::{acoustic_symbols, acoustics_system, AcousticModel};
pub use viscoelastic::{
    elastic_symbols, isotropic_compliance, isotropic_stiffness, mandel_pairs, mandel_size, strain_symbol,
    tensor_to_mandel, viscoelastic_system, ViscoelasticModel,
};

use crate::operators::DiscreteSystem;

/// Anything with a largest signal speed.
pub trait WaveSpeed {
    fn max_wavespeed(&self) -> f64;
}

impl WaveSpeed for AcousticModel {
    fn max_wavespeed(&self) -> f64 {
        AcousticModel::max_wavespeed(self)
    }
}

impl WaveSpeed for ViscoelasticModel {
    fn max_wavespeed(&self) -> f64 {
        ViscoelasticModel::max_wavespeed(self)
    }
}

impl WaveSpeed for DiscreteSystem {
    fn max_wavespeed(&self) -> f64 {
        DiscreteSystem::max_wavespeed(self)
    }
}

pub fn max_wavespeed(x: &impl WaveSpeed) -> f64 {
    x.max_wavespeed()
}

/// Smallest eigenvalue of `s a + Σ p_i ξ_i` over cells and sampled unit `ξ`.
/// Nonnegative exactly when `s` bounds every characteristic speed.
pub fn speed_margin(system: &DiscreteSystem, s: f64) -> f64 {
    let k = system.k();
    let a = system.field().a();
    let dirs = crate::operators::unit_directions(system.grid().dim());
    let mut worst = f64::INFINITY;
    let mut seen = std::collections::HashSet::new();
    for cell in 0..a.n_cells() {
        let key: Vec<u64> = a.block(cell).iter().map(|v| v.to_bits()).collect();
        if !seen.insert(key) {
            continue;
        }
        for xi in &dirs {
            let mut m: Vec<f64> = a.block(cell).iter().map(|v| s * v).collect();
            for (p, x) in system.skew().symbols().iter().zip(xi) {
                for (mi, pi) in m.iter_mut().zip(p) {
                    *mi += x * pi;
                }
            }
            worst = worst.min(crate::linalg::sym_eigenvalues(k, &m)[0]);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_grid;
    use crate::operators::Boundary;

    #[test]
    fn speed_margin_changes_sign_at_max_wavespeed() {
        let g = build_grid(2, &[6, 6], &[1.0], 0.01, 0.1).unwrap();
        let kappa: Vec<f64> = (0..36).map(|c| if c < 18 { 1.0 } else { 4.0 }).collect();
        let model = AcousticModel::new(kappa, vec![1.0; 36]).unwrap();
        let sys = acoustics_system(&model, &g, Boundary::Periodic).unwrap();
        let c = max_wavespeed(&sys);
        assert!((c - 2.0).abs() < 1e-9);
        let delta = 0.05;
        assert!(speed_margin(&sys, c * (1.0 + delta)) >= 0.0);
        assert!(speed_margin(&sys, c * (1.0 - delta)) < 0.0);
        assert!((max_wavespeed(&model) - c).abs() < 1e-12);
    }
}
