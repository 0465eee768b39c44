use crate::fields::{hat_weights, SourceTerm};
use crate::linalg::dot;
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::trajectory::Trajectory;

fn check_pair(traj: &Trajectory, system: &DiscreteSystem) -> Result<()> {
    traj.grid().check_same_space(system.grid())?;
    if traj.k() != system.k() || (traj.dt() - system.grid().dt()).abs() > 1e-15 * traj.dt() {
        return Err(Error::GridMismatch("trajectory was not produced on this system's axes".into()));
    }
    Ok(())
}

/// Per-step defect of the energy balance
///
/// ```text
/// rₙ = E(tₙ₊₁) − E(tₙ) − dt/2 [φ(tₙ) + φ(tₙ₊₁)],   φ = ⟨−B u − R[u] + f, u⟩
/// ```
///
/// with the discrete memory term evaluated at the nodes.
pub fn energy_identity_residual(traj: &Trajectory, system: &DiscreteSystem, source: &SourceTerm) -> Result<Vec<f64>> {
    check_pair(traj, system)?;
    let states = traj.states()?;
    let n = system.state_len();
    if source.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: source.len() });
    }
    let vol = system.grid().cell_volume();
    let mem = system.memory();
    let mut state = mem.start();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut phi = Vec::with_capacity(states.len());
    for (idx, u) in states.iter().enumerate() {
        if idx > 0 {
            mem.commit(&mut state, &states[idx - 1], u);
        }
        mem.current(&state, &mut r);
        source.eval_into(traj.time(idx), &mut f);
        w.iter_mut().zip(&f).zip(&r).for_each(|((wi, fi), ri)| *wi = fi - ri);
        if system.has_b() {
            system.b().apply_add(-1.0, u, &mut w);
        }
        phi.push(vol * dot(&w, u));
    }
    let e = traj.energy();
    let dt = traj.dt();
    Ok((0..states.len() - 1).map(|i| e[i + 1] - e[i] - 0.5 * dt * (phi[i] + phi[i + 1])).collect())
}

/// Discrete time mollification with a hat of half-width `window` steps,
/// renormalized where it overhangs the ends of the record.
pub fn smooth_trajectory(traj: &Trajectory, system: &DiscreteSystem, window: usize) -> Result<Trajectory> {
    check_pair(traj, system)?;
    if window == 0 {
        return Err(Error::invalid("smoothing window must be at least one step"));
    }
    let states = traj.states()?;
    let w = hat_weights(window);
    let reach = window as i64 - 1;
    let len = states.len() as i64;
    let n = system.state_len();
    let mut out = Vec::with_capacity(states.len());
    for i in 0..len {
        let mut acc = vec![0.0; n];
        let mut mass = 0.0;
        for (o, wi) in (-reach..=reach).zip(&w) {
            let j = i + o;
            if (0..len).contains(&j) {
                mass += wi;
                crate::linalg::axpy(*wi, &states[j as usize], &mut acc);
            }
        }
        acc.iter_mut().for_each(|v| *v /= mass);
        out.push(acc);
    }
    let energy = out.iter().map(|u| system.energy(u)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { states: out, energy, ..traj.clone() })
}

/// `‖uₙ‖ + ‖P uₙ‖` for every stored state.
pub fn graph_norm_series(traj: &Trajectory, system: &DiscreteSystem) -> Result<Vec<f64>> {
    check_pair(traj, system)?;
    Ok(traj.stored().iter().map(|u| system.skew().graph_norm(u)).collect())
}
