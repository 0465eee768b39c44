use crate::fields::SourceTerm;
use crate::operators::DiscreteSystem;
use crate::{Error, Result};

use super::stepper::{Forcing, Midpoint, Rk4};
use super::trajectory::{IntegratorConfig, Scheme, Trajectory};

/// Causal solve from rest at `t = 0` over the grid's time axis.
pub fn solve_causal(system: &DiscreteSystem, source: &SourceTerm, config: &IntegratorConfig) -> Result<Trajectory> {
    if source.len() != system.state_len() {
        return Err(Error::DimensionMismatch { expected: system.state_len(), got: source.len() });
    }
    if source.onset() < 0.0 {
        return Err(Error::invalid("causal solves start at t = 0; the source onset must be >= 0"));
    }
    if source.smoothness() < 1 {
        log::warn!("source has no declared time derivative");
    }
    let zero = vec![0.0; system.state_len()];
    march(system, &zero, 0.0, Forcing::Source(source), config)
}

/// Initial-value solve `u(T₀) = u₀` over `n_steps` of the grid; no memory allowed.
pub fn solve_ivp(
    system: &DiscreteSystem,
    u0: &[f64],
    t0: f64,
    source: &SourceTerm,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    if !system.memory().is_zero() {
        return Err(Error::Unsupported(
            "initial-value solves need a zero memory kernel; initial data do not determine solutions with memory".into(),
        ));
    }
    if source.len() != system.state_len() {
        return Err(Error::DimensionMismatch { expected: system.state_len(), got: source.len() });
    }
    march(system, u0, t0, Forcing::Source(source), config)
}

/// General march from `u0` at `t0`. Memory terms require `u0 = 0`.
pub fn march(
    system: &DiscreteSystem,
    u0: &[f64],
    t0: f64,
    forcing: Forcing<'_>,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let n = system.state_len();
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    if !system.memory().is_zero() && u0.iter().any(|v| *v != 0.0) {
        return Err(Error::Unsupported("memory terms require a solve from rest".into()));
    }
    let grid = system.grid();
    let (dt, n_steps) = (grid.dt(), grid.n_steps());
    if let Forcing::Discrete(g) = forcing {
        if g.len() < n_steps || g.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n_steps, got: g.len() });
        }
    }
    let onset = match forcing {
        Forcing::Source(s) => s.onset(),
        _ => f64::INFINITY,
    };
    let stride = config.stride;
    let mut states = Vec::with_capacity(n_steps / stride + 1);
    let mut energy = Vec::with_capacity(n_steps + 1);
    let mut u = u0.to_vec();
    let mut next = vec![0.0; n];
    let mut g = vec![0.0; n];
    states.push(u.clone());
    energy.push(system.energy(&u)?);

    match config.scheme {
        Scheme::ImplicitMidpoint => {
            let mut stepper = Midpoint::new(system, config)?;
            for step in 0..n_steps {
                let gs: Option<&[f64]> = match forcing {
                    Forcing::None => None,
                    Forcing::Source(s) => {
                        s.eval_into(t0 + (step as f64 + 0.5) * dt, &mut g);
                        Some(&g)
                    }
                    Forcing::Discrete(all) => Some(&all[step]),
                };
                stepper.step(&u, gs, &mut next)?;
                std::mem::swap(&mut u, &mut next);
                energy.push(system.energy(&u)?);
                if (step + 1) % stride == 0 {
                    states.push(u.clone());
                }
            }
        }
        Scheme::Rk4 => {
            let limit = Rk4::dt_limit(system, config.cfl_safety);
            if dt > limit {
                return Err(Error::Stability { dt, limit, suggested: limit });
            }
            let source = match forcing {
                Forcing::None => None,
                Forcing::Source(s) => Some(s),
                Forcing::Discrete(_) => return Err(Error::Unsupported("RK4 needs a continuous source".into())),
            };
            let mut stepper = Rk4::new(system)?;
            for step in 0..n_steps {
                stepper.step(t0 + step as f64 * dt, dt, source, &u, &mut next);
                std::mem::swap(&mut u, &mut next);
                energy.push(system.energy(&u)?);
                if (step + 1) % stride == 0 {
                    states.push(u.clone());
                }
            }
        }
    }
    log::debug!("march finished: {n_steps} steps, final energy {:e}", energy.last().copied().unwrap_or(0.0));
    Ok(Trajectory {
        grid: grid.clone(),
        k: system.k(),
        t0,
        stride,
        states,
        energy,
        scheme: config.scheme,
        onset,
    })
}
