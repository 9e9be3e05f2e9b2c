//! Concurrence surfaces over (α², t).

use rayon::prelude::*;
use serde::Serialize;

use super::{ConcurrenceTrace, Dynamics, InitialStateSpec, StateFamily};
use crate::error::{Error, Result};
use crate::model::{Backend, ModelParams};
use crate::propagate::TimeGrid;

#[derive(Debug, Clone, Serialize)]
pub struct SweepSurface {
    pub family: StateFamily,
    pub theta: f64,
    pub backend: Backend,
    pub params: ModelParams,
    pub alpha_sq: Vec<f64>,
    pub grid: TimeGrid,
    /// One row per α² value, one column per time point.
    pub concurrence: Vec<Vec<f64>>,
}

impl SweepSurface {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// (α², t, C) rows in α-major order.
    pub fn long_form(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let times = self.times();
        self.alpha_sq.iter().zip(&self.concurrence).flat_map(move |(&a, row)| {
            times
                .clone()
                .into_iter()
                .zip(row.iter().copied())
                .map(move |(t, c)| (a, t, c))
        })
    }
}

/// `n` evenly spaced α² values covering [0, 1].
pub fn alpha_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("alpha_points", format!("need at least 2, got {n}")));
    }
    Ok((0..n)
        .map(|k| if k + 1 == n { 1.0 } else { k as f64 / (n - 1) as f64 })
        .collect())
}

/// Concurrence for every α² in `alpha_sq`, sharing one step propagator across rows.
pub fn sweep(
    family: StateFamily,
    alpha_sq: &[f64],
    theta: f64,
    params: &ModelParams,
    backend: Backend,
    grid: &TimeGrid,
) -> Result<SweepSurface> {
    sweep_with(&Dynamics::new(backend, *params)?, family, alpha_sq, theta, grid)
}

/// [`sweep`] with a prepared [`Dynamics`].
pub fn sweep_with(
    dynamics: &Dynamics,
    family: StateFamily,
    alpha_sq: &[f64],
    theta: f64,
    grid: &TimeGrid,
) -> Result<SweepSurface> {
    let step = dynamics.step_propagator(grid.step())?;
    let rows = alpha_sq
        .par_iter()
        .map(|&a| {
            let spec = InitialStateSpec { family, alpha_sq: a, theta };
            let traj = dynamics.evolve_with(&step, &spec.density()?, grid)?;
            Ok(ConcurrenceTrace::from_trajectory(&traj)?.c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepSurface {
        family,
        theta,
        backend: dynamics.backend(),
        params: *dynamics.params(),
        alpha_sq: alpha_sq.to_vec(),
        grid: *grid,
        concurrence: rows,
    })
}
