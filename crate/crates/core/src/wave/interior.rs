//! Dirichlet problems on the imaging grid and the two backward solvers.
//!
//! A backward solve from `t = T` to `t = 0` of
//! `v_tt + sign * a v_t - c^2 Lap v = 0` is run as a forward solve in
//! `s = T - t` of `v_ss - sign * a v_s - c^2 Lap v = 0` with the trace read in
//! reverse. For `sign = -1` the reversed problem is damped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_same_grid, BoundaryTrace, ScalarField2D, WavePair};
use crate::media::Medium;

use super::energy::{inverse_c2, EnergyKernel};
use super::{laplacian, Region, SolveConfig};

/// Sign of the damping term in the backward equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// `v_tt + a v_t - c^2 Lap v = 0`, the same equation as the forward model.
    Plus,
    /// `v_tt - a v_t - c^2 Lap v = 0`, damped when run backward in time.
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InteriorRun {
    /// `[v, v_s]` after the last step.
    pub final_state: WavePair,
    /// Leapfrog energy on the whole grid at `s = (n + 1/2) ds`; empty unless requested.
    pub energy_series: Vec<f64>,
}

/// Steps `v_ss + d v_s - c^2 Lap v = 0` forward from `initial` with the
/// boundary nodes set from `boundary` at every level. The time step and the
/// number of steps come from the trace. The returned velocity is the one for
/// which a Taylor step backward reproduces the previous level.
pub fn interior_solve(
    initial: &WavePair,
    boundary: &BoundaryTrace,
    c: &ScalarField2D,
    damping: &ScalarField2D,
    with_energy: bool,
) -> Result<InteriorRun> {
    let grid = *initial.grid();
    check_same_grid(&grid, c.grid())?;
    check_same_grid(&grid, damping.grid())?;
    boundary.check_grid(&grid)?;
    if boundary.nt() < 2 {
        return Err(Error::TraceMismatch("need at least two time samples".into()));
    }
    let steps = boundary.nt() - 1;
    let dt = boundary.dt();
    let (nx, ny) = (grid.nx(), grid.ny());
    let (dx, dy) = (grid.dx(), grid.dy());
    let number = c.max() * dt * (dx.powi(-2) + dy.powi(-2)).sqrt();
    if number > 1.0 {
        return Err(Error::CflViolation { number });
    }

    let dt2 = dt * dt;
    let (idx2, idy2) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let c2dt2: Vec<f64> = c.values().iter().map(|v| v * v * dt2).collect();
    let d = damping.values();
    if let Some(k) = d.iter().position(|&v| 1.0 + 0.5 * dt * v <= 0.0) {
        return Err(Error::InvalidParameter(format!("damping {} too negative for dt {dt} at node {k}", d[k])));
    }
    let coef_a: Vec<f64> = d.iter().map(|v| 1.0 / (1.0 + 0.5 * dt * v)).collect();
    let coef_b: Vec<f64> = d.iter().map(|v| 1.0 - 0.5 * dt * v).collect();
    let inv_c2 = inverse_c2(c);
    let kernel = EnergyKernel::new(&grid, Region::Full)?;
    let sensors = boundary.sensors();

    let mut prev = initial.u().values().to_vec();
    for (&k, &h) in sensors.iter().zip(boundary.sample(0)) {
        prev[k] = h;
    }
    let vel0 = initial.ut().values();
    let mut cur = prev.clone();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            cur[k] = prev[k] + dt * vel0[k] + 0.5 * (c2dt2[k] * laplacian(&prev, k, nx, idx2, idy2) - dt2 * d[k] * vel0[k]);
        }
    }
    for (&k, &h) in sensors.iter().zip(boundary.sample(1)) {
        cur[k] = h;
    }

    let mut energy_series = Vec::new();
    if with_energy {
        energy_series.push(kernel.eval(&cur, &prev, |k| (cur[k] - prev[k]) / dt, &inv_c2));
    }
    let mut next = vec![0.0; grid.len()];
    for n in 1..steps {
        for j in 1..ny - 1 {
            let row = j * nx;
            for i in 1..nx - 1 {
                let k = row + i;
                let rhs = c2dt2[k] * laplacian(&cur, k, nx, idx2, idy2);
                next[k] = coef_a[k] * (2.0 * cur[k] - coef_b[k] * prev[k] + rhs);
            }
        }
        for (&k, &h) in sensors.iter().zip(boundary.sample(n + 1)) {
            next[k] = h;
        }
        if (n % 32 == 0 || n + 1 == steps) && next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { step: n + 1 });
        }
        if with_energy {
            energy_series.push(kernel.eval(&next, &cur, |k| (next[k] - cur[k]) / dt, &inv_c2));
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }

    // cur = v^N, prev = v^{N-1}
    let mut vel = vec![0.0; grid.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let lap = laplacian(&cur, k, nx, idx2, idy2);
            vel[k] = (cur[k] - prev[k] + 0.5 * c2dt2[k] * lap) / (dt * (1.0 + 0.5 * dt * d[k]));
        }
    }
    let last = boundary.sample(steps);
    let before = boundary.sample(steps - 1);
    for (s, &k) in sensors.iter().enumerate() {
        vel[k] = if steps >= 2 {
            let older = boundary.sample(steps - 2)[s];
            (3.0 * last[s] - 4.0 * before[s] + older) / (2.0 * dt)
        } else {
            (last[s] - before[s]) / dt
        };
    }

    Ok(InteriorRun {
        final_state: WavePair::new(ScalarField2D::new(grid, cur)?, ScalarField2D::new(grid, vel)?)?,
        energy_series,
    })
}

/// Time-reversed trace: sample `n` of the result is sample `nt - 1 - n` of `h`.
pub fn reverse_trace(h: &BoundaryTrace) -> Result<BoundaryTrace> {
    let values: Vec<f64> = (0..h.nt()).rev().flat_map(|n| h.sample(n).iter().copied()).collect();
    BoundaryTrace::new(h.nt(), h.dt(), h.sensors().to_vec(), values)
}

/// Solves `v_tt + sign a v_t - c^2 Lap v = 0` on the medium's grid backward
/// from `terminal` at `t = T` with `v = h` on the boundary, returning
/// `[v(0), v_t(0)]`.
pub fn backward_solve(
    trace: &BoundaryTrace,
    terminal: &WavePair,
    medium: &Medium,
    sign: Sign,
    cfg: &SolveConfig,
) -> Result<WavePair> {
    let grid = *medium.grid();
    check_same_grid(terminal.grid(), &grid)?;
    trace.check_grid(&grid)?;
    let axis = cfg.time_axis(&grid, medium.max_c())?;
    if trace.nt() != axis.steps + 1 || (trace.dt() - axis.dt).abs() > 1e-12 * axis.dt {
        return Err(Error::TraceMismatch(format!(
            "trace has {} samples at dt = {}, solver expects {} at dt = {}",
            trace.nt(),
            trace.dt(),
            axis.steps + 1,
            axis.dt
        )));
    }
    let reversed = reverse_trace(trace)?;
    let damping = medium.a().scale(-sign.value())?;
    // terminal velocity in s is minus the one in t
    let start = WavePair::new(terminal.u().clone(), terminal.ut().scale(-1.0)?)?;
    let run = interior_solve(&start, &reversed, medium.c(), &damping, false)?;
    let (v, vs) = run.final_state.into_parts();
    WavePair::new(v, vs.scale(-1.0)?)
}
