//! Free-space forward problem on a padded box.
//!
//! The imaging grid is extended by `box_margin` and then by `pml_cells` cells
//! of absorbing layer; the outermost box nodes are held at zero. Inside the
//! layer the equation is
//!
//! ```text
//! u_tt + (a + zx + zy) u_t + zx zy u = c^2 Lap u + div psi
//! psi_x' = -zx psi_x + c^2 (zy - zx) u_x
//! psi_y' = -zy psi_y + c^2 (zx - zy) u_y
//! ```
//!
//! with `psi` staggered on cell edges and `z(depth) = sigma_max (depth/L)^3`.
//! Outside the layer `zx = zy = 0`, `psi` stays zero and the scheme reduces to
//! the plain damped leapfrog.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::field::{check_same_grid, write_field, BoundaryTrace, Grid2D, ScalarField2D, WavePair};
use crate::media::Medium;

use super::energy::EnergyKernel;
use super::{laplacian, SolveConfig, DEFAULT_PML_REFLECTION};

/// Output of [`forward_solve`].
#[derive(Debug, Clone)]
pub struct ForwardResult {
    /// `u` at the imaging grid's boundary nodes, one sample per time step.
    pub trace: BoundaryTrace,
    /// `[u(T), u_t(T)]` on the imaging grid.
    pub final_state: WavePair,
    /// `2 int_0^T int a c^-2 |u_t|^2 dx dt` (trapezoid rule in time).
    pub damping_integral: f64,
    /// Leapfrog energy on the imaging grid at `t = (n + 1/2) dt`.
    pub energy_series: Vec<f64>,
    /// Dissipation accumulated between `t = dt/2` and `t = (n + 1/2) dt`, with
    /// the velocity centered at whole steps; the scheme's own energy balance.
    pub damping_series: Vec<f64>,
    /// Leapfrog energy of the whole box; only recorded without absorbing layer.
    pub box_energy_series: Option<Vec<f64>>,
    pub dt: f64,
}

/// Dump `u` on the imaging grid every `every` steps as `u_%06d.tatf`.
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub every: usize,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ForwardOptions {
    /// Record energies and the damping integral.
    pub diagnostics: bool,
    pub snapshots: Option<Snapshots>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { diagnostics: true, snapshots: None }
    }
}

/// Solves the damped wave equation in free space from initial data `f`
/// supported on the medium's grid and records the boundary trace.
pub fn forward_solve(f: &WavePair, medium: &Medium, cfg: &SolveConfig) -> Result<ForwardResult> {
    forward_solve_with(f, medium, cfg, &ForwardOptions::default())
}

struct Layout {
    nx: usize,
    ny: usize,
    nbx: usize,
    nby: usize,
    ox: usize,
    oy: usize,
}

impl Layout {
    #[inline]
    fn to_box(&self, k: usize) -> usize {
        let (i, j) = (k % self.nx, k / self.nx);
        (j + self.oy) * self.nbx + i + self.ox
    }

    fn embed(&self, values: &[f64], fill: f64) -> Vec<f64> {
        let mut out = vec![fill; self.nbx * self.nby];
        for j in 0..self.ny {
            let src = &values[j * self.nx..(j + 1) * self.nx];
            let start = (j + self.oy) * self.nbx + self.ox;
            out[start..start + self.nx].copy_from_slice(src);
        }
        out
    }

    fn extract(&self, values: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let start = (j + self.oy) * self.nbx + self.ox;
            out.extend_from_slice(&values[start..start + self.nx]);
        }
        out
    }
}

/// Cubic absorption profile along one axis, at nodes and at half nodes.
fn profile(n: usize, cells: usize, sigma_max: f64) -> (Vec<f64>, Vec<f64>) {
    let z = |pos: f64| {
        if cells == 0 {
            return 0.0;
        }
        let l = cells as f64;
        let depth = (l - pos).max(pos - (n - 1 - cells) as f64).max(0.0);
        sigma_max * (depth / l).powi(3)
    };
    let nodes = (0..n).map(|i| z(i as f64)).collect();
    let halves = (0..n - 1).map(|i| z(i as f64 + 0.5)).collect();
    (nodes, halves)
}

pub fn forward_solve_with(
    f: &WavePair,
    medium: &Medium,
    cfg: &SolveConfig,
    opts: &ForwardOptions,
) -> Result<ForwardResult> {
    let grid: Grid2D = *medium.grid();
    check_same_grid(f.grid(), &grid)?;
    let axis = cfg.time_axis(&grid, medium.max_c())?;
    let (dt, steps) = (axis.dt, axis.steps);
    let (dx, dy) = (grid.dx(), grid.dy());

    let cells = cfg.pml_cells;
    let mx = (cfg.box_margin / dx).round() as usize;
    let my = (cfg.box_margin / dy).round() as usize;
    let lay = Layout {
        nx: grid.nx(),
        ny: grid.ny(),
        nbx: grid.nx() + 2 * (mx + cells),
        nby: grid.ny() + 2 * (my + cells),
        ox: mx + cells,
        oy: my + cells,
    };
    let (nbx, nby) = (lay.nbx, lay.nby);
    let nb = nbx * nby;

    let log_r = (1.0 / DEFAULT_PML_REFLECTION).ln();
    let sigma_x = cfg.pml_strength.unwrap_or(if cells > 0 { 2.0 * log_r / (cells as f64 * dx) } else { 0.0 });
    let sigma_y = cfg.pml_strength.unwrap_or(if cells > 0 { 2.0 * log_r / (cells as f64 * dy) } else { 0.0 });
    let (zx, zx_half) = profile(nbx, cells, sigma_x);
    let (zy, zy_half) = profile(nby, cells, sigma_y);

    let c = lay.embed(medium.c().values(), 1.0);
    let a = lay.embed(medium.a().values(), 0.0);
    let dt2 = dt * dt;
    let mut c2dt2 = vec![0.0; nb];
    let mut coef_a = vec![0.0; nb];
    let mut coef_b = vec![0.0; nb];
    let mut zzdt2 = vec![0.0; nb];
    let mut beta = vec![0.0; nb];
    for j in 0..nby {
        for i in 0..nbx {
            let k = j * nbx + i;
            c2dt2[k] = c[k] * c[k] * dt2;
            beta[k] = a[k] + zx[i] + zy[j];
            coef_a[k] = 1.0 / (1.0 + 0.5 * dt * beta[k]);
            coef_b[k] = 1.0 - 0.5 * dt * beta[k];
            zzdt2[k] = zx[i] * zy[j] * dt2;
        }
    }
    let inv_c2: Vec<f64> = c.iter().map(|v| 1.0 / (v * v)).collect();

    // staggered auxiliary fields: psi_x at (i+1/2, j), psi_y at (i, j+1/2)
    let with_pml = cells > 0;
    let (mut psi_x, mut psi_y) = if with_pml {
        (vec![0.0; (nbx - 1) * nby], vec![0.0; nbx * (nby - 1)])
    } else {
        (Vec::new(), Vec::new())
    };
    let mut px_a = Vec::new();
    let mut px_b = Vec::new();
    let mut py_a = Vec::new();
    let mut py_b = Vec::new();
    if with_pml {
        for j in 0..nby {
            for i in 0..nbx - 1 {
                let (k0, k1) = (j * nbx + i, j * nbx + i + 1);
                let c2 = 0.5 * (c[k0] * c[k0] + c[k1] * c[k1]);
                let z = zx_half[i];
                let den = 1.0 + 0.5 * dt * z;
                px_a.push((1.0 - 0.5 * dt * z) / den);
                px_b.push(dt * c2 * (zy[j] - z) / (den * dx));
            }
        }
        for j in 0..nby - 1 {
            for i in 0..nbx {
                let (k0, k1) = (j * nbx + i, (j + 1) * nbx + i);
                let c2 = 0.5 * (c[k0] * c[k0] + c[k1] * c[k1]);
                let z = zy_half[j];
                let den = 1.0 + 0.5 * dt * z;
                py_a.push((1.0 - 0.5 * dt * z) / den);
                py_b.push(dt * c2 * (zx[i] - z) / (den * dy));
            }
        }
    }

    let sensors = grid.boundary_nodes();
    let sensor_box: Vec<usize> = sensors.iter().map(|&k| lay.to_box(k)).collect();
    let ns = sensors.len();
    let mut trace = Vec::with_capacity((steps + 1) * ns);

    let omega_kernel = EnergyKernel {
        nx: nbx,
        dx,
        dy,
        i0: lay.ox,
        i1: lay.ox + lay.nx - 1,
        j0: lay.oy,
        j1: lay.oy + lay.ny - 1,
    };
    let box_kernel = (!with_pml).then(|| EnergyKernel { nx: nbx, dx, dy, i0: 0, i1: nbx - 1, j0: 0, j1: nby - 1 });
    let damping_rate = |vel: &dyn Fn(usize) -> f64| -> f64 {
        let k = &omega_kernel;
        let mut total = 0.0;
        for j in k.j0..=k.j1 {
            let wy = if j == k.j0 || j == k.j1 { 0.5 } else { 1.0 };
            for i in k.i0..=k.i1 {
                let idx = j * nbx + i;
                if a[idx] != 0.0 {
                    let wx = if i == k.i0 || i == k.i1 { 0.5 } else { 1.0 };
                    let v = vel(idx);
                    total += wx * wy * a[idx] * inv_c2[idx] * v * v;
                }
            }
        }
        2.0 * total * dx * dy
    };

    let (idx2, idy2) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let mut prev = lay.embed(f.u().values(), 0.0);
    let vel0 = lay.embed(f.ut().values(), 0.0);
    let mut cur = vec![0.0; nb];

    // Taylor start: u1 = u0 + dt v0 + dt^2/2 (c^2 Lap u0 - beta v0 - zx zy u0)
    for j in 1..nby - 1 {
        for i in 1..nbx - 1 {
            let k = j * nbx + i;
            cur[k] = prev[k]
                + dt * vel0[k]
                + 0.5 * (c2dt2[k] * laplacian(&prev, k, nbx, idx2, idy2) - dt2 * beta[k] * vel0[k] - zzdt2[k] * prev[k]);
        }
    }
    let mut next = vec![0.0; nb];

    let update_psi = |psi_x: &mut [f64], psi_y: &mut [f64], u_old: &[f64], u_new: &[f64]| {
        for j in 0..nby {
            let row = j * nbx;
            let prow = j * (nbx - 1);
            for i in 0..nbx - 1 {
                let p = prow + i;
                if px_b[p] == 0.0 && psi_x[p] == 0.0 {
                    continue;
                }
                let k = row + i;
                let grad = 0.5 * ((u_new[k + 1] + u_old[k + 1]) - (u_new[k] + u_old[k]));
                psi_x[p] = px_a[p] * psi_x[p] + px_b[p] * grad;
            }
        }
        for j in 0..nby - 1 {
            let row = j * nbx;
            for i in 0..nbx {
                let p = row + i;
                if py_b[p] == 0.0 && psi_y[p] == 0.0 {
                    continue;
                }
                let grad = 0.5 * ((u_new[p + nbx] + u_old[p + nbx]) - (u_new[p] + u_old[p]));
                psi_y[p] = py_a[p] * psi_y[p] + py_b[p] * grad;
            }
        }
    };
    if with_pml {
        update_psi(&mut psi_x, &mut psi_y, &prev, &cur);
    }

    let mut energy_series = Vec::new();
    let mut box_series = box_kernel.as_ref().map(|_| Vec::new());
    let mut damping_integral = 0.0;
    let mut damping_series = Vec::new();
    let mut damping_half = 0.0;
    if opts.diagnostics {
        energy_series.reserve(steps);
        damping_series.push(0.0);
        energy_series.push(omega_kernel.eval(&cur, &prev, |k| (cur[k] - prev[k]) / dt, &inv_c2));
        if let (Some(bk), Some(series)) = (&box_kernel, box_series.as_mut()) {
            series.push(bk.eval(&cur, &prev, |k| (cur[k] - prev[k]) / dt, &inv_c2));
        }
        damping_integral += 0.5 * dt * damping_rate(&|k| vel0[k]);
    }

    let snapshot = |n: usize, u: &[f64]| -> Result<()> {
        if let Some(s) = &opts.snapshots {
            if s.every > 0 && n % s.every == 0 {
                let field = ScalarField2D::new(grid, lay.extract(u))?;
                write_field(&field, s.dir.join(format!("u_{n:06}.tatf")))?;
            }
        }
        Ok(())
    };

    trace.extend(sensor_box.iter().map(|&k| prev[k]));
    snapshot(0, &prev)?;
    trace.extend(sensor_box.iter().map(|&k| cur[k]));
    snapshot(1, &cur)?;

    // n is the level held in `cur`; this computes u^{n+1} for n = 1..=steps,
    // one step past T so the final velocity can be centered.
    for n in 1..=steps {
        for j in 1..nby - 1 {
            let row = j * nbx;
            for i in 1..nbx - 1 {
                let k = row + i;
                let mut rhs = c2dt2[k] * laplacian(&cur, k, nbx, idx2, idy2);
                if with_pml {
                    let p = j * (nbx - 1) + i;
                    let div = (psi_x[p] - psi_x[p - 1]) / dx + (psi_y[k] - psi_y[k - nbx]) / dy;
                    rhs += dt2 * div - zzdt2[k] * cur[k];
                }
                next[k] = coef_a[k] * (2.0 * cur[k] - coef_b[k] * prev[k] + rhs);
            }
        }
        if with_pml {
            update_psi(&mut psi_x, &mut psi_y, &cur, &next);
        }
        if n % 32 == 0 || n == steps {
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Unstable { step: n + 1 });
            }
        }

        if opts.diagnostics {
            if n < steps {
                energy_series.push(omega_kernel.eval(&next, &cur, |k| (next[k] - cur[k]) / dt, &inv_c2));
                if let (Some(bk), Some(series)) = (&box_kernel, box_series.as_mut()) {
                    series.push(bk.eval(&next, &cur, |k| (next[k] - cur[k]) / dt, &inv_c2));
                }
            }
            let inv_2dt = 0.5 / dt;
            let rate = damping_rate(&|k| (next[k] - prev[k]) * inv_2dt);
            let weight = if n == steps { 0.5 } else { 1.0 };
            damping_integral += weight * dt * rate;
            if n < steps {
                damping_half += dt * rate;
                damping_series.push(damping_half);
            }
        }

        if n < steps {
            trace.extend(sensor_box.iter().map(|&k| next[k]));
            snapshot(n + 1, &next)?;
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    // cur = u^N, prev = u^{N-1}, next = u^{N+1}
    let u_final = lay.extract(&cur);
    let inv_2dt = 0.5 / dt;
    let ut_final: Vec<f64> = lay
        .extract(&next)
        .iter()
        .zip(lay.extract(&prev))
        .map(|(p, m)| (p - m) * inv_2dt)
        .collect();

    Ok(ForwardResult {
        trace: BoundaryTrace::new(steps + 1, dt, sensors, trace)?,
        final_state: WavePair::new(ScalarField2D::new(grid, u_final)?, ScalarField2D::new(grid, ut_final)?)?,
        damping_integral,
        energy_series,
        damping_series,
        box_energy_series: box_series,
        dt,
    })
}
