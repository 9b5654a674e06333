//! Discrete harmonic extension of boundary values.

use crate::error::{Error, Result};
use crate::field::{Grid2D, ScalarField2D};

/// Relative residual at which the conjugate-gradient iteration stops.
pub const HARMONIC_TOL: f64 = 1e-10;

/// Solves the 5-point Laplace equation on the interior of `grid` with
/// Dirichlet data `boundary_values`, given in [`Grid2D::boundary_nodes`]
/// order.
///
/// Starts from the transfinite (Coons) interpolant of the boundary data and
/// corrects it with unpreconditioned conjugate gradients until
/// `|Lap u| <= HARMONIC_TOL * |b|`, `b` being the boundary contribution to the
/// right-hand side.
pub fn harmonic_extension(boundary_values: &[f64], grid: &Grid2D) -> Result<ScalarField2D> {
    let sensors = grid.boundary_nodes();
    if boundary_values.len() != sensors.len() {
        return Err(Error::SizeMismatch { expected: sensors.len(), found: boundary_values.len() });
    }
    if let Some(index) = boundary_values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "boundary data", index });
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut u = vec![0.0; grid.len()];
    for (&k, &v) in sensors.iter().zip(boundary_values) {
        u[k] = v;
    }

    let (idx2, idy2) = (1.0 / grid.dx().powi(2), 1.0 / grid.dy().powi(2));
    let interior = |k: usize| {
        let (i, j) = (k % nx, k / nx);
        i > 0 && j > 0 && i < nx - 1 && j < ny - 1
    };
    // -Lap applied to a field vanishing on the boundary
    let apply = |p: &[f64], out: &mut [f64]| {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                out[k] = (2.0 * p[k] - p[k - 1] - p[k + 1]) * idx2 + (2.0 * p[k] - p[k - nx] - p[k + nx]) * idy2;
            }
        }
    };
    let residual = |u: &[f64], r: &mut [f64]| {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                r[k] = super::laplacian(u, k, nx, idx2, idy2);
            }
        }
    };

    let mut r = vec![0.0; grid.len()];
    residual(&u, &mut r);
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return ScalarField2D::new(*grid, u);
    }

    let (bottom, top) = (|i: usize| u[i], |i: usize| u[(ny - 1) * nx + i]);
    let (left, right) = (|j: usize| u[j * nx], |j: usize| u[j * nx + nx - 1]);
    let mut init = u.clone();
    for j in 1..ny - 1 {
        let eta = j as f64 / (ny - 1) as f64;
        for i in 1..nx - 1 {
            let xi = i as f64 / (nx - 1) as f64;
            let corners = (1.0 - xi) * (1.0 - eta) * bottom(0)
                + xi * (1.0 - eta) * bottom(nx - 1)
                + (1.0 - xi) * eta * top(0)
                + xi * eta * top(nx - 1);
            init[j * nx + i] = (1.0 - eta) * bottom(i) + eta * top(i) + (1.0 - xi) * left(j) + xi * right(j) - corners;
        }
    }
    u = init;
    residual(&u, &mut r);

    let mut p = r.clone();
    let mut ap = vec![0.0; grid.len()];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let tol2 = (HARMONIC_TOL * b_norm).powi(2);
    let cap = 20 * (nx + ny) + 200;
    let mut iterations = 0;
    while rr > tol2 {
        if iterations == cap {
            return Err(Error::NoConvergence { iterations, residual: rr.sqrt() / b_norm });
        }
        apply(&p, &mut ap);
        let pap: f64 = (0..grid.len()).filter(|&k| interior(k)).map(|k| p[k] * ap[k]).sum();
        let alpha = rr / pap;
        for k in 0..grid.len() {
            if interior(k) {
                u[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for k in 0..grid.len() {
            if interior(k) {
                p[k] = r[k] + beta * p[k];
            }
        }
        rr = rr_new;
        iterations += 1;
    }
    ScalarField2D::new(*grid, u)
}
