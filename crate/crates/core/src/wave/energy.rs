//! Discrete energy `E_U = int_U |grad u|^2 + c^-2 |u_t|^2`.
//!
//! Velocities are weighted with the trapezoid rule on the region's nodes;
//! gradients are differences centered on cell edges, so that the same
//! quadrature applied to two consecutive leapfrog levels is the quantity the
//! scheme dissipates exactly.

use crate::error::{Error, Result};
use crate::field::{check_same_grid, Grid2D, ScalarField2D, WavePair};

use super::ForwardResult;

/// Rectangular block of nodes, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Full,
    Rect { i0: usize, i1: usize, j0: usize, j1: usize },
}

impl Region {
    /// Nodes of `grid` inside `[x0, x1] x [y0, y1]`, snapped outward to the
    /// nearest node within a rounding tolerance.
    pub fn from_bounds(grid: &Grid2D, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let snap = |v: f64, lo: f64, h: f64| ((v - lo) / h + 1e-9).floor() as isize;
        let snap_up = |v: f64, lo: f64, h: f64| ((v - lo) / h - 1e-9).ceil() as isize;
        let i0 = snap_up(x0, grid.x_min(), grid.dx()).max(0);
        let i1 = snap(x1, grid.x_min(), grid.dx()).min(grid.nx() as isize - 1);
        let j0 = snap_up(y0, grid.y_min(), grid.dy()).max(0);
        let j1 = snap(y1, grid.y_min(), grid.dy()).min(grid.ny() as isize - 1);
        if i1 <= i0 || j1 <= j0 {
            return Err(Error::InvalidParameter("region contains no cells".into()));
        }
        Ok(Region::Rect { i0: i0 as usize, i1: i1 as usize, j0: j0 as usize, j1: j1 as usize })
    }

    pub(crate) fn bounds(&self, grid: &Grid2D) -> (usize, usize, usize, usize) {
        match *self {
            Region::Full => (0, grid.nx() - 1, 0, grid.ny() - 1),
            Region::Rect { i0, i1, j0, j1 } => (i0, i1, j0, j1),
        }
    }
}

/// Energy functional evaluated on raw arrays; `u_a`/`u_b` are two levels whose
/// gradient product is used, `vel` the velocity. With `u_a == u_b` this is the
/// single-state energy.
pub(crate) struct EnergyKernel {
    pub nx: usize,
    pub dx: f64,
    pub dy: f64,
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl EnergyKernel {
    pub fn new(grid: &Grid2D, region: Region) -> Result<Self> {
        let (i0, i1, j0, j1) = region.bounds(grid);
        if i1 >= grid.nx() || j1 >= grid.ny() || i1 <= i0 || j1 <= j0 {
            return Err(Error::InvalidParameter(format!("region {region:?} does not fit the grid")));
        }
        Ok(Self { nx: grid.nx(), dx: grid.dx(), dy: grid.dy(), i0, i1, j0, j1 })
    }

    #[inline]
    fn wx(&self, i: usize) -> f64 {
        if i == self.i0 || i == self.i1 {
            0.5
        } else {
            1.0
        }
    }

    #[inline]
    fn wy(&self, j: usize) -> f64 {
        if j == self.j0 || j == self.j1 {
            0.5
        } else {
            1.0
        }
    }

    /// `sum w c^-2 vel^2 + <D u_a, D u_b>` with the weights described above.
    pub fn eval(&self, u_a: &[f64], u_b: &[f64], vel: impl Fn(usize) -> f64, inv_c2: &[f64]) -> f64 {
        let nx = self.nx;
        let (idx2, idy2) = (1.0 / (self.dx * self.dx), 1.0 / (self.dy * self.dy));
        let mut kinetic = 0.0;
        let mut grad_x = 0.0;
        let mut grad_y = 0.0;
        for j in self.j0..=self.j1 {
            let wy = self.wy(j);
            let row = j * nx;
            let mut kin_row = 0.0;
            let mut gx_row = 0.0;
            for i in self.i0..=self.i1 {
                let k = row + i;
                let v = vel(k);
                kin_row += self.wx(i) * inv_c2[k] * v * v;
                if i < self.i1 {
                    gx_row += (u_a[k + 1] - u_a[k]) * (u_b[k + 1] - u_b[k]);
                }
            }
            kinetic += wy * kin_row;
            grad_x += wy * gx_row;
            if j < self.j1 {
                let mut gy_row = 0.0;
                for i in self.i0..=self.i1 {
                    let k = row + i;
                    gy_row += self.wx(i) * (u_a[k + nx] - u_a[k]) * (u_b[k + nx] - u_b[k]);
                }
                grad_y += gy_row;
            }
        }
        (kinetic + grad_x * idx2 + grad_y * idy2) * self.dx * self.dy
    }
}

pub(crate) fn inverse_c2(c: &ScalarField2D) -> Vec<f64> {
    c.values().iter().map(|v| 1.0 / (v * v)).collect()
}

/// `E_U` of a single state.
pub fn local_energy(state: &WavePair, c: &ScalarField2D, region: Region) -> Result<f64> {
    check_same_grid(state.grid(), c.grid())?;
    let kernel = EnergyKernel::new(state.grid(), region)?;
    let inv_c2 = inverse_c2(c);
    let (u, ut) = (state.u().values(), state.ut().values());
    Ok(kernel.eval(u, u, |k| ut[k], &inv_c2))
}

/// Energy between two consecutive levels `u_n`, `u_{n+1}` separated by `dt`:
/// velocity `(u_{n+1} - u_n)/dt` and gradient product `<D u_{n+1}, D u_n>`.
/// This is the quantity the time-stepping scheme conserves in the absence of
/// damping and boundary flux.
pub fn leapfrog_energy(
    u_n: &ScalarField2D,
    u_next: &ScalarField2D,
    dt: f64,
    c: &ScalarField2D,
    region: Region,
) -> Result<f64> {
    check_same_grid(u_n.grid(), u_next.grid())?;
    check_same_grid(u_n.grid(), c.grid())?;
    let kernel = EnergyKernel::new(u_n.grid(), region)?;
    let inv_c2 = inverse_c2(c);
    let (a, b) = (u_n.values(), u_next.values());
    Ok(kernel.eval(b, a, |k| (b[k] - a[k]) / dt, &inv_c2))
}

/// Local energy of the final state plus the accumulated dissipation
/// `2 int_0^T int a c^-2 |u_t|^2`.
pub fn extended_energy(result: &ForwardResult, c: &ScalarField2D, region: Region) -> Result<f64> {
    Ok(local_energy(&result.final_state, c, region)? + result.damping_integral)
}

/// Extended energy of the whole computational box at `t = (n + 1/2) dt`:
/// box energy plus the dissipation accumulated since `t = dt/2`. Only
/// available for runs without absorbing layer.
pub fn box_extended_energy_series(result: &ForwardResult) -> Option<Vec<f64>> {
    let series = result.box_energy_series.as_ref()?;
    Some(series.iter().zip(&result.damping_series).map(|(e, d)| e + d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth_pair(grid: Grid2D) -> (WavePair, ScalarField2D) {
        let u = ScalarField2D::from_fn(grid, |x, y| (1.3 * x).sin() * (0.7 * y + 0.2).cos() + 0.1 * x * y).unwrap();
        let ut = ScalarField2D::from_fn(grid, |x, y| (x * x - y).exp() * 0.3).unwrap();
        let c = ScalarField2D::from_fn(grid, |x, y| 1.0 + 0.2 * (x + 2.0 * y).sin()).unwrap();
        (WavePair::new(u, ut).unwrap(), c)
    }

    /// Direct nodal/edge summation, written independently of the kernel.
    fn oracle(state: &WavePair, c: &ScalarField2D, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let g = state.grid();
        let (dx, dy) = (g.dx(), g.dy());
        let w = |k: usize, lo: usize, hi: usize| if k == lo || k == hi { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let vt = state.ut().get(i, j) / c.get(i, j);
                total += w(i, i0, i1) * w(j, j0, j1) * vt * vt * dx * dy;
            }
        }
        for j in j0..=j1 {
            for i in i0..i1 {
                let d = (state.u().get(i + 1, j) - state.u().get(i, j)) / dx;
                total += w(j, j0, j1) * d * d * dx * dy;
            }
        }
        for j in j0..j1 {
            for i in i0..=i1 {
                let d = (state.u().get(i, j + 1) - state.u().get(i, j)) / dy;
                total += w(i, i0, i1) * d * d * dx * dy;
            }
        }
        total
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = Grid2D::square(11, 1.0).unwrap();
        let c = ScalarField2D::constant(g, 1.2);
        assert_eq!(local_energy(&WavePair::zeros(g), &c, Region::Full).unwrap(), 0.0);
    }

    #[test]
    fn unit_integrand_gives_area() {
        let g = Grid2D::new(31, 21, -1.5, 1.5, -1.0, 1.0).unwrap();
        let (_, c) = smooth_pair(g);
        let state = WavePair::new(ScalarField2D::zeros(g), c.clone()).unwrap();
        let e = local_energy(&state, &c, Region::Full).unwrap();
        assert!((e - 6.0).abs() < 1e-12);
        let omega = Region::from_bounds(&g, -1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(omega, Region::Rect { i0: 5, i1: 25, j0: 0, j1: 20 });
        let e = local_energy(&state, &c, omega).unwrap();
        assert!((e - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_summation() {
        let g = Grid2D::new(37, 29, -1.2, 1.1, -0.9, 1.3).unwrap();
        let (state, c) = smooth_pair(g);
        let full = local_energy(&state, &c, Region::Full).unwrap();
        let want = oracle(&state, &c, 0, 36, 0, 28);
        assert!(((full - want) / want).abs() < 1e-12);
        let r = Region::Rect { i0: 3, i1: 30, j0: 5, j1: 17 };
        let sub = local_energy(&state, &c, r).unwrap();
        let want = oracle(&state, &c, 3, 30, 5, 17);
        assert!(((sub - want) / want).abs() < 1e-12);
    }

    #[test]
    fn leapfrog_energy_reduces_to_local_energy_for_equal_levels() {
        let g = Grid2D::square(15, 1.0).unwrap();
        let (state, c) = smooth_pair(g);
        let u = state.u().clone();
        let e = leapfrog_energy(&u, &u, 0.1, &c, Region::Full).unwrap();
        let s = local_energy(&WavePair::new(u.clone(), ScalarField2D::zeros(g)).unwrap(), &c, Region::Full).unwrap();
        assert!((e - s).abs() <= 1e-14 * s);
    }
}
