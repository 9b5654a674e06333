//! Rays of the metric `c^-2 dx^2` and the travel-time quantities `T0`, `T1`.
//!
//! Rays are bicharacteristics of `H = c^2 |xi|^2 / 2`, integrated with RK4 in
//! Euclidean arc length `l`:
//!
//! ```text
//! dx/dl = xi / |xi|,   dxi/dl = -|xi| grad c / c,   dtau/dl = 1 / c
//! ```
//!
//! so that `tau` is the length in the metric. The sound speed between grid
//! nodes is the tensor Catmull-Rom interpolant, which is C1 and has an exact
//! gradient; `H` is then conserved up to the integration error alone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::media::OMEGA_HALF;

/// Relative Hamiltonian drift above which a ray is rejected.
pub const HAMILTONIAN_TOL: f64 = 1e-6;

/// Euclidean arc length after which a ray is reported as trapped.
pub const DEFAULT_ARC_CAP: f64 = 100.0;

const EDGE_TOL: f64 = 1e-12;

/// Per-step change of `H` (relative) above which the step is halved.
const LOCAL_TOL: f64 = 1e-10;
const MAX_HALVINGS: i32 = 20;

/// Sound speed with its C1 interpolant.
#[derive(Debug, Clone)]
pub struct SpeedModel {
    c: ScalarField2D,
}

#[inline]
fn catmull_rom(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    let w = [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ];
    let dw = [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ];
    (w, dw)
}

impl SpeedModel {
    pub fn new(c: &ScalarField2D) -> Result<Self> {
        if c.grid().nx() < 4 || c.grid().ny() < 4 {
            return Err(Error::InvalidGrid("need at least 4 nodes per axis for interpolation".into()));
        }
        if c.min() <= 0.0 {
            return Err(Error::InvalidParameter("sound speed must be positive".into()));
        }
        Ok(Self { c: c.clone() })
    }

    /// `c` and its gradient at `(x, y)`. Points beyond the grid are clamped to
    /// its edge.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let g = self.c.grid();
        let (nx, ny) = (g.nx() as isize, g.ny() as isize);
        let locate = |v: f64, lo: f64, h: f64, n: isize| -> (isize, f64) {
            let s = ((v - lo) / h).clamp(0.0, (n - 1) as f64);
            let cell = (s.floor() as isize).min(n - 2);
            (cell, s - cell as f64)
        };
        let (ci, tx) = locate(x, g.x_min(), g.dx(), nx);
        let (cj, ty) = locate(y, g.y_min(), g.dy(), ny);
        let (wx, dwx) = catmull_rom(tx);
        let (wy, dwy) = catmull_rom(ty);
        let vals = self.c.values();
        let at = |i: isize, j: isize| vals[j as usize * nx as usize + i as usize];
        // nodes one step beyond the grid come from linear extrapolation
        let node = |i: isize, j: isize| -> f64 {
            let col = |j: isize| match i {
                -1 => 2.0 * at(0, j) - at(1, j),
                i if i == nx => 2.0 * at(nx - 1, j) - at(nx - 2, j),
                i => at(i, j),
            };
            match j {
                -1 => 2.0 * col(0) - col(1),
                j if j == ny => 2.0 * col(ny - 1) - col(ny - 2),
                j => col(j),
            }
        };
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for (b, (&wyb, &dwyb)) in wy.iter().zip(&dwy).enumerate() {
            let (mut row, mut drow) = (0.0, 0.0);
            for a in 0..4 {
                let c = node(ci - 1 + a as isize, cj - 1 + b as isize);
                row += wx[a] * c;
                drow += dwx[a] * c;
            }
            v += wyb * row;
            gx += wyb * drow;
            gy += dwyb * row;
        }
        (v, [gx / g.dx(), gy / g.dy()])
    }

    pub fn speed(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y).0
    }
}

/// A traced ray; `points[k]`, `momenta[k]` are the state after `k` steps.
#[derive(Debug, Clone, Serialize)]
pub struct Ray {
    pub points: Vec<[f64; 2]>,
    pub momenta: Vec<[f64; 2]>,
    /// Metric length (travel time) from the start to the exit point.
    pub length: f64,
    /// True once the ray has left the closed square.
    pub exited: bool,
    /// Largest `|H - H0| / H0` seen along the ray.
    pub hamiltonian_drift: f64,
}

impl Ray {
    pub fn exit_point(&self) -> [f64; 2] {
        *self.points.last().expect("a ray holds its start point")
    }

    pub fn exit_momentum(&self) -> [f64; 2] {
        *self.momenta.last().expect("a ray holds its start momentum")
    }
}

fn inside(p: [f64; 2]) -> bool {
    p[0].abs() <= OMEGA_HALF + EDGE_TOL && p[1].abs() <= OMEGA_HALF + EDGE_TOL
}

/// Fraction of the segment `p -> q` at which it crosses the square's boundary.
fn exit_fraction(p: [f64; 2], q: [f64; 2]) -> f64 {
    let mut t: f64 = 1.0;
    for d in 0..2 {
        for bound in [-OMEGA_HALF, OMEGA_HALF] {
            let outside = if bound > 0.0 { q[d] > bound } else { q[d] < bound };
            if outside && q[d] != p[d] {
                t = t.min((bound - p[d]) / (q[d] - p[d]));
            }
        }
    }
    t.clamp(0.0, 1.0)
}

type State = [f64; 5];

fn rhs(model: &SpeedModel, s: &State) -> State {
    let (c, grad) = model.eval(s[0], s[1]);
    let norm = s[2].hypot(s[3]);
    [s[2] / norm, s[3] / norm, -norm * grad[0] / c, -norm * grad[1] / c, 1.0 / c]
}

fn rk4(model: &SpeedModel, s: &State, h: f64) -> State {
    let add = |a: &State, b: &State, f: f64| -> State {
        let mut out = *a;
        for (o, v) in out.iter_mut().zip(b) {
            *o += f * v;
        }
        out
    };
    let k1 = rhs(model, s);
    let k2 = rhs(model, &add(s, &k1, 0.5 * h));
    let k3 = rhs(model, &add(s, &k2, 0.5 * h));
    let k4 = rhs(model, &add(s, &k3, h));
    let mut out = *s;
    for d in 0..5 {
        out[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    out
}

fn hamiltonian(model: &SpeedModel, s: &State) -> f64 {
    let c = model.speed(s[0], s[1]);
    0.5 * c * c * (s[2] * s[2] + s[3] * s[3])
}

/// Traces the ray from `x0` with initial covector `xi0` (any nonzero length;
/// `|xi0| = 1 / c(x0)` is unit speed in the metric) until it leaves the
/// closed square `[-1, 1]^2`. `step` is the largest Euclidean arc length per
/// step; steps are halved locally while one step changes `H` by more than
/// `1e-10` relative.
pub fn trace_ray(x0: [f64; 2], xi0: [f64; 2], model: &SpeedModel, step: f64) -> Result<Ray> {
    trace_ray_capped(x0, xi0, model, step, DEFAULT_ARC_CAP)
}

pub fn trace_ray_capped(x0: [f64; 2], xi0: [f64; 2], model: &SpeedModel, step: f64, arc_cap: f64) -> Result<Ray> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !inside(x0) {
        return Err(Error::InvalidParameter(format!("start point ({}, {}) lies outside the domain", x0[0], x0[1])));
    }
    if !(xi0[0].is_finite() && xi0[1].is_finite()) || xi0[0] == 0.0 && xi0[1] == 0.0 {
        return Err(Error::InvalidParameter("initial covector must be finite and nonzero".into()));
    }
    let mut s: State = [x0[0], x0[1], xi0[0], xi0[1], 0.0];
    let h0 = hamiltonian(model, &s);
    let mut ray = Ray { points: vec![x0], momenta: vec![xi0], length: 0.0, exited: false, hamiltonian_drift: 0.0 };
    let mut arc = 0.0;
    let min_step = step * 0.5f64.powi(MAX_HALVINGS);
    let mut h = step;
    loop {
        if arc >= arc_cap {
            return Err(Error::TrappedRay { x: s[0], y: s[1], cap: arc_cap });
        }
        let h_here = hamiltonian(model, &s);
        let mut next = rk4(model, &s, h);
        // halve the step where the sound speed varies quickly
        while h > min_step && ((hamiltonian(model, &next) - h_here) / h0).abs() > LOCAL_TOL {
            h *= 0.5;
            next = rk4(model, &s, h);
        }
        let p = [next[0], next[1]];
        let end = if inside(p) {
            next
        } else {
            let t = exit_fraction([s[0], s[1]], p);
            if t > 0.0 {
                rk4(model, &s, t * h)
            } else {
                s
            }
        };
        arc += h;
        let drift = ((hamiltonian(model, &end) - h0) / h0).abs();
        ray.hamiltonian_drift = ray.hamiltonian_drift.max(drift);
        if drift > HAMILTONIAN_TOL {
            return Err(Error::StepTooLarge { drift });
        }
        ray.points.push([end[0], end[1]]);
        ray.momenta.push([end[2], end[3]]);
        ray.length = end[4];
        if !inside(p) {
            ray.exited = true;
            return Ok(ray);
        }
        s = next;
        h = (2.0 * h).min(step);
    }
}

/// Launch point at perimeter position `p` in `[0, 8)`, walking
/// counter-clockwise from `(-1, -1)`, and the inward cone there.
fn perimeter_point(p: f64) -> ([f64; 2], Vec<[f64; 2]>) {
    let l = 2.0 * OMEGA_HALF;
    let side = ((p / l).floor() as usize).min(3);
    let s = p - side as f64 * l;
    let corner = s.abs() < 1e-9;
    let m = OMEGA_HALF;
    // (point, inward normals of the sides meeting there)
    match side {
        0 => ([-m + s, -m], if corner { vec![[0.0, 1.0], [1.0, 0.0]] } else { vec![[0.0, 1.0]] }),
        1 => ([m, -m + s], if corner { vec![[-1.0, 0.0], [0.0, 1.0]] } else { vec![[-1.0, 0.0]] }),
        2 => ([m - s, m], if corner { vec![[0.0, -1.0], [-1.0, 0.0]] } else { vec![[0.0, -1.0]] }),
        _ => ([-m, m - s], if corner { vec![[1.0, 0.0], [0.0, -1.0]] } else { vec![[1.0, 0.0]] }),
    }
}

/// Metric lengths of all rays launched by [`estimate_t0`].
#[derive(Debug, Clone, Serialize)]
pub struct RaySample {
    pub x0: [f64; 2],
    pub angle: f64,
    pub length: f64,
}

/// Traces rays from `n_boundary` points evenly spaced along the perimeter
/// (starting at a corner) in every direction `2 pi k / n_angle` that points
/// strictly into the square.
pub fn ray_fan(c: &ScalarField2D, n_boundary: usize, n_angle: usize, step: f64) -> Result<Vec<RaySample>> {
    if n_boundary < 8 || n_angle < 8 {
        return Err(Error::InvalidParameter("need at least 8 boundary points and 8 angles".into()));
    }
    let model = SpeedModel::new(c)?;
    let perimeter = 8.0 * OMEGA_HALF;
    let mut samples = Vec::new();
    for b in 0..n_boundary {
        let (x0, normals) = perimeter_point(perimeter * b as f64 / n_boundary as f64);
        let c0 = model.speed(x0[0], x0[1]);
        for k in 0..n_angle {
            let angle = std::f64::consts::TAU * k as f64 / n_angle as f64;
            let dir = [angle.cos(), angle.sin()];
            if normals.iter().any(|n| n[0] * dir[0] + n[1] * dir[1] <= 1e-12) {
                continue;
            }
            let ray = trace_ray(x0, [dir[0] / c0, dir[1] / c0], &model, step)?;
            samples.push(RaySample { x0, angle, length: ray.length });
        }
    }
    Ok(samples)
}

/// Lower estimate of `T0`, the longest metric length of a ray crossing the
/// square. Fails if any ray is trapped or needs a smaller step.
pub fn estimate_t0(c: &ScalarField2D, n_boundary: usize, n_angle: usize, step: f64) -> Result<f64> {
    Ok(ray_fan(c, n_boundary, n_angle, step)?.iter().map(|s| s.length).fold(0.0, f64::max))
}

#[derive(Clone, Copy, PartialEq)]
struct Front {
    dist: f64,
    node: usize,
}

impl Eq for Front {}

impl Ord for Front {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Metric distance to the boundary of the square on an `n x n` node grid, by
/// first-order fast marching on `|grad d| = 1 / c`. Row-major, `n * n` values.
pub fn boundary_distance(c: &ScalarField2D, n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::InvalidParameter("need at least 16 samples per axis".into()));
    }
    let model = SpeedModel::new(c)?;
    let h = 2.0 * OMEGA_HALF / (n - 1) as f64;
    let coord = |i: usize| -OMEGA_HALF + h * i as f64;
    let slowness: Vec<f64> = (0..n * n).map(|k| 1.0 / model.speed(coord(k % n), coord(k / n))).collect();
    let mut dist = vec![f64::INFINITY; n * n];
    let mut done = vec![false; n * n];
    let mut heap = BinaryHeap::new();
    for k in 0..n * n {
        let (i, j) = (k % n, k / n);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            dist[k] = 0.0;
            heap.push(Front { dist: 0.0, node: k });
        }
    }
    while let Some(Front { dist: d, node }) = heap.pop() {
        if done[node] || d > dist[node] {
            continue;
        }
        done[node] = true;
        let (i, j) = (node % n, node / n);
        let mut neighbours = Vec::with_capacity(4);
        if i > 0 {
            neighbours.push(node - 1);
        }
        if i + 1 < n {
            neighbours.push(node + 1);
        }
        if j > 0 {
            neighbours.push(node - n);
        }
        if j + 1 < n {
            neighbours.push(node + n);
        }
        for k in neighbours {
            if done[k] {
                continue;
            }
            let (ki, kj) = (k % n, k / n);
            let pick = |a: Option<usize>, b: Option<usize>| {
                let v = |m: Option<usize>| m.filter(|&m| done[m]).map_or(f64::INFINITY, |m| dist[m]);
                v(a).min(v(b))
            };
            let ax = pick(ki.checked_sub(1).map(|q| kj * n + q), (ki + 1 < n).then(|| k + 1));
            let ay = pick(kj.checked_sub(1).map(|q| q * n + ki), (kj + 1 < n).then(|| k + n));
            let f = slowness[k] * h;
            let (lo, hi) = if ax <= ay { (ax, ay) } else { (ay, ax) };
            let cand = if hi - lo >= f {
                lo + f
            } else {
                0.5 * (lo + hi + (2.0 * f * f - (hi - lo) * (hi - lo)).sqrt())
            };
            if cand < dist[k] {
                dist[k] = cand;
                heap.push(Front { dist: cand, node: k });
            }
        }
    }
    Ok(dist)
}

/// `T1 = max_x d(x, boundary)` from [`boundary_distance`] on `n x n` nodes.
pub fn estimate_t1(c: &ScalarField2D, n: usize) -> Result<f64> {
    Ok(boundary_distance(c, n)?.into_iter().fold(0.0, f64::max))
}
