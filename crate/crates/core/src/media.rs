//! Sound speed, attenuation and phantom on the unit-radius square
//! `Omega = [-1, 1]^2`.
//!
//! Both coefficients are forced to their free-space values (`c = 1`,
//! `a = 0`) outside `Omega` by a cosine taper that vanishes on the boundary,
//! so a field defined on `Omega`'s grid extends to any larger box by padding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_same_grid, Grid2D, ScalarField2D, WavePair};

/// Half side length of the square imaging domain.
pub const OMEGA_HALF: f64 = 1.0;

/// Default width of the band in which `c` and `a` blend to free-space values.
pub const DEFAULT_TAPER_WIDTH: f64 = 0.1;

/// Default standard deviation of the phantom's Gaussian blur.
pub const DEFAULT_BLUR_RADIUS: f64 = 0.02;

/// Largest blur that keeps the phantom inside the disk of radius 0.95.
pub const MAX_BLUR_RADIUS: f64 = 0.025;

/// The outer Shepp-Logan ellipse is scaled to reach this height.
const PHANTOM_EXTENT: f64 = 0.85;

const KERNEL_RADII: f64 = 4.0;

const OUTSIDE_TOL: f64 = 1e-9;

/// True when `(x, y)` lies strictly outside the closed square `Omega`.
pub fn outside_omega(x: f64, y: f64) -> bool {
    x.abs() > OMEGA_HALF + OUTSIDE_TOL || y.abs() > OMEGA_HALF + OUTSIDE_TOL
}

fn ramp(d: f64, width: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if d >= width {
        1.0
    } else {
        0.5 * (1.0 - (PI * d / width).cos())
    }
}

/// Smooth cut-off: 1 at distance `>= width` from both pairs of sides of
/// `Omega`, 0 on and outside its boundary.
pub fn omega_taper(x: f64, y: f64, width: f64) -> f64 {
    ramp(OMEGA_HALF - x.abs(), width) * ramp(OMEGA_HALF - y.abs(), width)
}

fn check_taper(width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0 && width < OMEGA_HALF) {
        return Err(Error::InvalidParameter(format!(
            "taper width must lie in (0, {OMEGA_HALF}), got {width}"
        )));
    }
    Ok(())
}

/// `c(x) = 1 + 0.2 sin(2 pi x1) + 0.1 cos(2 pi x2)`, blended to 1 across the
/// taper band.
pub fn build_sound_speed(grid: &Grid2D, taper_width: f64) -> Result<ScalarField2D> {
    check_taper(taper_width)?;
    ScalarField2D::from_fn(*grid, |x, y| {
        let bump = 0.2 * (2.0 * PI * x).sin() + 0.1 * (2.0 * PI * y).cos();
        1.0 + omega_taper(x, y, taper_width) * bump
    })
}

/// Two attenuating disks over a background that grows with `x1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationParams {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d1_center: [f64; 2],
    pub d1_radius_sq: f64,
    pub d2_center: [f64; 2],
    pub d2_radius_sq: f64,
    pub taper_width: f64,
}

impl AttenuationParams {
    /// High-attenuation configuration (`d1 = 9`).
    pub fn example1() -> Self {
        Self {
            d1: 9.0,
            d2: 4.0,
            d3: 1.5,
            d1_center: [1.0 / 3.0, -0.5],
            d1_radius_sq: 0.05,
            d2_center: [-1.0 / 3.0, 1.0 / 3.0],
            d2_radius_sq: 0.07,
            taper_width: DEFAULT_TAPER_WIDTH,
        }
    }

    /// Lower-attenuation configuration; differs from [`Self::example1`] only in `d1`.
    pub fn example2() -> Self {
        Self { d1: 5.0, ..Self::example1() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d1", self.d1), ("d2", self.d2), ("d3", self.d3)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("d1_radius_sq", self.d1_radius_sq), ("d2_radius_sq", self.d2_radius_sq)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !self.d1_center.iter().chain(&self.d2_center).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("disk centers must be finite".into()));
        }
        check_taper(self.taper_width)
    }

    /// Unmollified piecewise map at `(x, y)`.
    pub fn piecewise(&self, x: f64, y: f64) -> f64 {
        if outside_omega(x, y) {
            return 0.0;
        }
        let in_disk = |c: [f64; 2], r2: f64| (x - c[0]).powi(2) + (y - c[1]).powi(2) < r2;
        // D1 takes precedence where the disks overlap; the presets keep them disjoint.
        if in_disk(self.d1_center, self.d1_radius_sq) {
            self.d1
        } else if in_disk(self.d2_center, self.d2_radius_sq) {
            self.d2
        } else {
            self.d3 * (1.0 + x)
        }
    }
}

impl Default for AttenuationParams {
    fn default() -> Self {
        Self::example1()
    }
}

/// Mollified and tapered attenuation. The mollifier is a Gaussian with
/// standard deviation two grid cells per axis.
pub fn build_attenuation(grid: &Grid2D, params: &AttenuationParams) -> Result<ScalarField2D> {
    params.validate()?;
    let raw = ScalarField2D::from_fn(*grid, |x, y| params.piecewise(x, y))?;
    let smooth = gaussian_blur_aniso(&raw, 2.0 * grid.dx(), 2.0 * grid.dy())?;
    let values = smooth
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (x, y) = grid.coords(k);
            (v * omega_taper(x, y, params.taper_width)).max(0.0)
        })
        .collect();
    ScalarField2D::new(*grid, values)
}

/// One Shepp-Logan ellipse: intensity, semi-axes, center, rotation (degrees).
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let xr = dx * c + dy * s;
        let yr = -dx * s + dy * c;
        (xr / self.a).powi(2) + (yr / self.b).powi(2) <= 1.0
    }
}

const fn ell(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Ellipse {
    Ellipse { intensity, a, b, x0, y0, phi_deg }
}

/// Ten-ellipse Shepp-Logan head in the high-contrast (Toft) intensities.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    ell(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    ell(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    ell(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    ell(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    ell(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    ell(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    ell(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    ell(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    ell(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    ell(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Geometric scale applied to the unit Shepp-Logan table.
pub fn phantom_scale() -> f64 {
    PHANTOM_EXTENT / SHEPP_LOGAN[0].b
}

/// Unblurred phantom intensity at a physical point.
pub fn shepp_logan(x: f64, y: f64) -> f64 {
    let s = phantom_scale();
    let (xs, ys) = (x / s, y / s);
    SHEPP_LOGAN.iter().filter(|e| e.contains(xs, ys)).map(|e| e.intensity).sum()
}

/// Shepp-Logan phantom blurred by a Gaussian of standard deviation
/// `blur_radius` (length units). Support stays inside the disk of radius 0.95.
pub fn build_phantom(grid: &Grid2D, blur_radius: f64) -> Result<ScalarField2D> {
    if !(blur_radius.is_finite() && (0.0..=MAX_BLUR_RADIUS).contains(&blur_radius)) {
        return Err(Error::InvalidParameter(format!(
            "blur radius must lie in [0, {MAX_BLUR_RADIUS}], got {blur_radius}"
        )));
    }
    let raw = ScalarField2D::from_fn(*grid, shepp_logan)?;
    gaussian_blur_aniso(&raw, blur_radius, blur_radius)
}

/// Convolution with a normalized Gaussian truncated to the ellipse of
/// `4 sigma` radius; values beyond the grid are treated as zero. A zero
/// sigma returns the input unchanged.
pub fn gaussian_blur_aniso(field: &ScalarField2D, sigma_x: f64, sigma_y: f64) -> Result<ScalarField2D> {
    if sigma_x == 0.0 && sigma_y == 0.0 {
        return Ok(field.clone());
    }
    if !(sigma_x > 0.0 && sigma_y > 0.0 && sigma_x.is_finite() && sigma_y.is_finite()) {
        return Err(Error::InvalidParameter(format!("blur sigmas must be positive, got {sigma_x}, {sigma_y}")));
    }
    let g = *field.grid();
    let (dx, dy) = (g.dx(), g.dy());
    let rx = (KERNEL_RADII * sigma_x / dx).floor() as isize;
    let ry = (KERNEL_RADII * sigma_y / dy).floor() as isize;
    let mut taps = Vec::new();
    let mut total = 0.0;
    for ky in -ry..=ry {
        for kx in -rx..=rx {
            let (ex, ey) = (kx as f64 * dx / sigma_x, ky as f64 * dy / sigma_y);
            let r2 = ex * ex + ey * ey;
            if r2 <= KERNEL_RADII * KERNEL_RADII {
                let w = (-0.5 * r2).exp();
                total += w;
                taps.push((kx, ky, w));
            }
        }
    }
    for t in &mut taps {
        t.2 /= total;
    }

    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let src = field.values();
    let mut out = vec![0.0; g.len()];
    // scatter non-zero inputs; phantoms and coefficient maps are mostly zero near the edges
    for j in 0..ny {
        for i in 0..nx {
            let v = src[(j * nx + i) as usize];
            if v == 0.0 {
                continue;
            }
            for &(kx, ky, w) in &taps {
                let (ii, jj) = (i + kx, j + ky);
                if ii >= 0 && jj >= 0 && ii < nx && jj < ny {
                    out[(jj * nx + ii) as usize] += w * v;
                }
            }
        }
    }
    ScalarField2D::new(g, out)
}

/// Sound speed and attenuation on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    c: ScalarField2D,
    a: ScalarField2D,
}

impl Medium {
    /// Validates positivity, non-negativity and the free-space condition
    /// outside `Omega`.
    pub fn new(c: ScalarField2D, a: ScalarField2D) -> Result<Self> {
        check_same_grid(c.grid(), a.grid())?;
        let g = *c.grid();
        for (k, (&cv, &av)) in c.values().iter().zip(a.values()).enumerate() {
            if cv <= 0.0 {
                return Err(Error::InvalidParameter(format!("sound speed {cv} <= 0 at node {k}")));
            }
            if av < 0.0 {
                return Err(Error::InvalidParameter(format!("attenuation {av} < 0 at node {k}")));
            }
            let (x, y) = g.coords(k);
            if outside_omega(x, y) && (cv != 1.0 || av != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "c - 1 and a must vanish outside Omega, node {k} has c = {cv}, a = {av}"
                )));
            }
        }
        Ok(Self { c, a })
    }

    /// Variable sound speed together with the two-disk attenuation.
    pub fn standard(grid: &Grid2D, params: &AttenuationParams) -> Result<Self> {
        Self::new(build_sound_speed(grid, params.taper_width)?, build_attenuation(grid, params)?)
    }

    pub fn grid(&self) -> &Grid2D {
        self.c.grid()
    }

    pub fn c(&self) -> &ScalarField2D {
        &self.c
    }

    pub fn a(&self) -> &ScalarField2D {
        &self.a
    }

    pub fn max_c(&self) -> f64 {
        self.c.max()
    }

    /// Same sound speed, attenuation multiplied by `factor >= 0`.
    pub fn with_attenuation_scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::InvalidParameter(format!("attenuation factor {factor}")));
        }
        Self::new(self.c.clone(), self.a.scale(factor)?)
    }

    pub fn undamped(&self) -> Self {
        Self { c: self.c.clone(), a: ScalarField2D::zeros(*self.grid()) }
    }

    /// Thermoacoustic initial data `(f, -a f)`.
    pub fn tat_data(&self, f: &ScalarField2D) -> Result<WavePair> {
        let ut = f.zip_with(&self.a, |fv, av| -av * fv)?;
        WavePair::new(f.clone(), ut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest(grid: &Grid2D, field: &ScalarField2D, x: f64, y: f64) -> f64 {
        let i = ((x - grid.x_min()) / grid.dx()).round() as usize;
        let j = ((y - grid.y_min()) / grid.dy()).round() as usize;
        field.get(i, j)
    }

    #[test]
    fn sound_speed_values() {
        let g = Grid2D::square(201, 1.0).unwrap();
        let c = build_sound_speed(&g, DEFAULT_TAPER_WIDTH).unwrap();
        assert!((nearest(&g, &c, 0.0, 0.0) - 1.1).abs() < 1e-12);
        assert!((nearest(&g, &c, 0.25, 0.25) - 1.2).abs() < 1e-12);
        for k in g.boundary_nodes() {
            assert_eq!(c.values()[k], 1.0);
        }

        let big = Grid2D::square(121, 1.2).unwrap();
        let c = build_sound_speed(&big, DEFAULT_TAPER_WIDTH).unwrap();
        for (k, &v) in c.values().iter().enumerate() {
            let (x, y) = big.coords(k);
            if x.abs().max(y.abs()) > 1.0 + 1e-9 {
                assert_eq!(v, 1.0);
            }
        }
        assert!(c.min() > 0.0);
    }

    #[test]
    fn attenuation_values() {
        let g = Grid2D::square(201, 1.0).unwrap();
        let p = AttenuationParams::example1();
        let a = build_attenuation(&g, &p).unwrap();
        assert!((nearest(&g, &a, 1.0 / 3.0, -0.5) - 9.0).abs() < 0.01);
        assert!((nearest(&g, &a, 0.0, 0.9) - 1.5).abs() < 1e-9);
        assert!(a.min() >= 0.0);

        let big = Grid2D::square(241, 1.2).unwrap();
        let a = build_attenuation(&big, &p).unwrap();
        assert_eq!(nearest(&big, &a, 1.2, 0.0), 0.0);
        for (k, &v) in a.values().iter().enumerate() {
            let (x, y) = big.coords(k);
            if x.abs().max(y.abs()) >= 1.0 - 1e-12 {
                assert_eq!(v, 0.0, "node ({x}, {y})");
            }
        }
    }

    #[test]
    fn attenuation_monotone_in_each_magnitude() {
        let g = Grid2D::square(81, 1.0).unwrap();
        let base = AttenuationParams::example2();
        let a0 = build_attenuation(&g, &base).unwrap();
        for bump in [
            AttenuationParams { d1: base.d1 + 1.0, ..base },
            AttenuationParams { d2: base.d2 + 0.5, ..base },
            AttenuationParams { d3: base.d3 + 0.25, ..base },
        ] {
            let a1 = build_attenuation(&g, &bump).unwrap();
            for (lo, hi) in a0.values().iter().zip(a1.values()) {
                assert!(hi >= lo);
            }
        }
    }

    #[test]
    fn presets_differ_only_in_d1() {
        let (e1, e2) = (AttenuationParams::example1(), AttenuationParams::example2());
        assert_eq!((e1.d1, e2.d1), (9.0, 5.0));
        assert_eq!(AttenuationParams { d1: 9.0, ..e2 }, e1);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = AttenuationParams { d2_radius_sq: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = AttenuationParams { d3: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = AttenuationParams { taper_width: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
    }

    /// Independent point-in-ellipse summation over the published table.
    fn oracle(x: f64, y: f64) -> f64 {
        let table: [[f64; 6]; 10] = [
            [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
            [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
            [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
            [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
            [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
            [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
            [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
            [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
            [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
            [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
        ];
        let s = 0.85 / 0.92;
        let (x, y) = (x / s, y / s);
        let mut total = 0.0;
        for [amp, a, b, x0, y0, phi] in table {
            let t = phi * PI / 180.0;
            let u = (x - x0) * t.cos() + (y - y0) * t.sin();
            let v = (y - y0) * t.cos() - (x - x0) * t.sin();
            if u * u / (a * a) + v * v / (b * b) <= 1.0 {
                total += amp;
            }
        }
        total
    }

    #[test]
    fn phantom_matches_table_summation() {
        // outer shell only, inside brain, inside a ventricle, inside small tumours
        for (x, y) in [(0.0, 0.84), (0.0, 0.0), (0.2, 0.0), (-0.2, 0.05), (0.0, 0.32), (0.0, -0.55), (0.7, 0.7)] {
            assert_eq!(shepp_logan(x, y), oracle(x, y), "at ({x}, {y})");
        }
        assert!((shepp_logan(0.0, 0.84) - 1.0).abs() < 1e-15);
        assert!((shepp_logan(0.0, 0.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn phantom_support_and_identity_blur() {
        let g = Grid2D::square(201, 1.0).unwrap();
        let f = build_phantom(&g, MAX_BLUR_RADIUS).unwrap();
        for (k, &v) in f.values().iter().enumerate() {
            let (x, y) = g.coords(k);
            if x.hypot(y) > 0.95 {
                assert_eq!(v, 0.0);
            }
        }
        let sharp = build_phantom(&g, 0.0).unwrap();
        let direct = ScalarField2D::from_fn(g, shepp_logan).unwrap();
        assert_eq!(sharp, direct);
        assert!(build_phantom(&g, -0.1).is_err());
    }

    #[test]
    fn blur_preserves_mass() {
        let g = Grid2D::square(201, 1.0).unwrap();
        let sharp = build_phantom(&g, 0.0).unwrap();
        let soft = build_phantom(&g, DEFAULT_BLUR_RADIUS).unwrap();
        let (m0, m1): (f64, f64) = (sharp.values().iter().sum(), soft.values().iter().sum());
        assert!(((m1 - m0) / m0).abs() < 1e-3);
    }

    #[test]
    fn medium_rejects_exterior_violations() {
        let g = Grid2D::square(41, 1.2).unwrap();
        let c = ScalarField2D::constant(g, 1.1);
        let a = ScalarField2D::zeros(g);
        assert!(Medium::new(c, a.clone()).is_err());
        assert!(Medium::new(ScalarField2D::constant(g, 1.0), a).is_ok());
        let m = Medium::standard(&g, &AttenuationParams::example1()).unwrap();
        assert!(m.max_c() <= 1.3 + 1e-12);
        assert!(m.with_attenuation_scaled(-1.0).is_err());
    }
}
