//! Uniform 2-D grids, sampled fields, wave states, boundary traces and their
//! binary file formats.
//!
//! Nodes are stored row-major with `y` as the slow index: node `(i, j)` lives
//! at `(x_min + i*dx, y_min + j*dy)` and has linear index `j*nx + i`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const FIELD_MAGIC: &[u8; 4] = b"TATF";
const TRACE_MAGIC: &[u8; 4] = b"TATT";

/// Uniform node grid on `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        if nx > u32::MAX as usize || ny > u32::MAX as usize {
            return Err(Error::InvalidGrid("node count does not fit in 32 bits".into()));
        }
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidGrid(format!(
                "empty box [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        let grid = Self { nx, ny, x_min, x_max, y_min, y_max };
        if !(grid.dx() > 0.0 && grid.dy() > 0.0) {
            return Err(Error::InvalidGrid("spacing underflows to zero".into()));
        }
        Ok(grid)
    }

    /// Square `n x n` grid on `[-half, half]^2`.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Self::new(n, n, -half, half, -half, half)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    /// Physical coordinates of a linear node index.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        (self.x(idx % self.nx), self.y(idx / self.nx))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = (idx % self.nx, idx / self.nx);
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Boundary node indices, counterclockwise from `(x_min, y_min)`, each
    /// node exactly once.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx - 1) + 2 * (ny - 1));
        out.extend((0..nx).map(|i| self.index(i, 0)));
        out.extend((1..ny).map(|j| self.index(nx - 1, j)));
        out.extend((0..nx - 1).rev().map(|i| self.index(i, ny - 1)));
        out.extend((1..ny - 1).rev().map(|j| self.index(0, j)));
        out
    }
}

/// Real-valued function sampled on a [`Grid2D`]. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field", index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        assert!(value.is_finite());
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Euclidean norm of the nodal values (no quadrature weights).
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map(|v| s * v)
    }
}

pub(crate) fn check_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// State `[u, u_t]` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePair {
    u: ScalarField2D,
    ut: ScalarField2D,
}

impl WavePair {
    pub fn new(u: ScalarField2D, ut: ScalarField2D) -> Result<Self> {
        check_same_grid(u.grid(), ut.grid())?;
        Ok(Self { u, ut })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { u: ScalarField2D::zeros(grid), ut: ScalarField2D::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid2D {
        self.u.grid()
    }

    pub fn u(&self) -> &ScalarField2D {
        &self.u
    }

    pub fn ut(&self) -> &ScalarField2D {
        &self.ut
    }

    pub fn into_parts(self) -> (ScalarField2D, ScalarField2D) {
        (self.u, self.ut)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(self.u.zip_with(&other.u, |a, b| a + b)?, self.ut.zip_with(&other.ut, |a, b| a + b)?)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(self.u.zip_with(&other.u, |a, b| a - b)?, self.ut.zip_with(&other.ut, |a, b| a - b)?)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::new(self.u.scale(s)?, self.ut.scale(s)?)
    }

    pub fn is_zero(&self) -> bool {
        self.u.values().iter().chain(self.ut.values()).all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.ut.max_abs())
    }
}

/// Wave values `h(t_n, s_k)` at the boundary sensors of a grid, sampled at
/// `t_n = n*dt` for `n = 0..nt`. Stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    nt: usize,
    dt: f64,
    sensors: Vec<usize>,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(nt: usize, dt: f64, sensors: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if nt == 0 {
            return Err(Error::InvalidParameter("trace needs at least one time sample".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("trace time step must be positive, got {dt}")));
        }
        if values.len() != nt * sensors.len() {
            return Err(Error::SizeMismatch { expected: nt * sensors.len(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "trace", index });
        }
        Ok(Self { nt, dt, sensors, values })
    }

    pub fn zeros(grid: &Grid2D, nt: usize, dt: f64) -> Result<Self> {
        let sensors = grid.boundary_nodes();
        let n = nt * sensors.len();
        Self::new(nt, dt, sensors, vec![0.0; n])
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sensors(&self) -> &[usize] {
        &self.sensors
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sensor readings at time index `n`.
    pub fn sample(&self, n: usize) -> &[f64] {
        let ns = self.sensors.len();
        &self.values[n * ns..(n + 1) * ns]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks that the sensors are exactly the boundary of `grid` in
    /// canonical order.
    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.sensors != grid.boundary_nodes() {
            return Err(Error::TraceMismatch("sensor list is not the boundary of the grid".into()));
        }
        Ok(())
    }
}

fn write_header_f64s(w: &mut impl Write, vals: &[f64]) -> std::io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    Ok(f64::from_le_bytes(b))
}

fn read_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    if &b != magic {
        return Err(Error::Format(format!("bad magic {b:?}")));
    }
    Ok(())
}

/// Reads the remaining bytes as little-endian f64s, requiring exactly `expected` of them.
fn read_payload(r: &mut impl Read, expected: usize, what: &'static str) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 || bytes.len() / 8 != expected {
        return Err(Error::SizeMismatch { expected, found: bytes.len() / 8 });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what, index });
    }
    Ok(values)
}

pub fn encode_field(field: &ScalarField2D, w: &mut impl Write) -> std::io::Result<()> {
    let g = field.grid();
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(g.nx() as u32).to_le_bytes())?;
    w.write_all(&(g.ny() as u32).to_le_bytes())?;
    write_header_f64s(w, &[g.x_min(), g.x_max(), g.y_min(), g.y_max()])?;
    write_header_f64s(w, field.values())
}

pub fn decode_field(r: &mut impl Read) -> Result<ScalarField2D> {
    read_magic(r, FIELD_MAGIC)?;
    let nx = read_u32(r)? as usize;
    let ny = read_u32(r)? as usize;
    let bounds = [read_f64(r)?, read_f64(r)?, read_f64(r)?, read_f64(r)?];
    let grid = Grid2D::new(nx, ny, bounds[0], bounds[1], bounds[2], bounds[3])
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let values = read_payload(r, grid.len(), "field payload")?;
    ScalarField2D::new(grid, values)
}

pub fn write_field(field: &ScalarField2D, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField2D> {
    decode_field(&mut BufReader::new(File::open(path)?))
}

pub fn encode_trace(trace: &BoundaryTrace, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&(trace.nt() as u32).to_le_bytes())?;
    w.write_all(&(trace.n_sensors() as u32).to_le_bytes())?;
    w.write_all(&trace.dt().to_le_bytes())?;
    write_header_f64s(w, trace.values())
}

/// Decodes a trace; sensor positions are not stored in the file, so they are
/// taken from the boundary of `grid`.
pub fn decode_trace(r: &mut impl Read, grid: &Grid2D) -> Result<BoundaryTrace> {
    read_magic(r, TRACE_MAGIC)?;
    let nt = read_u32(r)? as usize;
    let ns = read_u32(r)? as usize;
    let dt = read_f64(r)?;
    let sensors = grid.boundary_nodes();
    if ns != sensors.len() {
        return Err(Error::TraceMismatch(format!(
            "file has {ns} sensors, grid boundary has {}",
            sensors.len()
        )));
    }
    let values = read_payload(r, nt * ns, "trace payload")?;
    BoundaryTrace::new(nt, dt, sensors, values)
}

pub fn write_trace(trace: &BoundaryTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_trace(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>, grid: &Grid2D) -> Result<BoundaryTrace> {
    decode_trace(&mut BufReader::new(File::open(path)?), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn make_grid_spacings() {
        let g = Grid2D::square(501, 1.0).unwrap();
        assert!((g.dx() - 0.004).abs() < 1e-15);
        assert!((g.dy() - 0.004).abs() < 1e-15);
        let g = Grid2D::new(3, 3, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!((g.dx(), g.dy()), (0.5, 0.5));
        let g = Grid2D::new(3, 5, 0.0, 1.0, 0.0, 2.0).unwrap();
        assert_eq!((g.dx(), g.dy()), (0.5, 0.5));
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(Grid2D::new(2, 3, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(3, 3, 0.0, f64::NAN, 0.0, 1.0).is_err());
        assert!(Grid2D::new(3, 3, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(3, 3, 0.0, 1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn boundary_is_ccw_and_complete() {
        let g = Grid2D::new(4, 3, 0.0, 3.0, 0.0, 2.0).unwrap();
        let b = g.boundary_nodes();
        assert_eq!(b, vec![0, 1, 2, 3, 7, 11, 10, 9, 8, 4]);
        let mut sorted = b.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), b.len());
        let expected: Vec<usize> = (0..g.len()).filter(|&k| g.is_boundary(k)).collect();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn field_rejects_non_finite_and_wrong_size() {
        let g = Grid2D::square(3, 1.0).unwrap();
        assert!(matches!(ScalarField2D::new(g, vec![0.0; 8]), Err(Error::SizeMismatch { .. })));
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(ScalarField2D::new(g, v), Err(Error::NonFinite { index: 4, .. })));
    }

    #[test]
    fn zero_field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.tatf");
        let f = ScalarField2D::zeros(Grid2D::square(3, 1.0).unwrap());
        write_field(&f, &path).unwrap();
        assert_eq!(read_field(&path).unwrap(), f);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 44 + 9 * 8);
    }

    #[test]
    fn header_size_mismatch_is_reported() {
        let f = ScalarField2D::constant(Grid2D::square(3, 1.0).unwrap(), 1.5);
        let mut bytes = Vec::new();
        encode_field(&f, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 8);
        assert!(matches!(decode_field(&mut bytes.as_slice()), Err(Error::SizeMismatch { expected: 9, found: 8 })));
    }

    #[test]
    fn malformed_header_and_nan_payload() {
        let f = ScalarField2D::constant(Grid2D::square(3, 1.0).unwrap(), 1.5);
        let mut bytes = Vec::new();
        encode_field(&f, &mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_field(&mut bad.as_slice()), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&1u32.to_le_bytes());
        assert!(matches!(decode_field(&mut bad.as_slice()), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_field(&mut bad.as_slice()), Err(Error::NonFinite { .. })));

        assert!(matches!(decode_field(&mut &bytes[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn trace_round_trip() {
        let g = Grid2D::square(4, 1.0).unwrap();
        let sensors = g.boundary_nodes();
        let values: Vec<f64> = (0..3 * sensors.len()).map(|k| k as f64 * 0.25 - 1.0).collect();
        let t = BoundaryTrace::new(3, 0.01, sensors, values).unwrap();
        let mut bytes = Vec::new();
        encode_trace(&t, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"TATT");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 3 * 12 * 8);
        assert_eq!(decode_trace(&mut bytes.as_slice(), &g).unwrap(), t);
        let other = Grid2D::square(5, 1.0).unwrap();
        assert!(decode_trace(&mut bytes.as_slice(), &other).is_err());
    }

    proptest! {
        #[test]
        fn field_bytes_round_trip(
            nx in 3usize..12,
            ny in 3usize..12,
            x0 in -10.0f64..10.0,
            w in 0.1f64..5.0,
            seed in proptest::collection::vec(-1e6f64..1e6, 144),
        ) {
            let g = Grid2D::new(nx, ny, x0, x0 + w, -w, 2.0 * w).unwrap();
            let f = ScalarField2D::new(g, seed[..g.len()].to_vec()).unwrap();
            let mut bytes = Vec::new();
            encode_field(&f, &mut bytes).unwrap();
            let back = decode_field(&mut bytes.as_slice()).unwrap();
            let mut again = Vec::new();
            encode_field(&back, &mut again).unwrap();
            prop_assert_eq!(bytes, again);
            prop_assert_eq!(back, f);
        }
    }
}
