//! Time-domain solvers for `u_tt + a u_t - c^2 Lap u = 0`.
//!
//! All solvers share one explicit scheme: centered second differences in time,
//! the damping term averaged over `n+1` and `n-1`, and the 5-point Laplacian.
//! The forward solver runs on the imaging grid padded by a margin and a
//! perfectly matched layer; the backward solvers run on the imaging grid alone
//! with Dirichlet data injected at its boundary nodes.

mod energy;
mod forward;
mod harmonic;
mod interior;

pub use energy::{box_extended_energy_series, extended_energy, leapfrog_energy, local_energy, Region};
pub use forward::{forward_solve, forward_solve_with, ForwardOptions, ForwardResult, Snapshots};
pub use harmonic::{harmonic_extension, HARMONIC_TOL};
pub use interior::{backward_solve, interior_solve, reverse_trace, InteriorRun, Sign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid2D;

/// Target normal-incidence reflection used when `pml_strength` is left unset.
pub const DEFAULT_PML_REFLECTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Final time.
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Courant number `c_max dt / min(dx, dy)`.
    pub cfl: f64,
    /// Absorbing layer thickness in cells; 0 disables the layer.
    pub pml_cells: usize,
    /// Peak absorption `sigma_max` (1/time). `None` picks the value giving
    /// a normal-incidence reflection of [`DEFAULT_PML_REFLECTION`].
    pub pml_strength: Option<f64>,
    /// Gap between the imaging grid and the absorbing layer (length units).
    pub box_margin: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { t_final: 3.0, cfl: 0.5, pml_cells: 20, pml_strength: None, box_margin: 0.2 }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {}", self.t_final)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.box_margin.is_finite() && self.box_margin >= 0.0) {
            return Err(Error::InvalidParameter(format!("box_margin must be >= 0, got {}", self.box_margin)));
        }
        if let Some(s) = self.pml_strength {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParameter(format!("pml_strength must be >= 0, got {s}")));
            }
        }
        Ok(())
    }

    /// Time step and step count shared by every solve on `grid` with wave
    /// speeds bounded by `c_max`.
    pub fn time_axis(&self, grid: &Grid2D, c_max: f64) -> Result<TimeAxis> {
        self.validate()?;
        // free space outside the imaging grid has c = 1
        let c_max = c_max.max(1.0);
        let h = grid.dx().min(grid.dy());
        let nominal = self.cfl * h / c_max;
        let steps = (self.t_final / nominal).ceil().max(1.0) as usize;
        let dt = self.t_final / steps as f64;
        let number = c_max * dt * (grid.dx().powi(-2) + grid.dy().powi(-2)).sqrt();
        if number > 1.0 {
            return Err(Error::CflViolation { number });
        }
        Ok(TimeAxis { steps, dt })
    }
}

/// `steps` time steps of size `dt`; traces carry `steps + 1` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    pub steps: usize,
    pub dt: f64,
}

/// 5-point Laplacian at interior node `k` of an `nx`-wide row-major array.
#[inline(always)]
pub(crate) fn laplacian(u: &[f64], k: usize, nx: usize, idx2: f64, idy2: f64) -> f64 {
    (u[k - 1] - 2.0 * u[k] + u[k + 1]) * idx2 + (u[k - nx] - 2.0 * u[k] + u[k + nx]) * idy2
}
