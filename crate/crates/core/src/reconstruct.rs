//! Measurement, time reversal and the Neumann series `f = sum_m K^m A h`.
//!
//! `A` back-propagates a boundary trace from `t = T` to `t = 0` starting from
//! the harmonic extension of the last sample, `K = Id - A Lambda` is the
//! error operator. The series is accumulated as `r_0 = A h`,
//! `r_{m+1} = K r_m`, `s_m = r_0 + ... + r_m`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_same_grid, BoundaryTrace, ScalarField2D, WavePair};
use crate::media::Medium;
use crate::wave::{
    backward_solve, forward_solve_with, harmonic_extension, local_energy, ForwardOptions, Region, Sign, SolveConfig,
};

/// Which back-propagation is used for `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Solve `v_tt - a v_t - c^2 Lap v = 0` backward; damped in reversed time.
    #[serde(rename = "signflip")]
    SignFlipped,
    /// Solve the forward equation `v_tt + a v_t - c^2 Lap v = 0` backward.
    #[serde(rename = "homan")]
    Homan,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signflip" => Ok(Variant::SignFlipped),
            "homan" => Ok(Variant::Homan),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}` (expected signflip or homan)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::SignFlipped => "signflip",
            Variant::Homan => "homan",
        })
    }
}

impl Variant {
    pub fn sign(self) -> Sign {
        match self {
            Variant::SignFlipped => Sign::Minus,
            Variant::Homan => Sign::Plus,
        }
    }
}

/// Boundary trace `Lambda f` of the free-space solution with initial data `f`.
pub fn measure(f: &WavePair, medium: &Medium, cfg: &SolveConfig) -> Result<BoundaryTrace> {
    let opts = ForwardOptions { diagnostics: false, snapshots: None };
    Ok(forward_solve_with(f, medium, cfg, &opts)?.trace)
}

/// `A h`: back-propagation from the terminal pair `(P h(T), 0)`.
pub fn time_reverse(h: &BoundaryTrace, medium: &Medium, cfg: &SolveConfig, variant: Variant) -> Result<WavePair> {
    let grid = *medium.grid();
    h.check_grid(&grid)?;
    let phi = harmonic_extension(h.sample(h.nt() - 1), &grid)?;
    let terminal = WavePair::new(phi, ScalarField2D::zeros(grid))?;
    backward_solve(h, &terminal, medium, variant.sign(), cfg)
}

/// `K g = g - A Lambda g`.
pub fn error_op(g: &WavePair, medium: &Medium, cfg: &SolveConfig, variant: Variant) -> Result<WavePair> {
    let h = measure(g, medium, cfg)?;
    g.sub(&time_reverse(&h, medium, cfg, variant)?)
}

/// Energy norm `(int |grad g1|^2 + c^-2 |g2|^2)^(1/2)` over the imaging grid.
pub fn energy_norm(g: &WavePair, c: &ScalarField2D) -> Result<f64> {
    Ok(local_energy(g, c, Region::Full)?.sqrt())
}

/// `100 |recon - truth|_2 / |truth|_2` over all grid nodes.
pub fn relative_error(recon: &ScalarField2D, truth: &ScalarField2D) -> Result<f64> {
    check_same_grid(recon.grid(), truth.grid())?;
    let norm = truth.l2();
    if norm == 0.0 {
        return Err(Error::ZeroNorm("truth"));
    }
    let diff: f64 = recon.values().iter().zip(truth.values()).map(|(r, t)| (r - t) * (r - t)).sum();
    Ok(100.0 * diff.sqrt() / norm)
}

/// `|K g|_H / |g|_H`.
pub fn contraction_ratio(g: &WavePair, medium: &Medium, cfg: &SolveConfig, variant: Variant) -> Result<f64> {
    let norm = energy_norm(g, medium.c())?;
    if norm == 0.0 {
        return Err(Error::ZeroNorm("input pair"));
    }
    Ok(energy_norm(&error_op(g, medium, cfg, variant)?, medium.c())? / norm)
}

pub const CSV_HEADER: &str = "term,error_percent,contraction_ratio";

/// One CSV line for term `m` (counted from 0); non-finite ratios are omitted.
pub fn csv_row(m: usize, error_percent: Option<f64>, ratio: Option<f64>) -> String {
    let err = error_percent.map(|e| format!("{e:.6}")).unwrap_or_default();
    let ratio = ratio.filter(|r| r.is_finite()).map(|r| format!("{r:.6}")).unwrap_or_default();
    format!("{},{err},{ratio}", m + 1)
}

/// Progress of [`neumann_series_with`] after one term.
#[derive(Debug, Clone, Copy)]
pub struct TermUpdate<'a> {
    /// Term index counted from 0.
    pub term: usize,
    pub sum: &'a WavePair,
    pub error_percent: Option<f64>,
    /// `|r_m|_H / |r_{m-1}|_H`; absent for the first term.
    pub contraction_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    /// Partial sums `s_0, ..., s_{n-1}`.
    pub iterates: Vec<WavePair>,
    /// Error of each partial sum's first component against the truth; empty
    /// when no truth was given.
    pub errors_percent: Vec<f64>,
    /// `|r_{m+1}|_H / |r_m|_H` for each computed residual; `NaN` when `r_m = 0`.
    pub contraction_ratios: Vec<f64>,
}

impl ReconstructionReport {
    pub fn final_iterate(&self) -> &WavePair {
        self.iterates.last().expect("a report holds at least one term")
    }

    /// CSV with header [`CSV_HEADER`]; terms count from 1 and missing values
    /// are left empty.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for m in 0..self.iterates.len() {
            let ratio = m.checked_sub(1).and_then(|i| self.contraction_ratios.get(i)).copied();
            writeln!(w, "{}", csv_row(m, self.errors_percent.get(m).copied(), ratio))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// Runs `n_terms` terms of the Neumann series, calling `on_term` after each.
/// Returning an error from the callback stops the series.
pub fn neumann_series_with(
    h: &BoundaryTrace,
    medium: &Medium,
    cfg: &SolveConfig,
    variant: Variant,
    n_terms: usize,
    truth: Option<&ScalarField2D>,
    mut on_term: impl FnMut(&TermUpdate) -> Result<()>,
) -> Result<ReconstructionReport> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be at least 1".into()));
    }
    if let Some(t) = truth {
        check_same_grid(t.grid(), medium.grid())?;
    }
    let c = medium.c();
    let mut residual = time_reverse(h, medium, cfg, variant)?;
    let mut sum = residual.clone();
    let mut iterates = Vec::with_capacity(n_terms);
    let mut errors_percent = Vec::new();
    let mut contraction_ratios = Vec::new();

    for m in 0..n_terms {
        if m > 0 {
            let next = error_op(&residual, medium, cfg, variant)?;
            let before = energy_norm(&residual, c)?;
            let after = energy_norm(&next, c)?;
            contraction_ratios.push(if before > 0.0 { after / before } else { f64::NAN });
            residual = next;
            sum = sum.add(&residual)?;
        }
        if sum.max_abs().is_nan() || sum.max_abs().is_infinite() {
            return Err(Error::Diverged { term: m });
        }
        let err = truth.map(|t| relative_error(sum.u(), t)).transpose()?;
        if let Some(e) = err {
            errors_percent.push(e);
        }
        let ratio = m.checked_sub(1).map(|i| contraction_ratios[i]);
        on_term(&TermUpdate { term: m, sum: &sum, error_percent: err, contraction_ratio: ratio })?;
        iterates.push(sum.clone());
    }
    Ok(ReconstructionReport { iterates, errors_percent, contraction_ratios })
}

pub fn neumann_series(
    h: &BoundaryTrace,
    medium: &Medium,
    cfg: &SolveConfig,
    variant: Variant,
    n_terms: usize,
    truth: Option<&ScalarField2D>,
) -> Result<ReconstructionReport> {
    neumann_series_with(h, medium, cfg, variant, n_terms, truth, |_| Ok(()))
}
