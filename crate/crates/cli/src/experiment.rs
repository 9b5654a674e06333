//! Experiment runs driven by an [`ExperimentConfig`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use tat_core::field::{write_field, write_trace};
use tat_core::media::build_phantom;
use tat_core::raygeo::{estimate_t0, estimate_t1, ray_fan};
use tat_core::reconstruct::{csv_row, neumann_series_with, CSV_HEADER};
use tat_core::wave::{forward_solve_with, ForwardOptions, ForwardResult, Snapshots};
use tat_core::{BoundaryTrace, Grid2D, Medium, ScalarField2D};

use crate::config::ExperimentConfig;
use crate::pgm::{encode_pgm, render_pgm};

pub const FAILURE_MARKER: &str = "FAILED";

/// Medium and ground truth of one configuration.
pub struct Setup {
    pub grid: Grid2D,
    pub medium: Medium,
    pub phantom: ScalarField2D,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.imaging_grid()?;
        Ok(Self {
            grid,
            medium: Medium::standard(&grid, &cfg.attenuation)?,
            phantom: build_phantom(&grid, cfg.blur_radius)?,
        })
    }

    /// Writes `c`, `a` and the phantom as `.tatf` and `.pgm`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, field) in [("c", self.medium.c()), ("a", self.medium.a()), ("phantom", &self.phantom)] {
            write_field(field, dir.join(format!("{name}.tatf")))?;
            render_pgm(field, dir.join(format!("{name}.pgm")), None)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub t0: f64,
    pub t1: f64,
}

pub fn geometry(cfg: &ExperimentConfig, c: &ScalarField2D) -> Result<Geometry> {
    let g = &cfg.geometry;
    Ok(Geometry {
        t0: estimate_t0(c, g.boundary_samples, g.angle_samples, g.ray_step)?,
        t1: estimate_t1(c, g.distance_samples)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub geometry: Geometry,
    pub errors_percent: Vec<f64>,
}

fn create_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn forward(cfg: &ExperimentConfig, setup: &Setup, diagnostics: bool) -> Result<ForwardResult> {
    let snapshots = (cfg.snapshot_every > 0).then(|| Snapshots {
        every: cfg.snapshot_every,
        dir: cfg.out_dir.join("snapshots"),
    });
    if let Some(s) = &snapshots {
        create_out_dir(&s.dir)?;
    }
    let data = setup.medium.tat_data(&setup.phantom)?;
    Ok(forward_solve_with(&data, &setup.medium, &cfg.solve, &ForwardOptions { diagnostics, snapshots })?)
}

/// Forward run only: medium files, `trace.tatt` and `energy.csv` with the
/// energy on the imaging grid and the accumulated dissipation.
pub fn run_forward(cfg: &ExperimentConfig) -> Result<ForwardResult> {
    let setup = Setup::build(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    setup.write(&cfg.out_dir)?;
    let result = forward(cfg, &setup, true)?;
    write_trace(&result.trace, cfg.out_dir.join("trace.tatt"))?;
    let mut csv = BufWriter::new(File::create(cfg.out_dir.join("energy.csv"))?);
    writeln!(csv, "time,energy,dissipated")?;
    for (n, (e, d)) in result.energy_series.iter().zip(&result.damping_series).enumerate() {
        writeln!(csv, "{:.9},{e:.12e},{d:.12e}", (n as f64 + 0.5) * result.dt)?;
    }
    csv.flush()?;
    Ok(result)
}

/// Ray fan and travel-time estimates; writes `rays.csv`.
pub fn run_geodesic(cfg: &ExperimentConfig) -> Result<Geometry> {
    let setup = Setup::build(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let c = setup.medium.c();
    let g = &cfg.geometry;
    let mut csv = BufWriter::new(File::create(cfg.out_dir.join("rays.csv"))?);
    writeln!(csv, "x,y,angle,length")?;
    let fan = ray_fan(c, g.boundary_samples, g.angle_samples, g.ray_step)?;
    for s in &fan {
        writeln!(csv, "{:.9},{:.9},{:.9},{:.9}", s.x0[0], s.x0[1], s.angle, s.length)?;
    }
    csv.flush()?;
    let t0 = fan.iter().map(|s| s.length).fold(0.0, f64::max);
    Ok(Geometry { t0, t1: estimate_t1(c, g.distance_samples)? })
}

/// Full reconstruction experiment. Nothing is written when the configuration
/// is invalid; a failure after the first output leaves a `FAILED` file with
/// the error next to the partial results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let setup = Setup::build(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let marker = cfg.out_dir.join(FAILURE_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker)?;
    }
    let outcome = reconstruct(cfg, &setup);
    if let Err(e) = &outcome {
        std::fs::write(&marker, format!("{e:#}\n"))?;
    }
    outcome
}

fn reconstruct(cfg: &ExperimentConfig, setup: &Setup) -> Result<ExperimentSummary> {
    let dir = &cfg.out_dir;
    setup.write(dir)?;
    let geometry = geometry(cfg, setup.medium.c())?;
    let trace: BoundaryTrace = forward(cfg, setup, false)?.trace;
    write_trace(&trace, dir.join("trace.tatt"))?;

    let range = Some((setup.phantom.min(), setup.phantom.max()));
    let mut csv = BufWriter::new(File::create(dir.join("errors.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;
    let report = neumann_series_with(
        &trace,
        &setup.medium,
        &cfg.solve,
        cfg.variant,
        cfg.n_terms,
        Some(&setup.phantom),
        |update| {
            writeln!(csv, "{}", csv_row(update.term, update.error_percent, update.contraction_ratio))?;
            csv.flush()?;
            let image = encode_pgm(update.sum.u(), range).map_err(|e| std::io::Error::other(format!("{e:#}")))?;
            std::fs::write(dir.join(format!("term_{:03}.pgm", update.term + 1)), image)?;
            Ok(())
        },
    )?;
    write_field(report.final_iterate().u(), dir.join("reconstruction.tatf"))?;

    let summary = ExperimentSummary { geometry, errors_percent: report.errors_percent };
    std::fs::write(dir.join("summary.txt"), summary_text(cfg, &summary))?;
    Ok(summary)
}

fn summary_text(cfg: &ExperimentConfig, s: &ExperimentSummary) -> String {
    let first = s.errors_percent.first().copied().unwrap_or(f64::NAN);
    let last = s.errors_percent.last().copied().unwrap_or(f64::NAN);
    format!(
        "grid {0}x{0}\nvariant {1}\nT {2}\nterms {3}\nt0_estimate {4:.6}\nt1_estimate {5:.6}\n\
         first_error_percent {first:.6}\nfinal_error_percent {last:.6}\n",
        cfg.grid, cfg.variant, cfg.solve.t_final, s.errors_percent.len(), s.geometry.t0, s.geometry.t1,
    )
}
