//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tat_core::media::{build_sound_speed, AttenuationParams, DEFAULT_BLUR_RADIUS, MAX_BLUR_RADIUS};
use tat_core::{Grid2D, SolveConfig, Variant};

/// Sampling used for the travel-time estimates in `summary.txt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub boundary_samples: usize,
    pub angle_samples: usize,
    pub ray_step: f64,
    /// Nodes per axis of the fast-marching grid.
    pub distance_samples: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { boundary_samples: 64, angle_samples: 64, ray_step: 0.01, distance_samples: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Nodes per axis on `[-1, 1]^2`.
    pub grid: usize,
    pub attenuation: AttenuationParams,
    /// Standard deviation of the phantom blur.
    pub blur_radius: f64,
    pub solve: SolveConfig,
    pub variant: Variant,
    pub n_terms: usize,
    pub out_dir: PathBuf,
    /// Dump `u` of the forward run every this many steps; 0 disables.
    pub snapshot_every: usize,
    /// Seed for the random test data of `selftest`.
    pub seed: u64,
    pub geometry: GeometryConfig,
}

pub const PRESETS: [&str; 4] = ["example1", "example2", "example1-full", "example2-full"];

impl ExperimentConfig {
    /// Named configuration. The `-full` presets use the 501 x 501 grid and
    /// take hours for 100 terms.
    pub fn preset(name: &str) -> Result<Self> {
        let (attenuation, grid) = match name {
            "example1" => (AttenuationParams::example1(), 201),
            "example2" => (AttenuationParams::example2(), 201),
            "example1-full" => (AttenuationParams::example1(), 501),
            "example2-full" => (AttenuationParams::example2(), 501),
            other => bail!("unknown preset `{other}` (expected one of {})", PRESETS.join(", ")),
        };
        Ok(Self {
            grid,
            attenuation,
            blur_radius: DEFAULT_BLUR_RADIUS,
            solve: SolveConfig::default(),
            variant: Variant::SignFlipped,
            n_terms: 100,
            out_dir: PathBuf::from("out").join(name),
            snapshot_every: 0,
            seed: 0,
            geometry: GeometryConfig::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn imaging_grid(&self) -> Result<Grid2D> {
        Ok(Grid2D::square(self.grid, 1.0)?)
    }

    /// Checks every parameter against the rules of the module that uses it.
    pub fn validate(&self) -> Result<()> {
        if self.grid < 5 {
            bail!("grid must have at least 5 nodes per axis, got {}", self.grid);
        }
        self.attenuation.validate()?;
        if !(self.blur_radius.is_finite() && (0.0..=MAX_BLUR_RADIUS).contains(&self.blur_radius)) {
            bail!("blur_radius must lie in [0, {MAX_BLUR_RADIUS}], got {}", self.blur_radius);
        }
        let grid = self.imaging_grid()?;
        self.solve.time_axis(&grid, build_sound_speed(&grid, self.attenuation.taper_width)?.max())?;
        if self.n_terms == 0 {
            bail!("n_terms must be at least 1");
        }
        let g = &self.geometry;
        if g.boundary_samples < 8 || g.angle_samples < 8 {
            bail!("geometry needs at least 8 boundary and 8 angle samples");
        }
        if g.distance_samples < 16 {
            bail!("geometry needs at least 16 distance samples per axis");
        }
        if !(g.ray_step.is_finite() && g.ray_step > 0.0) {
            bail!("ray_step must be positive, got {}", g.ray_step);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_differ_only_in_d1() {
        let a = ExperimentConfig::preset("example1").unwrap();
        let b = ExperimentConfig::preset("example2").unwrap();
        assert_eq!((a.attenuation.d1, b.attenuation.d1), (9.0, 5.0));
        let b_as_a = ExperimentConfig {
            attenuation: AttenuationParams { d1: 9.0, ..b.attenuation },
            out_dir: a.out_dir.clone(),
            ..b
        };
        assert_eq!(a, b_as_a);
        assert_eq!(ExperimentConfig::preset("example1-full").unwrap().grid, 501);
        assert!(ExperimentConfig::preset("example3").is_err());
    }

    #[test]
    fn json_round_trip() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = ExperimentConfig::preset("example1").unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        value["n_term"] = 5.into();
        assert!(serde_json::from_value::<ExperimentConfig>(value.clone()).is_err());
        value.as_object_mut().unwrap().remove("n_term");
        value["solve"]["pml"] = 3.into();
        assert!(serde_json::from_value::<ExperimentConfig>(value).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = ExperimentConfig::preset("example2").unwrap();
        assert!(base.validate().is_ok());
        let bad = [
            ExperimentConfig { grid: 3, ..base.clone() },
            ExperimentConfig { n_terms: 0, ..base.clone() },
            ExperimentConfig { blur_radius: 0.5, ..base.clone() },
            ExperimentConfig { solve: SolveConfig { cfl: 1.5, ..base.solve }, ..base.clone() },
            ExperimentConfig { attenuation: AttenuationParams { d1: -1.0, ..base.attenuation }, ..base.clone() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
