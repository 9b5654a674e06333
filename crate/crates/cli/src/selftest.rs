//! Quick consistency checks on random data, seeded for repeatability.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tat_core::field::{decode_field, encode_field};
use tat_core::reconstruct::{error_op, time_reverse, measure};
use tat_core::wave::{forward_solve, harmonic_extension};
use tat_core::{AttenuationParams, Grid2D, Medium, Result, ScalarField2D, SolveConfig, Variant, WavePair};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_pair(grid: Grid2D, rng: &mut StdRng) -> Result<WavePair> {
    let mut bumps = |n: usize| {
        let params: Vec<[f64; 4]> = (0..n)
            .map(|_| [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), rng.gen_range(0.1..0.25), rng.gen_range(-1.0..1.0)])
            .collect();
        ScalarField2D::from_fn(grid, move |x, y| {
            params.iter().map(|[cx, cy, w, amp]| amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp()).sum()
        })
    };
    WavePair::new(bumps(3)?, bumps(2)?)
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Runs every check on a 41 x 41 grid.
pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid2D::square(41, 1.0)?;
    let cfg = SolveConfig::default();
    let medium = Medium::standard(&grid, &AttenuationParams::example2())?;
    let g = random_pair(grid, &mut rng)?;
    let mut checks = Vec::new();

    let alpha = rng.gen_range(-3.0..3.0);
    let base = error_op(&g, &medium, &cfg, Variant::SignFlipped)?;
    let scaled = error_op(&g.scale(alpha)?, &medium, &cfg, Variant::SignFlipped)?;
    let diff = scaled.sub(&base.scale(alpha)?)?.max_abs() / (alpha.abs() * base.max_abs()).max(f64::MIN_POSITIVE);
    checks.push(check("error operator is linear", diff <= 1e-10, format!("relative deviation {diff:.2e}")));

    let run = forward_solve(&g, &medium, &cfg)?;
    let e0 = run.energy_series[0];
    let rise = run.energy_series.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let allowed = 1e-3 * e0 * run.dt;
    checks.push(check("local energy does not grow", rise <= allowed, format!("largest step increase {rise:.2e}, allowed {allowed:.2e}")));

    let undamped = medium.undamped();
    let h = measure(&g, &undamped, &cfg)?;
    let gap = time_reverse(&h, &undamped, &cfg, Variant::SignFlipped)?
        .sub(&time_reverse(&h, &undamped, &cfg, Variant::Homan)?)?
        .max_abs();
    checks.push(check("variants agree without damping", gap <= 1e-12, format!("max difference {gap:.2e}")));

    let data: Vec<f64> = (0..grid.boundary_nodes().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let phi = harmonic_extension(&data, &grid)?;
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let inside = phi.min() >= lo - 1e-9 && phi.max() <= hi + 1e-9;
    checks.push(check("harmonic extension obeys maximum principle", inside, format!("range [{:.4}, {:.4}] within [{lo:.4}, {hi:.4}]", phi.min(), phi.max())));

    let mut bytes = Vec::new();
    encode_field(g.u(), &mut bytes)?;
    let back = decode_field(&mut bytes.as_slice())?;
    checks.push(check("field files round-trip", &back == g.u(), format!("{} bytes", bytes.len())));
    Ok(checks)
}
