//! 8-bit binary greymaps.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tat_core::ScalarField2D;

/// Encodes `field` as P5 with row 0 at the top (largest `y`). Values are
/// mapped affinely from `range`, or the field extrema, onto `[0, 255]` and
/// clamped; a degenerate range gives mid-grey.
pub fn encode_pgm(field: &ScalarField2D, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    let (lo, hi) = range.unwrap_or((field.min(), field.max()));
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        bail!("invalid render range [{lo}, {hi}]");
    }
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(nx * ny);
    for j in (0..ny).rev() {
        for i in 0..nx {
            let byte = if hi == lo {
                128
            } else {
                ((field.get(i, j) - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
            };
            out.push(byte);
        }
    }
    Ok(out)
}

pub fn render_pgm(field: &ScalarField2D, path: impl AsRef<Path>, range: Option<(f64, f64)>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(field, range)?;
    let mut file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(&bytes)?;
    Ok(())
}
