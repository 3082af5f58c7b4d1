//! Built-in spectra used by tests, benches and the figure sweeps.

use crate::error::{invalid, Result};
use crate::spectra::SpectralDensity;

/// Flat spectrum of total power `sigma2` on `(-w, w)`.
pub fn rectangular(sigma2: f64, w: f64) -> Result<SpectralDensity> {
    if !(w > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {w}")));
    }
    SpectralDensity::lowpass(w, sigma2 / (2.0 * w))
}

/// Flat noise on `(-w, w)` at `1/gamma` times the level of
/// `rectangular(sigma2, w)`; `gamma = ∞` gives no noise.
pub fn rectangular_noise(sigma2: f64, w: f64, gamma: f64) -> Result<SpectralDensity> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("SNR must be positive, got {gamma}")));
    }
    if gamma.is_infinite() {
        return Ok(SpectralDensity::zero());
    }
    rectangular(sigma2 / gamma, w)
}

/// Total power `sigma2` spread evenly on `1 <= |f| < 2`.
pub fn band_pass(sigma2: f64) -> Result<SpectralDensity> {
    SpectralDensity::flat_band(1.0, 2.0, 0.5 * sigma2)
}

/// Triangle `1 - |f|/w` sampled at `steps` cell midpoints and scaled to
/// unit power.
pub fn triangular(w: f64, steps: usize) -> Result<SpectralDensity> {
    if !(w > 0.0) || steps == 0 {
        return Err(invalid("triangular spectrum needs w > 0 and at least one step"));
    }
    let dx = w / steps as f64;
    let raw: Vec<(f64, f64, f64)> = (0..steps)
        .map(|i| {
            let lo = dx * i as f64;
            (lo, lo + dx, 1.0 - (i as f64 + 0.5) / steps as f64)
        })
        .collect();
    let power: f64 = raw.iter().map(|&(lo, hi, v)| 2.0 * v * (hi - lo)).sum();
    SpectralDensity::from_positive(raw.into_iter().map(|(lo, hi, v)| (lo, hi, v / power)))
}

/// Unit-power spectrum with a peak at DC and a second, stronger one near
/// `0.65`, on `|f| < 1`. Every edge lies on a multiple of `0.05`.
pub fn bimodal() -> Result<SpectralDensity> {
    let shape = [
        (0.00, 0.10, 1.00),
        (0.10, 0.25, 0.55),
        (0.25, 0.45, 0.10),
        (0.45, 0.55, 0.60),
        (0.55, 0.75, 1.20),
        (0.75, 1.00, 0.25),
    ];
    let power: f64 = shape.iter().map(|&(lo, hi, v)| 2.0 * v * (hi - lo)).sum();
    SpectralDensity::from_positive(shape.iter().map(|&(lo, hi, v)| (lo, hi, v / power)))
}
