//! Shared inputs for the pipeline benchmarks.

use subnyq_core::{presets, ComplexGainProfile, FrequencySet, HermitianMatrix, SamplerSpec, SpectralDensity};

pub struct Setup {
    pub source: SpectralDensity,
    pub noise: SpectralDensity,
    pub bank: SamplerSpec,
}

/// Bimodal source, light white noise and a three-branch bank of band filters.
pub fn bimodal_bank(fs: f64) -> Setup {
    let source = presets::bimodal().expect("preset");
    let noise = SpectralDensity::lowpass(2.0, 0.02).expect("noise");
    let bands = [(0.0, 0.45), (0.45, 0.75), (0.75, 1.0)];
    let filters = bands
        .iter()
        .map(|&(lo, hi)| ComplexGainProfile::indicator(&FrequencySet::symmetric_band(lo, hi)))
        .collect();
    Setup {
        source,
        noise,
        bank: SamplerSpec::new(fs, filters).expect("bank"),
    }
}

/// Dense real symmetric test matrix with a spread spectrum.
pub fn symmetric_matrix(n: usize) -> HermitianMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = (i.min(j) as f64, i.max(j) as f64);
                    if i == j {
                        n as f64 - a
                    } else {
                        1.0 / (1.0 + b - a) + 0.1 * (a + b).sin()
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    HermitianMatrix::from_real_rows(&refs).expect("square")
}
