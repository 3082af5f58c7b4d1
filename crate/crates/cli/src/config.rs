//! Experiment configuration: a JSON document with a schema version.

use std::path::Path;

use serde::Deserialize;
use subnyq_core::sampling::DEFAULT_GRID;
use subnyq_core::{presets, FrequencySet, RateSpec, RateUnit, SpectralDensity};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    source: RawSpectrum,
    #[serde(default)]
    noise: Option<RawSpectrum>,
    sampler: RawSampler,
    #[serde(default)]
    rates: Option<RawRates>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    oracle: Option<RawOracle>,
}

/// Either explicit positive-side `[lo, hi, value]` segments or a built-in.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    #[serde(default)]
    segments: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    sigma2: Option<f64>,
    #[serde(default)]
    w: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawFs {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawFilters {
    Keyword(String),
    Supports(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    fs: RawFs,
    #[serde(default)]
    branches: Option<usize>,
    #[serde(default)]
    filters: Option<RawFilters>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    values: Vec<f64>,
    #[serde(default)]
    unit: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    #[serde(default)]
    window: Option<usize>,
    #[serde(default)]
    offsets: Option<usize>,
    #[serde(default)]
    block_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filters {
    AllPass,
    Optimal,
    /// One frequency set per branch; each branch filter is its indicator.
    Supports(Vec<FrequencySet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub window: usize,
    pub offsets: usize,
    pub block_window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SpectralDensity,
    pub noise: SpectralDensity,
    pub fs: Vec<f64>,
    pub branches: usize,
    pub filters: Filters,
    pub rates: Vec<RateSpec>,
    pub grid: usize,
    pub output: Option<String>,
    pub oracle: OracleSettings,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn spectrum(raw: &RawSpectrum, field: &str) -> Result<SpectralDensity, CliError> {
    let built = match (&raw.segments, &raw.preset) {
        (Some(segs), None) => SpectralDensity::from_positive(segs.iter().map(|s| (s[0], s[1], s[2]))),
        (None, Some(name)) => {
            let sigma2 = raw.sigma2.unwrap_or(1.0);
            let w = raw.w.unwrap_or(0.5);
            match name.as_str() {
                "rectangular" => presets::rectangular(sigma2, w),
                "rectangular_noise" => {
                    let gamma = raw
                        .gamma
                        .ok_or_else(|| cfg_err(format!("{field}.gamma is required for rectangular_noise")))?;
                    presets::rectangular_noise(sigma2, w, gamma)
                }
                "band_pass" => presets::band_pass(sigma2),
                "triangular" => presets::triangular(w, raw.steps.unwrap_or(16)),
                "bimodal" => presets::bimodal(),
                other => return Err(cfg_err(format!("{field}.preset: unknown preset '{other}'"))),
            }
        }
        (Some(_), Some(_)) => return Err(cfg_err(format!("{field}: give either segments or preset, not both"))),
        (None, None) => return Err(cfg_err(format!("{field}: missing segments or preset"))),
    };
    built.map_err(|e| cfg_err(format!("{field}: {e}")))
}

fn fs_values(raw: &RawFs) -> Result<Vec<f64>, CliError> {
    let values = match *raw {
        RawFs::List(ref v) => v.clone(),
        RawFs::Range { start, stop, step } => {
            if !(step > 0.0) || !(stop >= start) {
                return Err(cfg_err("sampler.fs: range needs step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    };
    if values.is_empty() {
        return Err(cfg_err("sampler.fs: at least one sampling frequency is required"));
    }
    if let Some(bad) = values.iter().find(|&&f| !(f > 0.0 && f.is_finite())) {
        return Err(cfg_err(format!(
            "sampler.fs: sampling frequencies must be positive, got {bad}"
        )));
    }
    Ok(values)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| cfg_err(format!("config: {e}")))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                raw.schema_version
            )));
        }
        let source = spectrum(&raw.source, "source")?;
        let noise = match &raw.noise {
            Some(n) => spectrum(n, "noise")?,
            None => SpectralDensity::zero(),
        };
        let fs = fs_values(&raw.sampler.fs)?;
        let branches = raw.sampler.branches.unwrap_or(1);
        if branches == 0 {
            return Err(cfg_err("sampler.branches: must be at least 1"));
        }
        let filters = match &raw.sampler.filters {
            None => Filters::AllPass,
            Some(RawFilters::Keyword(k)) => match k.as_str() {
                "allpass" => Filters::AllPass,
                "optimal" => Filters::Optimal,
                other => {
                    return Err(cfg_err(format!(
                        "sampler.filters: expected allpass, optimal or a list of supports, got '{other}'"
                    )))
                }
            },
            Some(RawFilters::Supports(sets)) => {
                if sets.len() != branches {
                    return Err(cfg_err(format!(
                        "sampler.filters: {} supports given for {branches} branches",
                        sets.len()
                    )));
                }
                let mut out = Vec::with_capacity(sets.len());
                for (i, set) in sets.iter().enumerate() {
                    if set
                        .iter()
                        .any(|p| !(p[0] < p[1]) || !p[0].is_finite() || !p[1].is_finite())
                    {
                        return Err(cfg_err(format!("sampler.filters[{i}]: intervals need lo < hi")));
                    }
                    out.push(FrequencySet::from_pairs(set.iter().map(|p| (p[0], p[1]))));
                }
                Filters::Supports(out)
            }
        };
        let rates = match &raw.rates {
            None => Vec::new(),
            Some(r) => {
                let unit = match r.unit.as_deref().unwrap_or("bits_per_time") {
                    "bits_per_time" => RateUnit::BitsPerTime,
                    "bits_per_sample" => RateUnit::BitsPerSample,
                    "nats_per_time" => RateUnit::NatsPerTime,
                    other => return Err(cfg_err(format!("rates.unit: unknown unit '{other}'"))),
                };
                if let Some(bad) = r.values.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(cfg_err(format!(
                        "rates.values: rates must be finite and nonnegative, got {bad}"
                    )));
                }
                r.values.iter().map(|&value| RateSpec { value, unit }).collect()
            }
        };
        let grid = raw.grid.unwrap_or(DEFAULT_GRID);
        if grid < 16 {
            return Err(cfg_err(format!("grid: must be at least 16, got {grid}")));
        }
        let o = raw.oracle.as_ref();
        let oracle = OracleSettings {
            window: o.and_then(|o| o.window).unwrap_or(64),
            offsets: o.and_then(|o| o.offsets).unwrap_or(16),
            block_window: o.and_then(|o| o.block_window).unwrap_or(32),
        };
        if oracle.offsets == 0 || oracle.block_window == 0 {
            return Err(cfg_err("oracle: offsets and block_window must be positive"));
        }
        Ok(Self {
            source,
            noise,
            fs,
            branches,
            filters,
            rates,
            grid,
            output: raw.output,
            oracle,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn require_rates(&self) -> Result<(), CliError> {
        if self.rates.is_empty() {
            Err(cfg_err("rates: at least one rate is required for this mode"))
        } else {
            Ok(())
        }
    }
}
