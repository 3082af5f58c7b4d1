//! Reverse waterfilling and the distortion-rate functions built on it.
//!
//! A curve is reduced to `(width, level)` pairs. Rates are in bits (base-2
//! logarithm) per unit of the curve's frequency axis: bits per time unit for
//! continuous-time curves, bits per sample for curves over normalized
//! frequency.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::sampling::{
    eigen_curves_multi, maximal_af_sets, polyphase_conditional_psd, s_tilde_single, sup_ratio_curve, CurveCell,
    EigenCurves, SamplerSpec, ScalarCurve,
};
use crate::spectra::{cells_between, dedup_points, snr_ratio, ComplexGainProfile, FrequencySet, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillSolution {
    pub theta: f64,
    pub rate: f64,
    pub distortion: f64,
    pub mmse_part: f64,
    pub lossy_part: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    BitsPerTime,
    BitsPerSample,
    NatsPerTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    pub value: f64,
    pub unit: RateUnit,
}

impl RateSpec {
    pub fn bits_per_time(value: f64) -> Self {
        Self {
            value,
            unit: RateUnit::BitsPerTime,
        }
    }

    pub fn bits_per_sample(value: f64) -> Self {
        Self {
            value,
            unit: RateUnit::BitsPerSample,
        }
    }

    /// Rate in bits per time unit; `fs` is needed for per-sample rates.
    pub fn to_bits_per_time(&self, fs: f64) -> Result<f64> {
        if !(self.value >= 0.0 && self.value.is_finite()) {
            return Err(invalid(format!(
                "rate must be finite and nonnegative, got {}",
                self.value
            )));
        }
        match self.unit {
            RateUnit::BitsPerTime => Ok(self.value),
            RateUnit::NatsPerTime => Ok(self.value / std::f64::consts::LN_2),
            RateUnit::BitsPerSample => {
                if !(fs > 0.0) {
                    return Err(invalid("per-sample rate needs a positive sampling frequency"));
                }
                Ok(self.value * fs)
            }
        }
    }
}

/// Anything that can be flattened into `(width, level)` pairs.
pub trait Levels {
    fn levels(&self) -> Vec<(f64, f64)>;
}

impl Levels for ScalarCurve {
    fn levels(&self) -> Vec<(f64, f64)> {
        self.cells().iter().map(|c| (c.width(), c.value)).collect()
    }
}

impl Levels for EigenCurves {
    fn levels(&self) -> Vec<(f64, f64)> {
        self.cells()
            .iter()
            .flat_map(|c| c.eigenvalues.iter().map(move |&l| (c.width(), l.max(0.0))))
            .collect()
    }
}

impl Levels for [(f64, f64)] {
    fn levels(&self) -> Vec<(f64, f64)> {
        self.to_vec()
    }
}

impl Levels for Vec<(f64, f64)> {
    fn levels(&self) -> Vec<(f64, f64)> {
        self.clone()
    }
}

fn max_level(levels: &[(f64, f64)]) -> f64 {
    levels.iter().filter(|l| l.0 > 0.0).map(|l| l.1).fold(0.0, f64::max)
}

/// `½ Σ w log₂⁺(λ/θ)`.
pub fn rate_of_theta<C: Levels + ?Sized>(curves: &C, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(invalid(format!("water level must be positive, got {theta}")));
    }
    Ok(curves
        .levels()
        .iter()
        .filter(|&&(_, l)| l > theta)
        .map(|&(w, l)| 0.5 * w * (l / theta).log2())
        .sum())
}

/// Distortion split at water level `theta`; the rate field is filled in.
pub fn distortion_of_theta<C: Levels + ?Sized>(sigma2: f64, curves: &C, theta: f64) -> WaterfillSolution {
    let levels = curves.levels();
    solution_at(sigma2, &levels, theta.max(0.0), 1.0)
}

fn solution_at(sigma2: f64, levels: &[(f64, f64)], theta: f64, scale: f64) -> WaterfillSolution {
    let (mut total, mut lossy, mut rate) = (0.0, 0.0, 0.0);
    for &(w, l) in levels {
        total += w * l;
        lossy += w * l.min(theta);
        if l > theta && theta > 0.0 {
            rate += 0.5 * w * (l / theta).log2();
        }
    }
    let mmse_part = sigma2 - scale * total;
    let lossy_part = scale * lossy;
    WaterfillSolution {
        theta,
        rate,
        distortion: mmse_part + lossy_part,
        mmse_part,
        lossy_part,
    }
}

/// Water level whose rate is `rate` bits.
///
/// Levels are sorted in decreasing order; when the top `j` of them are
/// active, `log₂ θ = (Σ w log₂ λ − 2R) / Σ w` over those levels, and the
/// first `j` whose solution does not exceed the next level is the answer.
pub fn solve_theta_for_rate<C: Levels + ?Sized>(curves: &C, rate: f64) -> Result<f64> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(invalid(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let mut levels: Vec<(f64, f64)> = curves
        .levels()
        .into_iter()
        .filter(|&(w, l)| w > 0.0 && l > 0.0)
        .collect();
    if rate == 0.0 {
        return Ok(max_level(&levels));
    }
    if levels.is_empty() {
        return Err(Error::UnattainableRate { rate });
    }
    levels.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
    let (mut width, mut weighted_log) = (0.0, 0.0);
    for (j, &(w, l)) in levels.iter().enumerate() {
        width += w;
        weighted_log += w * l.log2();
        let theta = ((weighted_log - 2.0 * rate) / width).exp2();
        let next = levels.get(j + 1).map_or(0.0, |n| n.1);
        if theta >= next {
            return Ok(theta.min(l));
        }
    }
    unreachable!("the last level always accepts its water level")
}

/// Waterfills `curves` at `rate` bits per unit of their frequency axis.
pub fn waterfill<C: Levels + ?Sized>(sigma2: f64, curves: &C, rate: f64) -> Result<WaterfillSolution> {
    let levels = curves.levels();
    let theta = solve_theta_for_rate(&levels, rate)?;
    let mut sol = solution_at(sigma2, &levels, theta, 1.0);
    if rate == 0.0 {
        sol.rate = 0.0;
    }
    Ok(sol)
}

fn check_rate(rate: f64) -> Result<()> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("rate must be finite and nonnegative, got {rate}")))
    }
}

/// Estimator spectrum `|S_XZ|²/S_Z` of `X` from the unsampled filtered
/// observation, over `(-f_max, f_max)`.
pub fn estimator_psd_unsampled(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
) -> Result<ScalarCurve> {
    let ratio = snr_ratio(sx, sn)?;
    let fmax = sx.f_max();
    let mut pts = ratio.breakpoints();
    pts.extend(h.breakpoints());
    dedup_points(&mut pts);
    let base = (-fmax, fmax);
    if fmax == 0.0 {
        return Ok(ScalarCurve::from_cells(base, Vec::new()));
    }
    let cells = cells_between(-fmax, fmax, &pts)
        .into_iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let value = if h.power_gain(mid) > 0.0 {
                ratio.evaluate(mid)
            } else {
                0.0
            };
            CurveCell { lo, hi, value }
        })
        .collect();
    Ok(ScalarCurve::from_cells(base, cells))
}

/// Distortion-rate function of `X` from the continuous filtered observation
/// `Z = h * (X + η)`.
pub fn idrf_stationary(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    rate: f64,
) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    waterfill(sx.total_power(), &estimator_psd_unsampled(sx, sn, h)?, rate)
}

/// Discrete-time distortion-rate function for an estimator spectrum over
/// `φ ∈ (-1/2, 1/2)` at `rate` bits per sample.
pub fn idrf_discrete(sigma2: f64, estimator: &ScalarCurve, rate: f64) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    waterfill(sigma2, estimator, rate)
}

/// Vector distortion-rate function: `rate` bits per vector symbol spread
/// over the `M` eigenvalue curves, distortion averaged over components.
/// `sigma2` is the per-component average power.
pub fn idrf_vector(sigma2: f64, curves: &EigenCurves, m: usize, rate: f64) -> Result<WaterfillSolution> {
    if m < 1 {
        return Err(invalid("vector dimension must be at least 1"));
    }
    check_rate(rate)?;
    let levels = curves.levels();
    let theta = solve_theta_for_rate(&levels, rate)?;
    let mut sol = solution_at(sigma2, &levels, theta, 1.0 / m as f64);
    if rate == 0.0 {
        sol.rate = 0.0;
    }
    Ok(sol)
}

/// `D(fs, R)` of a uniform sampler with pre-sampling filter `h`.
pub fn drf_sampled_single(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    rate: f64,
) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    waterfill(sx.total_power(), &s_tilde_single(sx, sn, h, fs)?, rate)
}

/// `D(fs, R)` of a filter bank, on at least `n_grid` frequency cells.
pub fn drf_sampled_multi(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    spec: &SamplerSpec,
    rate: f64,
    n_grid: usize,
) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    waterfill(sx.total_power(), &eigen_curves_multi(sx, sn, spec, n_grid)?, rate)
}

/// `(width, level)` pairs of `ratio` restricted to `set`.
fn restricted_levels(ratio: &SpectralDensity, set: &FrequencySet) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for seg in ratio.segments() {
        let (lo, hi) = (seg.interval.lo(), seg.interval.hi());
        let piece = FrequencySet::from_pairs([(lo, hi), (-hi, -lo)]);
        let w = piece.intersect(set).measure();
        if w > 0.0 {
            out.push((w, seg.value));
        }
    }
    out
}

/// `D*(P, fs, R)`: the optimal filter bank of `P` branches, whose
/// indicator filters select the maximal aliasing-free sets.
pub fn drf_sampled_optimal(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    fs: f64,
    p: usize,
    rate: f64,
) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    let ratio = snr_ratio(sx, sn)?;
    let sets = maximal_af_sets(&ratio, fs, p)?;
    let levels: Vec<(f64, f64)> = sets.iter().flat_map(|s| restricted_levels(&ratio, s)).collect();
    waterfill(sx.total_power(), &levels, rate)
}

/// `D†(fs, R)`: waterfilling over the measure-`fs` superlevel set of the
/// SNR ratio, the limit of `D*` as the number of branches grows.
pub fn d_dagger(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64, rate: f64) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    if !(fs > 0.0) {
        return Err(invalid(format!("sampling frequency must be positive, got {fs}")));
    }
    let ratio = snr_ratio(sx, sn)?;
    let (set, _) = ratio.superlevel_set_of_measure(fs);
    waterfill(sx.total_power(), &restricted_levels(&ratio, &set), rate)
}

/// Waterfilling over `sup_k ratio(f − fs k)`; no single-branch sampler at
/// rate `fs` does better.
pub fn d_star_lower_bound(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64, rate: f64) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    waterfill(sx.total_power(), &sup_ratio_curve(sx, sn, fs)?, rate)
}

/// Lower bound on `D(fs, R)` from coding each polyphase component at
/// `R / fs` bits per sample, averaged over `n_delta` offsets.
pub fn polyphase_lower_bound(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    rate: f64,
    n_delta: usize,
) -> Result<f64> {
    check_rate(rate)?;
    if n_delta < 8 {
        return Err(invalid(format!("need at least 8 polyphase offsets, got {n_delta}")));
    }
    let s_tilde = s_tilde_single(sx, sn, h, fs)?;
    let mmse = sx.total_power() - s_tilde.integral();
    let per_sample = rate / fs;
    let mut lossy = 0.0;
    for j in 0..n_delta {
        let curve = polyphase_conditional_psd(sx, sn, h, fs, j as f64 / n_delta as f64)?;
        lossy += match solve_theta_for_rate(&curve, per_sample) {
            Ok(theta) => distortion_of_theta(0.0, &curve, theta).lossy_part,
            Err(Error::UnattainableRate { .. }) => 0.0,
            Err(e) => return Err(e),
        };
    }
    Ok(mmse + lossy / n_delta as f64)
}

/// Distortion-rate function of the estimator process alone: only the lossy
/// part, so `mmse_part` is zero.
pub fn drf_of_estimator(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    rate: f64,
) -> Result<WaterfillSolution> {
    check_rate(rate)?;
    let curve = s_tilde_single(sx, sn, h, fs)?;
    let mut sol = waterfill(curve.integral(), &curve, rate)?;
    sol.mmse_part = 0.0;
    sol.distortion = sol.lossy_part;
    Ok(sol)
}
