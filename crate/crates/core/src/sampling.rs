//! From spectral densities to the estimator spectra that waterfilling
//! consumes: the scalar curve `S̃_{X|Y}` of a single sampler, the eigenvalue
//! curves of a filter bank, MMSE values, maximal aliasing-free sets and the
//! Landau-rate bound.
//!
//! Scalar paths are exact: the base cell is split at every translate of
//! every breakpoint, so each cell sees constant values. Filter-bank branches
//! sample at `fs / P`; their matrices are built from translates by `fs / P`
//! over the cell `(-fs/(2P), fs/(2P))`.

use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{hermitian_eig, inv_sqrt_psd, HermitianMatrix, DEFAULT_RANK_TOL};
use crate::spectra::{
    dedup_points, lattice_cells, snr_ratio, translate_range, ComplexGainProfile, FrequencySet, SpectralDensity,
};

/// Default number of frequency cells for filter-bank curves.
pub const DEFAULT_GRID: usize = 2048;

/// Uniform sampler (`P = 1`) or filter bank (`P > 1`) of total rate `fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    fs: f64,
    branches: Vec<ComplexGainProfile>,
}

impl SamplerSpec {
    pub fn new(fs: f64, branches: Vec<ComplexGainProfile>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid(format!("sampling frequency must be positive, got {fs}")));
        }
        if branches.is_empty() {
            return Err(invalid("a sampler needs at least one branch"));
        }
        Ok(Self { fs, branches })
    }

    pub fn single(fs: f64, filter: ComplexGainProfile) -> Result<Self> {
        Self::new(fs, vec![filter])
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Per-branch sampling rate `fs / P`.
    pub fn branch_rate(&self) -> f64 {
        self.fs / self.branches.len() as f64
    }

    pub fn branches(&self) -> &[ComplexGainProfile] {
        &self.branches
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveCell {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl CurveCell {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Piecewise-constant nonnegative curve on a base interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCurve {
    base: (f64, f64),
    cells: Vec<CurveCell>,
}

impl ScalarCurve {
    pub fn from_cells(base: (f64, f64), cells: Vec<CurveCell>) -> Self {
        Self { base, cells }
    }

    /// Curve that is `value` on the whole base interval.
    pub fn flat(base: (f64, f64), value: f64) -> Self {
        Self {
            base,
            cells: vec![CurveCell {
                lo: base.0,
                hi: base.1,
                value,
            }],
        }
    }

    pub fn base(&self) -> (f64, f64) {
        self.base
    }

    pub fn cells(&self) -> &[CurveCell] {
        &self.cells
    }

    pub fn integral(&self) -> f64 {
        self.cells.iter().map(|c| c.value * c.width()).sum()
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().map(|c| c.value).fold(0.0, f64::max)
    }

    pub fn value_at(&self, f: f64) -> f64 {
        let idx = self.cells.partition_point(|c| c.hi <= f);
        match self.cells.get(idx) {
            Some(c) if c.lo <= f && f < c.hi => c.value,
            _ => 0.0,
        }
    }

    /// Cell edges, including both ends of the base interval.
    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.cells.iter().flat_map(|c| [c.lo, c.hi]).collect();
        e.extend([self.base.0, self.base.1]);
        dedup_points(&mut e);
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCell {
    pub lo: f64,
    pub hi: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl EigenCell {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Per-frequency ascending eigenvalues of the estimator spectral matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurves {
    base: (f64, f64),
    dim: usize,
    cells: Vec<EigenCell>,
}

impl EigenCurves {
    pub fn from_cells(base: (f64, f64), dim: usize, cells: Vec<EigenCell>) -> Result<Self> {
        if cells.iter().any(|c| c.eigenvalues.len() != dim) {
            return Err(invalid(format!("every cell must carry {dim} eigenvalues")));
        }
        Ok(Self { base, dim, cells })
    }

    pub fn base(&self) -> (f64, f64) {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[EigenCell] {
        &self.cells
    }

    /// `Σ_p ∫ λ_p(f) df`.
    pub fn trace_integral(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.width() * c.eigenvalues.iter().sum::<f64>())
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.eigenvalues.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues_at(&self, f: f64) -> Option<&[f64]> {
        let idx = self.cells.partition_point(|c| c.hi <= f);
        self.cells
            .get(idx)
            .filter(|c| c.lo <= f && f < c.hi)
            .map(|c| c.eigenvalues.as_slice())
    }
}

/// Where the products `S · H_i* H_j` can be nonzero.
fn joint_extent(sx: &SpectralDensity, sn: &SpectralDensity, filters: &[ComplexGainProfile]) -> f64 {
    let s = sx.f_max().max(sn.f_max());
    let h = filters.iter().map(ComplexGainProfile::extent).fold(0.0, f64::max);
    s.min(h)
}

fn all_breakpoints(sx: &SpectralDensity, sn: &SpectralDensity, filters: &[ComplexGainProfile]) -> Vec<f64> {
    let mut pts = sx.breakpoints();
    pts.extend(sn.breakpoints());
    for h in filters {
        pts.extend(h.breakpoints());
    }
    dedup_points(&mut pts);
    pts
}

fn check_fs(fs: f64) -> Result<()> {
    if fs > 0.0 && fs.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("sampling frequency must be positive, got {fs}")))
    }
}

/// `S̃_{X|Y}(f) = Σ_k S_X²|H|²(f - fs k) / Σ_k S_{X+η}|H|²(f - fs k)` on
/// `(-fs/2, fs/2)`, with `0/0 = 0`.
pub fn s_tilde_single(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
) -> Result<ScalarCurve> {
    check_fs(fs)?;
    let filters = std::slice::from_ref(h);
    let extent = joint_extent(sx, sn, filters);
    let breaks = all_breakpoints(sx, sn, filters);
    let base = (-0.5 * fs, 0.5 * fs);
    let cells = lattice_cells(base.0, base.1, fs, &breaks)
        .into_iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let (mut num, mut den) = (0.0, 0.0);
            for k in translate_range(mid, fs, extent) {
                let g = mid - fs * k as f64;
                let x = sx.evaluate(g);
                let hh = h.power_gain(g);
                num += x * x * hh;
                den += (x + sn.evaluate(g)) * hh;
            }
            let value = if den > 0.0 { num / den } else { 0.0 };
            CurveCell { lo, hi, value }
        })
        .collect();
    Ok(ScalarCurve { base, cells })
}

/// `σ_X² − ∫ S̃_{X|Y}`.
pub fn mmse_single(sx: &SpectralDensity, sn: &SpectralDensity, h: &ComplexGainProfile, fs: f64) -> Result<f64> {
    let curve = s_tilde_single(sx, sn, h, fs)?;
    let mmse = sx.total_power() - curve.integral();
    debug_assert!({
        let alt = mmse_single_unfolded(sx, sn, h, fs)?;
        (alt - mmse).abs() <= 1e-10 * (1.0 + sx.total_power())
    });
    Ok(mmse)
}

/// The same MMSE evaluated over the whole line,
/// `∫ S_X (1 − S_X|H|² / Σ_k S_{X+η}|H|²(f − fs k)) df`.
pub fn mmse_single_unfolded(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
) -> Result<f64> {
    check_fs(fs)?;
    let filters = std::slice::from_ref(h);
    let extent = joint_extent(sx, sn, filters);
    let breaks = all_breakpoints(sx, sn, filters);
    let fmax = sx.f_max();
    let mut total = 0.0;
    for (lo, hi) in lattice_cells(-fmax, fmax, fs, &breaks) {
        let mid = 0.5 * (lo + hi);
        let x = sx.evaluate(mid);
        if x == 0.0 {
            continue;
        }
        let den: f64 = translate_range(mid, fs, extent)
            .map(|k| {
                let g = mid - fs * k as f64;
                (sx.evaluate(g) + sn.evaluate(g)) * h.power_gain(g)
            })
            .sum();
        let captured = if den > 0.0 { x * h.power_gain(mid) / den } else { 0.0 };
        total += (hi - lo) * x * (1.0 - captured);
    }
    Ok(total)
}

/// `S̃*(f) = sup_k ratio(f − fs k)` on `(-fs/2, fs/2)`: the estimator
/// spectrum under the best single pre-sampling filter.
pub fn sup_ratio_curve(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64) -> Result<ScalarCurve> {
    check_fs(fs)?;
    let ratio = snr_ratio(sx, sn)?;
    let base = (-0.5 * fs, 0.5 * fs);
    let cells = lattice_cells(base.0, base.1, fs, &ratio.breakpoints())
        .into_iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let value = translate_range(mid, fs, ratio.f_max())
                .map(|k| ratio.evaluate(mid - fs * k as f64))
                .fold(0.0, f64::max);
            CurveCell { lo, hi, value }
        })
        .collect();
    Ok(ScalarCurve { base, cells })
}

/// `(S̃_Y(f), K(f))` of a filter bank at `f`, with translates by the branch
/// rate `fs / P`.
pub fn build_branch_matrices(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    spec: &SamplerSpec,
    f: f64,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let p = spec.branch_count();
    let step = spec.branch_rate();
    let extent = joint_extent(sx, sn, spec.branches());
    let zero = Complex64::new(0.0, 0.0);
    let mut sy = vec![zero; p * p];
    let mut kk = vec![zero; p * p];
    let mut gains = vec![zero; p];
    for k in translate_range(f, step, extent) {
        let g = f - step * k as f64;
        let x = sx.evaluate(g);
        let z = x + sn.evaluate(g);
        if z == 0.0 {
            continue;
        }
        for (slot, h) in gains.iter_mut().zip(spec.branches()) {
            *slot = h.gain(g);
        }
        for i in 0..p {
            if gains[i] == zero {
                continue;
            }
            for j in 0..p {
                let prod = gains[i].conj() * gains[j];
                sy[i * p + j] += z * prod;
                kk[i * p + j] += x * x * prod;
            }
        }
    }
    Ok((
        HermitianMatrix::from_row_major(p, sy)?,
        HermitianMatrix::from_row_major(p, kk)?,
    ))
}

/// Ascending eigenvalues of `S̃_Y^{-1/2} K S̃_Y^{-1/2}` at one frequency.
pub fn branch_eigenvalues(sx: &SpectralDensity, sn: &SpectralDensity, spec: &SamplerSpec, f: f64) -> Result<Vec<f64>> {
    let (sy, kk) = build_branch_matrices(sx, sn, spec, f)?;
    let w = inv_sqrt_psd(&sy, DEFAULT_RANK_TOL)?;
    Ok(hermitian_eig(&w.sandwich(&kk))?.eigenvalues)
}

/// Eigenvalue curves of a filter bank over `(-fs/(2P), fs/(2P))`.
///
/// Cells come from the translate lattice of all breakpoints, so each cell
/// carries exact constant eigenvalues; cells are subdivided evenly until
/// there are at least `n_grid` of them.
pub fn eigen_curves_multi(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    spec: &SamplerSpec,
    n_grid: usize,
) -> Result<EigenCurves> {
    if n_grid < 16 {
        return Err(invalid(format!("grid resolution must be at least 16, got {n_grid}")));
    }
    let step = spec.branch_rate();
    let base = (-0.5 * step, 0.5 * step);
    let breaks = all_breakpoints(sx, sn, spec.branches());
    let coarse = lattice_cells(base.0, base.1, step, &breaks);
    let split = n_grid.div_ceil(coarse.len().max(1));
    let fine: Vec<(f64, f64)> = coarse
        .iter()
        .flat_map(|&(lo, hi)| {
            let w = (hi - lo) / split as f64;
            (0..split).map(move |i| {
                let a = lo + w * i as f64;
                let b = if i + 1 == split { hi } else { a + w };
                (a, b)
            })
        })
        .collect();
    let cells = fine
        .par_iter()
        .map(|&(lo, hi)| {
            let eigenvalues = branch_eigenvalues(sx, sn, spec, 0.5 * (lo + hi))?;
            Ok(EigenCell { lo, hi, eigenvalues })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenCurves {
        base,
        dim: spec.branch_count(),
        cells,
    })
}

/// `σ_X² − Σ_p ∫ λ_p`.
pub fn mmse_multi(sx: &SpectralDensity, sn: &SpectralDensity, spec: &SamplerSpec, n_grid: usize) -> Result<f64> {
    let curves = eigen_curves_multi(sx, sn, spec, n_grid)?;
    Ok(sx.total_power() - curves.trace_integral())
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    shift: f64,
    value: f64,
    at: f64,
}

/// Maximal aliasing-free sets `F*_1, …, F*_P` of `ratio` for branch rate
/// `fs / P`.
///
/// Each cell of `[0, fs/(2P))` is assigned to its `P` strongest translates
/// (step `fs / P`), the `p`-th strongest going to `F*_p`; ties prefer the
/// smaller `|f|`, then the negative frequency. Each set is made symmetric by
/// mirroring, so the indicator filters have real impulse responses.
pub fn maximal_af_sets(ratio: &SpectralDensity, fs: f64, p: usize) -> Result<Vec<FrequencySet>> {
    check_fs(fs)?;
    if p < 1 {
        return Err(invalid("branch count must be at least 1"));
    }
    let step = fs / p as f64;
    let mut breaks = ratio.breakpoints();
    breaks.push(0.0);
    let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); p];
    for (lo, hi) in lattice_cells(0.0, 0.5 * step, step, &breaks) {
        let mid = 0.5 * (lo + hi);
        let mut cands: Vec<Candidate> = translate_range(mid, step, ratio.f_max())
            .map(|k| {
                let shift = -step * k as f64;
                Candidate {
                    shift,
                    value: ratio.evaluate(mid + shift),
                    at: mid + shift,
                }
            })
            .filter(|c| c.value > 0.0)
            .collect();
        cands.sort_by(|a, b| {
            b.value
                .partial_cmp(&a.value)
                .unwrap_or(Ordering::Equal)
                .then(a.at.abs().partial_cmp(&b.at.abs()).unwrap_or(Ordering::Equal))
                .then(a.at.partial_cmp(&b.at).unwrap_or(Ordering::Equal))
        });
        for (slot, c) in pieces.iter_mut().zip(cands) {
            let (a, b) = (lo + c.shift, hi + c.shift);
            slot.push((a, b));
            slot.push((-b, -a));
        }
    }
    Ok(pieces.into_iter().map(FrequencySet::from_pairs).collect())
}

/// The indicator filter bank of the maximal aliasing-free sets.
pub fn optimal_sampler(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64, p: usize) -> Result<SamplerSpec> {
    let ratio = snr_ratio(sx, sn)?;
    let sets = maximal_af_sets(&ratio, fs, p)?;
    SamplerSpec::new(fs, sets.iter().map(ComplexGainProfile::indicator).collect())
}

/// `σ_X² − Σ_p ∫_{F*_p} S_X²/S_{X+η}`, together with the sets.
pub fn mmse_optimal(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64, p: usize) -> Result<(f64, Vec<FrequencySet>)> {
    let ratio = snr_ratio(sx, sn)?;
    let sets = maximal_af_sets(&ratio, fs, p)?;
    let captured: f64 = sets.iter().map(|s| ratio.integrate(s)).sum();
    Ok((sx.total_power() - captured, sets))
}

/// `σ_X² − sup_{μ(F) ≤ fs} ∫_F S_X²/S_{X+η}`: no sampler of average rate
/// `fs` does better.
pub fn landau_mmse_bound(sx: &SpectralDensity, sn: &SpectralDensity, fs: f64) -> Result<f64> {
    check_fs(fs)?;
    let ratio = snr_ratio(sx, sn)?;
    let (_, captured) = ratio.superlevel_set_of_measure(fs);
    Ok(sx.total_power() - captured)
}

/// Spectral density of the estimator of the `Δ` polyphase component
/// `X((n + Δ)/fs)` from the samples, in normalized frequency
/// `φ ∈ (-1/2, 1/2)`.
///
/// The double sum over `k, l` collapses to `|Σ_k S_XZ(fs(φ−k)) e^{2πikΔ}|²`.
/// Values are discrete-time densities, hence the factor `fs`.
pub fn polyphase_conditional_psd(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    delta: f64,
) -> Result<ScalarCurve> {
    check_fs(fs)?;
    let filters = std::slice::from_ref(h);
    let extent = joint_extent(sx, sn, filters);
    let breaks = all_breakpoints(sx, sn, filters);
    let cells = lattice_cells(-0.5 * fs, 0.5 * fs, fs, &breaks)
        .into_iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let mut cross = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for k in translate_range(mid, fs, extent) {
                let g = mid - fs * k as f64;
                let x = sx.evaluate(g);
                let gain = h.gain(g);
                let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * delta);
                cross += x * gain.conj() * phase;
                den += (x + sn.evaluate(g)) * gain.norm_sqr();
            }
            let value = if den > 0.0 { fs * cross.norm_sqr() / den } else { 0.0 };
            CurveCell {
                lo: lo / fs,
                hi: hi / fs,
                value,
            }
        })
        .collect();
    Ok(ScalarCurve {
        base: (-0.5, 0.5),
        cells,
    })
}
