//! Independent checks for the spectral pipeline.
//!
//! Three routes: the discrete-time decimation construction (a fine-rate
//! sequence decimated by `M`, whose estimator spectrum converges to the
//! sampled one), time-domain linear estimation from exact covariances, and
//! scalar closed forms. The time-domain code uses dense `nalgebra` solves
//! and its own waterfilling loop, sharing nothing with the Jacobi path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::sampling::{CurveCell, ScalarCurve};
use crate::spectra::{dedup_points, lattice_cells, translate_range, ComplexGainProfile, SpectralDensity};
use crate::waterfill::{waterfill, WaterfillSolution};

/// 1-periodic piecewise-constant function on `φ ∈ [-1/2, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodic<T> {
    cells: Vec<(f64, f64, T)>,
}

pub type DiscreteSpectrum = Periodic<f64>;
pub type DiscreteCrossSpectrum = Periodic<Complex64>;

impl<T: Copy + Default> Periodic<T> {
    /// Cells must be sorted, contiguous and cover `[-1/2, 1/2)`.
    pub fn from_cells(cells: Vec<(f64, f64, T)>) -> Result<Self> {
        let tol = 1e-12;
        let ok = !cells.is_empty()
            && (cells[0].0 + 0.5).abs() <= tol
            && (cells[cells.len() - 1].1 - 0.5).abs() <= tol
            && cells.iter().all(|c| c.0 < c.1)
            && cells.windows(2).all(|w| (w[0].1 - w[1].0).abs() <= tol);
        if !ok {
            return Err(invalid("periodic cells must tile [-1/2, 1/2)"));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[(f64, f64, T)] {
        &self.cells
    }

    pub fn evaluate(&self, phi: f64) -> T {
        let x = phi - (phi + 0.5).floor();
        let idx = self.cells.partition_point(|c| c.1 <= x);
        self.cells.get(idx).map_or_else(T::default, |c| c.2)
    }

    pub fn edges(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.0).collect()
    }
}

impl DiscreteSpectrum {
    pub fn flat(value: f64) -> Self {
        Self {
            cells: vec![(-0.5, 0.5, value)],
        }
    }

    pub fn power(&self) -> f64 {
        self.cells.iter().map(|c| (c.1 - c.0) * c.2).sum()
    }
}

/// Cross spectrum `S_X · conj(H)` of source and filtered observation,
/// positive side; the negative side is its conjugate mirror.
fn cross_psd(sx: &SpectralDensity, h: &ComplexGainProfile) -> Result<Vec<(f64, f64, Complex64)>> {
    if !(h.is_all_pass() || h.is_conjugate_symmetric()) {
        return Err(invalid(
            "time-domain oracles need a real filter (conjugate-symmetric response)",
        ));
    }
    let mut pts: Vec<f64> = sx.breakpoints().into_iter().filter(|&p| p >= 0.0).collect();
    pts.extend(h.breakpoints().into_iter().filter(|&p| p >= 0.0));
    pts.push(0.0);
    dedup_points(&mut pts);
    Ok(pts
        .windows(2)
        .filter_map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let c = sx.evaluate(mid) * h.gain(mid).conj();
            (c.norm() > 0.0).then_some((w[0], w[1], c))
        })
        .collect())
}

/// `S_Z = (S_X + S_η)|H|²` as a density.
fn observation_psd(sx: &SpectralDensity, sn: &SpectralDensity, h: &ComplexGainProfile) -> Result<SpectralDensity> {
    let sum = sx.add(sn)?;
    if h.is_all_pass() {
        return Ok(sum);
    }
    let mut pts: Vec<f64> = sum.breakpoints().into_iter().filter(|&p| p >= 0.0).collect();
    pts.extend(h.breakpoints().into_iter().filter(|&p| p >= 0.0));
    pts.push(0.0);
    dedup_points(&mut pts);
    SpectralDensity::from_positive(pts.windows(2).map(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        (w[0], w[1], sum.evaluate(mid) * h.power_gain(mid))
    }))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `∫_a^b e^{2πifτ} df` split into cosine and sine parts.
fn band_kernel(a: f64, b: f64, tau: f64) -> (f64, f64) {
    let w = (b - a) * sinc((b - a) * tau);
    let phase = std::f64::consts::PI * (a + b) * tau;
    (w * phase.cos(), w * phase.sin())
}

/// Autocovariance `c(τ) = ∫ S(f) e^{2πifτ} df` in closed form.
pub fn covariance_from_psd(s: &SpectralDensity, tau: f64) -> f64 {
    s.segments()
        .iter()
        .map(|seg| 2.0 * seg.value * band_kernel(seg.interval.lo(), seg.interval.hi(), tau).0)
        .sum()
}

fn cross_covariance(cross: &[(f64, f64, Complex64)], tau: f64) -> f64 {
    cross
        .iter()
        .map(|&(a, b, c)| {
            let (cs, sn) = band_kernel(a, b, tau);
            2.0 * (c.re * cs - c.im * sn)
        })
        .sum()
}

/// Observation covariance `C_Y` and target cross-covariances for
/// estimating `X(Δ/fs)` from `Y[-K..=K]`.
#[derive(Debug, Clone)]
pub struct CovarianceWindow {
    pub k: usize,
    pub delta: f64,
    pub c_y: DMatrix<f64>,
    pub c_xy: DVector<f64>,
}

struct WindowSource {
    sigma2: f64,
    fs: f64,
    cross: Vec<(f64, f64, Complex64)>,
    sz: SpectralDensity,
}

impl WindowSource {
    fn new(sx: &SpectralDensity, sn: &SpectralDensity, h: &ComplexGainProfile, fs: f64) -> Result<Self> {
        if !(fs > 0.0) {
            return Err(invalid(format!("sampling frequency must be positive, got {fs}")));
        }
        Ok(Self {
            sigma2: sx.total_power(),
            fs,
            cross: cross_psd(sx, h)?,
            sz: observation_psd(sx, sn, h)?,
        })
    }

    fn c_y(&self, k: usize) -> DMatrix<f64> {
        let n = 2 * k + 1;
        let lags: Vec<f64> = (0..n)
            .map(|d| covariance_from_psd(&self.sz, d as f64 / self.fs))
            .collect();
        DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)])
    }

    /// `E[X(t) Y[n]]` for `n = -K..=K`.
    fn c_xy(&self, k: usize, t: f64) -> DVector<f64> {
        DVector::from_fn(2 * k + 1, |i, _| {
            let n = i as f64 - k as f64;
            cross_covariance(&self.cross, t - n / self.fs)
        })
    }
}

impl CovarianceWindow {
    pub fn build(
        sx: &SpectralDensity,
        sn: &SpectralDensity,
        h: &ComplexGainProfile,
        fs: f64,
        delta: f64,
        k: usize,
    ) -> Result<Self> {
        let src = WindowSource::new(sx, sn, h, fs)?;
        Ok(Self {
            k,
            delta,
            c_y: src.c_y(k),
            c_xy: src.c_xy(k, delta / fs),
        })
    }
}

/// Cholesky factor of `C_Y`, with a ridge of `1e-12 · trace` (growing
/// tenfold while needed) when the plain factorization fails.
fn factor(c_y: &DMatrix<f64>) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, bool)> {
    if let Some(ch) = c_y.clone().cholesky() {
        return Ok((ch, false));
    }
    let trace = c_y.trace();
    let mut ridge = 1e-12 * trace.max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        let mut m = c_y.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return Ok((ch, true));
        }
        ridge *= 10.0;
    }
    Err(Error::InvalidCovariance(
        "observation covariance is not positive definite".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMmse {
    pub mmse: f64,
    /// A ridge was added to `C_Y` to factor it.
    pub regularized: bool,
}

/// Linear MMSE of `X(Δ/fs)` from the `2K + 1` samples around the origin.
pub fn finite_window_mmse(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    delta: f64,
    k: usize,
) -> Result<WindowMmse> {
    finite_window_mmse_phases(sx, sn, h, fs, &[delta], k)
}

/// Finite-window MMSE averaged over `n_delta` evenly spaced offsets in
/// `[0, 1)`.
pub fn finite_window_mmse_averaged(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    n_delta: usize,
    k: usize,
) -> Result<WindowMmse> {
    if n_delta == 0 {
        return Err(invalid("need at least one offset"));
    }
    let deltas: Vec<f64> = (0..n_delta).map(|j| j as f64 / n_delta as f64).collect();
    finite_window_mmse_phases(sx, sn, h, fs, &deltas, k)
}

fn finite_window_mmse_phases(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    deltas: &[f64],
    k: usize,
) -> Result<WindowMmse> {
    let src = WindowSource::new(sx, sn, h, fs)?;
    let (chol, regularized) = factor(&src.c_y(k))?;
    let mut total = 0.0;
    for &delta in deltas {
        let c = src.c_xy(k, delta / fs);
        let w = chol
            .l()
            .solve_lower_triangular(&c)
            .ok_or_else(|| Error::InvalidCovariance("singular factor".into()))?;
        total += src.sigma2 - w.norm_squared();
    }
    Ok(WindowMmse {
        mmse: total / deltas.len() as f64,
        regularized,
    })
}

/// Reverse waterfilling by bisection on the water level, for unit-width
/// components: returns `θ` with `½ Σ log₂⁺(λ/θ) = bits`.
fn bisect_level(eigs: &[f64], bits: f64) -> f64 {
    let top = eigs.iter().copied().fold(0.0, f64::max);
    if bits <= 0.0 || top <= 0.0 {
        return top;
    }
    let rate = |theta: f64| -> f64 {
        eigs.iter()
            .filter(|&&l| l > theta)
            .map(|&l| 0.5 * (l / theta).log2())
            .sum()
    };
    let (mut lo, mut hi) = (top * 1e-300_f64.max(f64::MIN_POSITIVE), top);
    // Work in log space; the rate is monotone in log θ.
    for _ in 0..2000 {
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
        if rate(mid) > bits {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOracle {
    pub distortion: f64,
    pub mmse: f64,
    pub theta: f64,
    pub regularized: bool,
}

/// Number of offsets per sampling period stacked into the block target.
pub const BLOCK_PHASES: usize = 8;

/// Distortion-rate of the block `X((n + m/8)/fs)`, `n ∈ -K..=K`,
/// `m ∈ 0..8`, from `Y[-K..=K]`, at `R (2K+1) / fs` bits for the block.
///
/// The estimator covariance `C_XY C_Y⁻¹ C_YX` shares its nonzero spectrum
/// with `L⁻¹ C_YX C_XY L⁻ᵀ` (`C_Y = L Lᵀ`), which is only `(2K+1)` square.
pub fn block_idrf_oracle(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    rate: f64,
    k: usize,
) -> Result<BlockOracle> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be nonnegative, got {rate}")));
    }
    let src = WindowSource::new(sx, sn, h, fs)?;
    let n = 2 * k + 1;
    let nx = n * BLOCK_PHASES;
    let (chol, regularized) = factor(&src.c_y(k))?;
    let mut c_xy = DMatrix::<f64>::zeros(nx, n);
    for i in 0..n {
        for m in 0..BLOCK_PHASES {
            let t = (i as f64 - k as f64 + m as f64 / BLOCK_PHASES as f64) / fs;
            let row = src.c_xy(k, t);
            c_xy.row_mut(i * BLOCK_PHASES + m).copy_from(&row.transpose());
        }
    }
    // A = L⁻¹ C_YX, then A Aᵀ.
    let a = chol
        .l()
        .solve_lower_triangular(&c_xy.transpose())
        .ok_or_else(|| Error::InvalidCovariance("singular factor".into()))?;
    let gram = &a * a.transpose();
    let eigs: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let captured: f64 = eigs.iter().sum();
    let bits = rate * n as f64 / fs;
    let theta = bisect_level(&eigs, bits);
    let kept: f64 = eigs.iter().map(|&l| (l - theta).max(0.0)).sum();
    Ok(BlockOracle {
        distortion: src.sigma2 - kept / nx as f64,
        mmse: src.sigma2 - captured / nx as f64,
        theta,
        regularized,
    })
}

/// Fine-rate spectra `S_{X^M Z^M}` and `S_{Z^M}` at rate `M·fs`:
/// `F Σ_k S(F(φ − k))` with `F = M·fs`.
pub fn sampled_discretization(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    m: usize,
) -> Result<(DiscreteCrossSpectrum, DiscreteSpectrum)> {
    if m < 1 {
        return Err(invalid("decimation factor must be at least 1"));
    }
    if !(fs > 0.0) {
        return Err(invalid(format!("sampling frequency must be positive, got {fs}")));
    }
    let fine = fs * m as f64;
    let mut breaks = sx.breakpoints();
    breaks.extend(sn.breakpoints());
    breaks.extend(h.breakpoints());
    dedup_points(&mut breaks);
    let extent = sx.f_max().max(sn.f_max());
    let mut cross = Vec::new();
    let mut obs = Vec::new();
    for (lo, hi) in lattice_cells(-0.5 * fine, 0.5 * fine, fine, &breaks) {
        let mid = 0.5 * (lo + hi);
        let mut c = Complex64::new(0.0, 0.0);
        let mut z = 0.0;
        for k in translate_range(mid, fine, extent) {
            let g = mid - fine * k as f64;
            let gain = h.gain(g);
            let x = sx.evaluate(g);
            c += x * gain.conj();
            z += (x + sn.evaluate(g)) * gain.norm_sqr();
        }
        cross.push((lo / fine, hi / fine, c * fine));
        obs.push((lo / fine, hi / fine, z * fine));
    }
    Ok((Periodic::from_cells(cross)?, Periodic::from_cells(obs)?))
}

/// `J_M(φ) = (1/M) Σ_m |S_XZ((φ−m)/M)|² / Σ_m S_Z((φ−m)/M)`, `0/0 = 0`.
pub fn discrete_j_m(sxz: &DiscreteCrossSpectrum, sz: &DiscreteSpectrum, m: usize, phi: f64) -> Result<f64> {
    if m < 1 {
        return Err(invalid("decimation factor must be at least 1"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..m {
        let psi = (phi - j as f64) / m as f64;
        num += sxz.evaluate(psi).norm_sqr();
        den += sz.evaluate(psi);
    }
    Ok(if den > 0.0 { num / (m as f64 * den) } else { 0.0 })
}

/// `J_M` as an exact piecewise-constant curve over `φ ∈ [-1/2, 1/2)`.
pub fn j_m_curve(sxz: &DiscreteCrossSpectrum, sz: &DiscreteSpectrum, m: usize) -> Result<ScalarCurve> {
    if m < 1 {
        return Err(invalid("decimation factor must be at least 1"));
    }
    // (φ − j)/M crosses an edge e exactly when φ = M e + j.
    let mut breaks: Vec<f64> = sxz
        .edges()
        .into_iter()
        .chain(sz.edges())
        .map(|e| e * m as f64)
        .collect();
    dedup_points(&mut breaks);
    let cells = lattice_cells(-0.5, 0.5, 1.0, &breaks)
        .into_iter()
        .map(|(lo, hi)| {
            let value = discrete_j_m(sxz, sz, m, 0.5 * (lo + hi))?;
            Ok(CurveCell { lo, hi, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarCurve::from_cells((-0.5, 0.5), cells))
}

/// `∫ |J_M(f/fs)/fs − S̃(f)| df` over `(-fs/2, fs/2)`, exact on the union
/// of both curves' breakpoints.
pub fn j_m_l1_gap(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    m: usize,
    s_tilde: &ScalarCurve,
) -> Result<f64> {
    let (sxz, sz) = sampled_discretization(sx, sn, h, fs, m)?;
    let j = j_m_curve(&sxz, &sz, m)?;
    let mut pts: Vec<f64> = j.edges().into_iter().map(|p| p * fs).collect();
    pts.extend(s_tilde.edges());
    dedup_points(&mut pts);
    Ok(pts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * (j.value_at(mid / fs) / fs - s_tilde.value_at(mid)).abs()
        })
        .sum())
}

/// Distortion-rate of the decimated fine-rate source at `rate` bits per
/// time unit, i.e. `rate / fs` bits per decimated sample.
pub fn decimation_drf(
    sx: &SpectralDensity,
    sn: &SpectralDensity,
    h: &ComplexGainProfile,
    fs: f64,
    m: usize,
    rate: f64,
) -> Result<WaterfillSolution> {
    let (sxz, sz) = sampled_discretization(sx, sn, h, fs, m)?;
    waterfill(sx.total_power(), &j_m_curve(&sxz, &sz, m)?, rate / fs)
}

/// `D = C_U − (1 − 2^{−2R}) C_UV² / C_V` for a scalar pair.
pub fn iid_distortion(c_u: f64, c_v: f64, c_uv: f64, rate: f64) -> Result<f64> {
    Ok(c_u - (1.0 - (-2.0 * rate).exp2()) * captured(c_v, c_uv)?)
}

/// Inverse of [`iid_distortion`]: zero at `D ≥ C_U`, infinite at or below
/// the MMSE.
pub fn iid_rate(c_u: f64, c_v: f64, c_uv: f64, distortion: f64) -> Result<f64> {
    let q = captured(c_v, c_uv)?;
    if distortion >= c_u {
        return Ok(0.0);
    }
    let excess = distortion - (c_u - q);
    Ok(if excess <= 0.0 {
        f64::INFINITY
    } else {
        0.5 * (q / excess).log2()
    })
}

fn captured(c_v: f64, c_uv: f64) -> Result<f64> {
    if c_v < 0.0 {
        return Err(Error::InvalidCovariance(format!("negative variance {c_v}")));
    }
    if c_v == 0.0 {
        return if c_uv == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidCovariance(
                "zero observation variance with nonzero correlation".into(),
            ))
        };
    }
    Ok(c_uv * c_uv / c_v)
}

/// Average MMSE of `(U_1, U_2)` from `V = h_1(U_1 + ξ_1) + h_2(U_2 + ξ_2)`.
pub fn joint_mmse_two(c_u1: f64, c_u2: f64, c_xi1: f64, c_xi2: f64, h1: f64, h2: f64) -> Result<f64> {
    let num = h1 * h1 * c_u1 * c_u1 + h2 * h2 * c_u2 * c_u2;
    let den = h1 * h1 * (c_u1 + c_xi1) + h2 * h2 * (c_u2 + c_xi2);
    if den < 0.0 {
        return Err(Error::InvalidCovariance("negative observation variance".into()));
    }
    let gain = if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        return Err(Error::InvalidCovariance(
            "zero observation variance with nonzero correlation".into(),
        ));
    };
    Ok(0.5 * (c_u1 + c_u2 - gain))
}

/// The better of the two single-component selections `(1, 0)` and
/// `(0, 1)`: the component with the larger `C_U² / (C_U + C_ξ)`.
pub fn select_component(c_u1: f64, c_u2: f64, c_xi1: f64, c_xi2: f64) -> (f64, f64) {
    let score = |c: f64, xi: f64| if c + xi > 0.0 { c * c / (c + xi) } else { 0.0 };
    if score(c_u1, c_xi1) >= score(c_u2, c_xi2) {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    }
}

/// Eigenvalues of `C_UV C_V⁻¹ C_VU`, ascending.
pub fn estimator_covariance_eigenvalues(c_v: &DMatrix<f64>, c_uv: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (chol, _) = factor(c_v)?;
    let a = chol
        .l()
        .solve_lower_triangular(&c_uv.transpose())
        .ok_or_else(|| Error::InvalidCovariance("singular factor".into()))?;
    let mut eigs: Vec<f64> = (a.transpose() * &a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::sampling::{mmse_single, s_tilde_single};
    use crate::waterfill::drf_sampled_single;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn covariance_examples() {
        let s = SpectralDensity::lowpass(0.5, 1.0).unwrap();
        assert!(close(covariance_from_psd(&s, 0.0), 1.0, 1e-15));
        assert!(close(covariance_from_psd(&s, 1.0), 0.0, 1e-15));
        assert!(close(
            covariance_from_psd(&presets::band_pass(1.0).unwrap(), 0.0),
            1.0,
            1e-15
        ));
        let s = presets::bimodal().unwrap();
        assert_eq!(covariance_from_psd(&s, 0.0), s.total_power());
    }

    #[test]
    fn covariance_matches_quadrature() {
        let s = presets::bimodal().unwrap();
        for tau in [0.3, 1.7, 4.1] {
            let n = 200_000;
            let fmax = s.f_max();
            let df = 2.0 * fmax / n as f64;
            let quad: f64 = (0..n)
                .map(|i| {
                    let f = -fmax + (i as f64 + 0.5) * df;
                    s.evaluate(f) * (2.0 * std::f64::consts::PI * f * tau).cos() * df
                })
                .sum();
            assert!(close(covariance_from_psd(&s, tau), quad, 1e-6));
        }
    }

    #[test]
    fn j_m_examples() {
        let one = DiscreteSpectrum::flat(1.0);
        let one_c = Periodic::from_cells(vec![(-0.5, 0.5, Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(discrete_j_m(&one_c, &one, 1, 0.2).unwrap(), 1.0);
        assert_eq!(discrete_j_m(&one_c, &one, 2, 0.2).unwrap(), 0.5);
        let zero_c = Periodic::from_cells(vec![(-0.5, 0.5, Complex64::new(0.0, 0.0))]).unwrap();
        assert_eq!(discrete_j_m(&zero_c, &one, 3, 0.1).unwrap(), 0.0);
        assert!(discrete_j_m(&one_c, &one, 0, 0.1).is_err());
        assert!(Periodic::<f64>::from_cells(vec![(-0.5, 0.2, 1.0)]).is_err());
    }

    #[test]
    fn decimation_matches_when_fine_rate_is_alias_free() {
        let bp = presets::band_pass(1.0).unwrap();
        let none = SpectralDensity::zero();
        let h = ComplexGainProfile::all_pass();
        let st = s_tilde_single(&bp, &none, &h, 1.5).unwrap();
        for m in [4, 8] {
            assert!(j_m_l1_gap(&bp, &none, &h, 1.5, m, &st).unwrap() < 1e-12);
        }
        // Super-Nyquist at M = 1 as well.
        let st = s_tilde_single(&bp, &none, &h, 4.5).unwrap();
        assert!(j_m_l1_gap(&bp, &none, &h, 4.5, 1, &st).unwrap() < 1e-12);
    }

    #[test]
    fn decimation_drf_converges() {
        let sx = presets::triangular(0.5, 6).unwrap();
        let sn = SpectralDensity::lowpass(0.5, 0.1).unwrap();
        let h = ComplexGainProfile::all_pass();
        let exact = drf_sampled_single(&sx, &sn, &h, 0.6, 1.0).unwrap().distortion;
        let d = decimation_drf(&sx, &sn, &h, 0.6, 4, 1.0).unwrap().distortion;
        assert!(close(d, exact, 1e-12));
    }

    #[test]
    fn window_examples() {
        let sx = presets::rectangular(1.0, 0.5).unwrap();
        let none = SpectralDensity::zero();
        let h = ComplexGainProfile::all_pass();
        for k in [0, 3] {
            let r = finite_window_mmse(&sx, &none, &h, 0.7, 0.0, k).unwrap();
            assert!(close(r.mmse, 0.0, 1e-12));
        }
        let mut prev = f64::INFINITY;
        for k in [2, 8, 32] {
            let r = finite_window_mmse(&sx, &none, &h, 0.5, 0.3, k).unwrap();
            assert!(r.mmse <= prev + 1e-12);
            prev = r.mmse;
        }
        let avg = finite_window_mmse_averaged(&sx, &none, &h, 0.5, 16, 64).unwrap();
        assert!(close(avg.mmse, 0.5, 0.01));
    }

    #[test]
    fn window_handles_filters() {
        let sx = presets::triangular(0.5, 6).unwrap();
        let sn = SpectralDensity::lowpass(0.5, 0.2).unwrap();
        let h = ComplexGainProfile::conjugate_symmetric([
            (0.0, 0.25, Complex64::from_polar(1.0, 0.4)),
            (0.25, 0.5, Complex64::new(0.5, 0.0)),
        ])
        .unwrap();
        let exact = mmse_single(&sx, &sn, &h, 0.8).unwrap();
        let r = finite_window_mmse_averaged(&sx, &sn, &h, 0.8, 16, 128).unwrap();
        assert!(close(r.mmse, exact, 0.01), "{} vs {exact}", r.mmse);
        let complex = ComplexGainProfile::from_segments([(0.0, 0.5, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(finite_window_mmse(&sx, &sn, &complex, 0.8, 0.0, 2).is_err());
    }

    #[test]
    fn block_examples() {
        let sx = presets::rectangular(1.0, 0.5).unwrap();
        let none = SpectralDensity::zero();
        let h = ComplexGainProfile::all_pass();
        let b = block_idrf_oracle(&sx, &none, &h, 0.5, 0.0, 8).unwrap();
        assert!(close(b.distortion, 1.0, 1e-12));
        let b = block_idrf_oracle(&sx, &none, &h, 0.5, 40.0, 8).unwrap();
        assert!(close(b.distortion, b.mmse, 1e-6));
        // Block MMSE is the average over every stacked target position.
        let mut total = 0.0;
        for n in -8..=8 {
            for m in 0..BLOCK_PHASES {
                let delta = n as f64 + m as f64 / BLOCK_PHASES as f64;
                total += finite_window_mmse(&sx, &none, &h, 0.5, delta, 8).unwrap().mmse;
            }
        }
        assert!(close(b.mmse, total / (17 * BLOCK_PHASES) as f64, 1e-9));
    }

    #[test]
    fn closed_form_examples() {
        assert!(close(iid_distortion(1.0, 1.0, 1.0, 0.5).unwrap(), 0.5, 1e-15));
        assert_eq!(iid_distortion(1.0, 2.0, 0.7, 0.0).unwrap(), 1.0);
        assert!(close(iid_rate(1.0, 1.0, 1.0, 0.5).unwrap(), 0.5, 1e-15));
        assert!(iid_distortion(1.0, 0.0, 0.3, 1.0).is_err());
        assert!(close(
            joint_mmse_two(1.0, 0.25, 0.0, 0.0, 1.0, 0.0).unwrap(),
            0.125,
            1e-15
        ));
        assert!(close(
            joint_mmse_two(1.0, 0.25, 0.0, 0.0, 0.0, 1.0).unwrap(),
            0.5,
            1e-15
        ));
        assert_eq!(select_component(1.0, 0.25, 0.0, 0.0), (1.0, 0.0));
        assert_eq!(select_component(0.3, 1.0, 0.5, 0.0), (0.0, 1.0));
        assert_eq!(select_component(0.3, 1.0, 0.0, 5.0), (1.0, 0.0));
    }

    proptest! {
        #[test]
        fn iid_rate_inverts_distortion(c_u in 0.1f64..3.0, rho in -0.99f64..0.99, c_v in 0.1f64..3.0, rate in 0.01f64..6.0) {
            let c_uv = rho * (c_u * c_v).sqrt();
            prop_assume!(c_uv.abs() > 1e-3);
            let d = iid_distortion(c_u, c_v, c_uv, rate).unwrap();
            prop_assert!((iid_rate(c_u, c_v, c_uv, d).unwrap() - rate).abs() <= 1e-6 * (1.0 + rate) * 4f64.powf(rate));
        }

        #[test]
        fn selection_rule_picks_the_better_component(c1 in 0.01f64..2.0, c2 in 0.01f64..2.0, x1 in 0.0f64..2.0, x2 in 0.0f64..2.0) {
            let (h1, h2) = select_component(c1, c2, x1, x2);
            let best = joint_mmse_two(c1, c2, x1, x2, h1, h2).unwrap();
            let other = joint_mmse_two(c1, c2, x1, x2, 1.0 - h1, 1.0 - h2).unwrap();
            prop_assert!(best <= other + 1e-14);
        }
    }
}
