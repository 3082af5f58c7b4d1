//! Piecewise-constant spectral densities and finite unions of frequency
//! intervals.
//!
//! Every operation here is exact: integrals, aliased sums and superlevel sets
//! are computed segment by segment, with no quadrature. Power spectral
//! densities of real processes are even, so [`SpectralDensity`] stores only
//! the `f >= 0` half and mirrors it.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Relative slack used when merging nearly touching endpoints produced by
/// floating-point translation.
const EDGE_EPS: f64 = 1e-12;

pub(crate) fn edge_eps(a: f64, b: f64) -> f64 {
    EDGE_EPS * (1.0 + a.abs().max(b.abs()))
}

/// Sorts and removes nearly coincident points.
pub(crate) fn dedup_points(points: &mut Vec<f64>) {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    points.dedup_by(|b, a| (*b - *a).abs() <= edge_eps(*a, *b));
}

/// Splits `[lo, hi)` at every point of `points` falling strictly inside.
pub(crate) fn cells_between(lo: f64, hi: f64, points: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(lo);
    edges.extend(points.iter().copied().filter(|&p| p > lo && p < hi));
    edges.push(hi);
    dedup_points(&mut edges);
    edges
        .windows(2)
        .filter(|w| w[1] - w[0] > edge_eps(w[0], w[1]))
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Cells of `[lo, hi)` on which every `step`-translate of a function with
/// breakpoints `breaks` is constant.
///
/// A translate `g(f - step * k)` jumps at `b + step * k` for each breakpoint
/// `b`, so the base interval is split at all such points.
pub(crate) fn lattice_cells(lo: f64, hi: f64, step: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for &b in breaks {
        let k_lo = ((lo - b) / step).floor() as i64 - 1;
        let k_hi = ((hi - b) / step).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let p = b + step * k as f64;
            if p > lo && p < hi {
                points.push(p);
            }
        }
    }
    cells_between(lo, hi, &points)
}

/// Integer shifts `k` for which `f - step * k` can land in `[-extent, extent]`.
pub(crate) fn translate_range(f: f64, step: f64, extent: f64) -> std::ops::RangeInclusive<i64> {
    let lo = ((f - extent) / step).floor() as i64 - 1;
    let hi = ((f + extent) / step).ceil() as i64 + 1;
    lo..=hi
}

/// Half-open interval `[lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyInterval {
    lo: f64,
    hi: f64,
}

impl FrequencyInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(invalid(format!("empty or malformed interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, f: f64) -> bool {
        self.lo <= f && f < self.hi
    }
}

/// Finite union of disjoint intervals, kept sorted with touching pieces merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrequencySet {
    intervals: Vec<FrequencyInterval>,
}

impl FrequencySet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a normalized set from arbitrary `(lo, hi)` pairs. Degenerate
    /// pairs are dropped; overlapping or touching pairs are merged.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut raw: Vec<(f64, f64)> = pairs
            .into_iter()
            .filter(|&(lo, hi)| hi - lo > edge_eps(lo, hi))
            .collect();
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + edge_eps(lo, last.1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self {
            intervals: merged
                .into_iter()
                .map(|(lo, hi)| FrequencyInterval { lo, hi })
                .collect(),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::from_pairs([(lo, hi)])
    }

    /// `(-hi, -lo) ∪ (lo, hi)` for `0 <= lo < hi`.
    pub fn symmetric_band(lo: f64, hi: f64) -> Self {
        Self::from_pairs([(-hi, -lo), (lo, hi)])
    }

    pub fn intervals(&self) -> &[FrequencyInterval] {
        &self.intervals
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.intervals.iter().map(|i| (i.lo, i.hi))
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(FrequencyInterval::width).sum()
    }

    pub fn contains(&self, f: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(f))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_pairs(self.pairs().chain(other.pairs()))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.intervals, &other.intervals);
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo < hi {
                out.push((lo, hi));
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_pairs(out)
    }

    /// `bound \ self`.
    pub fn complement_within(&self, bound: FrequencyInterval) -> Self {
        let mut out = Vec::new();
        let mut cursor = bound.lo;
        for iv in &self.intervals {
            if iv.hi <= bound.lo || iv.lo >= bound.hi {
                continue;
            }
            if iv.lo > cursor {
                out.push((cursor, iv.lo));
            }
            cursor = cursor.max(iv.hi);
        }
        if cursor < bound.hi {
            out.push((cursor, bound.hi));
        }
        Self::from_pairs(out)
    }

    pub fn translate(&self, delta: f64) -> Self {
        Self::from_pairs(self.pairs().map(|(lo, hi)| (lo + delta, hi + delta)))
    }

    /// Mirror image `{-f : f in self}`.
    pub fn reflect(&self) -> Self {
        Self::from_pairs(self.pairs().map(|(lo, hi)| (-hi, -lo)))
    }

    /// Images of the intervals under `f -> f mod period`, as pieces of
    /// `[0, period)`. Pieces are not merged, so overlaps remain visible.
    pub fn reduce_modulo(&self, period: f64) -> Vec<(f64, f64)> {
        let mut pieces = Vec::new();
        for iv in &self.intervals {
            let k0 = (iv.lo / period).floor();
            let k1 = (iv.hi / period).ceil();
            let mut k = k0;
            while k < k1 {
                let base = k * period;
                let lo = iv.lo.max(base) - base;
                let hi = iv.hi.min(base + period) - base;
                if hi - lo > edge_eps(lo, hi) {
                    pieces.push((lo, hi));
                }
                k += 1.0;
            }
        }
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        pieces
    }

    /// True when no two points of the set differ by a nonzero multiple of
    /// `fs`, up to measure zero.
    pub fn is_aliasing_free(&self, fs: f64) -> bool {
        let pieces = self.reduce_modulo(fs);
        let tol = 1e-9 * fs;
        pieces.windows(2).all(|w| w[1].0 >= w[0].1 - tol)
    }
}

/// One `f >= 0` piece of a [`SpectralDensity`]; mirrored onto `f < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdSegment {
    pub interval: FrequencyInterval,
    pub value: f64,
}

/// Even, nonnegative, piecewise-constant power spectral density with bounded
/// support.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralDensity {
    segments: Vec<PsdSegment>,
}

impl SpectralDensity {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a density from `(lo, hi, value)` pieces on `f >= 0`. Pieces
    /// must be disjoint; zero-valued pieces are dropped.
    pub fn from_positive<I: IntoIterator<Item = (f64, f64, f64)>>(pieces: I) -> Result<Self> {
        let mut segments = Vec::new();
        for (lo, hi, value) in pieces {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(invalid(format!("segment ({lo}, {hi}) is not bounded")));
            }
            if lo < 0.0 {
                return Err(invalid(format!(
                    "segment ({lo}, {hi}) must lie in f >= 0; the negative half is mirrored"
                )));
            }
            if !(value >= 0.0 && value.is_finite()) {
                return Err(invalid(format!("segment value {value} must be finite and >= 0")));
            }
            let interval = FrequencyInterval::new(lo, hi)?;
            if value > 0.0 {
                segments.push(PsdSegment { interval, value });
            }
        }
        segments.sort_by(|a, b| a.interval.lo.partial_cmp(&b.interval.lo).unwrap_or(Ordering::Equal));
        for w in segments.windows(2) {
            if w[1].interval.lo < w[0].interval.hi - edge_eps(w[0].interval.hi, w[1].interval.lo) {
                return Err(invalid(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    w[0].interval.lo, w[0].interval.hi, w[1].interval.lo, w[1].interval.hi
                )));
            }
        }
        Ok(Self { segments })
    }

    /// `value` on `lo <= |f| < hi`.
    pub fn flat_band(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::from_positive([(lo, hi, value)])
    }

    /// `value` on `|f| < w`.
    pub fn lowpass(w: f64, value: f64) -> Result<Self> {
        Self::from_positive([(0.0, w, value)])
    }

    pub fn segments(&self) -> &[PsdSegment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment value containing `|f|`, else zero.
    pub fn evaluate(&self, f: f64) -> f64 {
        let a = f.abs();
        // Segments are sorted and disjoint, so a binary search suffices.
        let idx = self.segments.partition_point(|s| s.interval.hi <= a);
        match self.segments.get(idx) {
            Some(s) if s.interval.contains(a) => s.value,
            _ => 0.0,
        }
    }

    /// Largest `|f|` with positive density.
    pub fn f_max(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.interval.hi)
    }

    /// Twice the largest frequency in the support.
    pub fn nyquist_rate(&self) -> f64 {
        2.0 * self.f_max()
    }

    /// Full-line support (both halves).
    pub fn support(&self) -> FrequencySet {
        let pos = FrequencySet::from_pairs(self.segments.iter().map(|s| (s.interval.lo, s.interval.hi)));
        pos.union(&pos.reflect())
    }

    /// Lebesgue measure of the support, i.e. the Landau rate.
    pub fn occupancy(&self) -> f64 {
        self.support().measure()
    }

    /// `∫ S(f) df` over the real line.
    pub fn total_power(&self) -> f64 {
        2.0 * self.segments.iter().map(|s| s.value * s.interval.width()).sum::<f64>()
    }

    /// `∫_F S(f) df`, exact.
    pub fn integrate(&self, set: &FrequencySet) -> f64 {
        let mut total = 0.0;
        for iv in set.intervals() {
            for s in &self.segments {
                for (lo, hi) in [(s.interval.lo, s.interval.hi), (-s.interval.hi, -s.interval.lo)] {
                    let a = lo.max(iv.lo());
                    let b = hi.min(iv.hi());
                    if b > a {
                        total += s.value * (b - a);
                    }
                }
            }
        }
        total
    }

    /// All breakpoints on the full line, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(4 * self.segments.len());
        for s in &self.segments {
            pts.extend([s.interval.lo, s.interval.hi, -s.interval.lo, -s.interval.hi]);
        }
        dedup_points(&mut pts);
        pts
    }

    /// `Σ_k S(f - fs k)`; periodic in `f` with period `fs`.
    pub fn aliased_sum(&self, fs: f64, f: f64) -> Result<f64> {
        if !(fs > 0.0) {
            return Err(invalid(format!("sampling frequency must be positive, got {fs}")));
        }
        let extent = self.f_max();
        Ok(translate_range(f, fs, extent)
            .map(|k| self.evaluate(f - fs * k as f64))
            .sum())
    }

    /// Pointwise combination on the common refinement of two densities.
    pub fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut pts: Vec<f64> = self
            .segments
            .iter()
            .chain(other.segments.iter())
            .flat_map(|s| [s.interval.lo, s.interval.hi])
            .collect();
        dedup_points(&mut pts);
        let mut pieces = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            if w[1] - w[0] <= edge_eps(w[0], w[1]) {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let v = op(self.evaluate(mid), other.evaluate(mid));
            pieces.push((w[0], w[1], v));
        }
        Self::from_positive(pieces)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::from_positive(
            self.segments
                .iter()
                .map(|s| (s.interval.lo, s.interval.hi, s.value * c)),
        )
    }

    /// Superlevel set of measure at most `m` maximizing `∫_F S`.
    ///
    /// Segments are taken by decreasing value (ties: smaller `|f|` first) as
    /// symmetric pairs; the last pair is trimmed from its inner edge outward.
    pub fn superlevel_set_of_measure(&self, m: f64) -> (FrequencySet, f64) {
        let mut order: Vec<&PsdSegment> = self.segments.iter().collect();
        order.sort_by(|a, b| {
            b.value
                .partial_cmp(&a.value)
                .unwrap_or(Ordering::Equal)
                .then(a.interval.lo.partial_cmp(&b.interval.lo).unwrap_or(Ordering::Equal))
        });
        let mut remaining = m.max(0.0);
        let mut pairs = Vec::new();
        let mut integral = 0.0;
        for s in order {
            if remaining <= 0.0 {
                break;
            }
            let w = s.interval.width();
            let take = w.min(0.5 * remaining);
            let (lo, hi) = (s.interval.lo, s.interval.lo + take);
            pairs.push((lo, hi));
            pairs.push((-hi, -lo));
            integral += 2.0 * take * s.value;
            remaining -= 2.0 * take;
        }
        (FrequencySet::from_pairs(pairs), integral)
    }
}

/// `S_X² / (S_X + S_η)` with `0/0 = 0`.
pub fn snr_ratio(sx: &SpectralDensity, sn: &SpectralDensity) -> Result<SpectralDensity> {
    sx.combine(sn, |x, n| if x + n > 0.0 { x * x / (x + n) } else { 0.0 })
}

/// Complex frequency response `H(f)`, piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGainProfile {
    kind: GainKind,
}

#[derive(Debug, Clone, PartialEq)]
enum GainKind {
    AllPass,
    Segments {
        segments: Vec<(FrequencyInterval, Complex64)>,
        conjugate_symmetric: bool,
    },
}

impl ComplexGainProfile {
    /// `H(f) ≡ 1`.
    pub fn all_pass() -> Self {
        Self {
            kind: GainKind::AllPass,
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: GainKind::Segments {
                segments: Vec::new(),
                conjugate_symmetric: true,
            },
        }
    }

    /// Arbitrary full-line segments; zero outside.
    pub fn from_segments<I: IntoIterator<Item = (f64, f64, Complex64)>>(pieces: I) -> Result<Self> {
        let mut segments = Vec::new();
        for (lo, hi, g) in pieces {
            if !(lo.is_finite() && hi.is_finite() && g.re.is_finite() && g.im.is_finite()) {
                return Err(invalid(format!("gain segment ({lo}, {hi}) is not finite")));
            }
            let iv = FrequencyInterval::new(lo, hi)?;
            if g != Complex64::new(0.0, 0.0) {
                segments.push((iv, g));
            }
        }
        segments.sort_by(|a, b| a.0.lo.partial_cmp(&b.0.lo).unwrap_or(Ordering::Equal));
        for w in segments.windows(2) {
            if w[1].0.lo < w[0].0.hi - edge_eps(w[0].0.hi, w[1].0.lo) {
                return Err(invalid("gain segments overlap"));
            }
        }
        let conjugate_symmetric = check_conjugate_symmetric(&segments);
        Ok(Self {
            kind: GainKind::Segments {
                segments,
                conjugate_symmetric,
            },
        })
    }

    /// Gains given on `f >= 0`, mirrored with `H(-f) = conj(H(f))` so the
    /// impulse response is real.
    pub fn conjugate_symmetric<I: IntoIterator<Item = (f64, f64, Complex64)>>(pieces: I) -> Result<Self> {
        let mut all = Vec::new();
        for (lo, hi, g) in pieces {
            if lo < 0.0 {
                return Err(invalid("conjugate-symmetric gains are given on f >= 0"));
            }
            all.push((lo, hi, g));
            all.push((-hi, -lo, g.conj()));
        }
        Self::from_segments(all)
    }

    /// Unit gain on `set`, zero elsewhere.
    pub fn indicator(set: &FrequencySet) -> Self {
        Self::from_segments(set.pairs().map(|(lo, hi)| (lo, hi, Complex64::new(1.0, 0.0))))
            .expect("a normalized set yields valid segments")
    }

    pub fn is_all_pass(&self) -> bool {
        matches!(self.kind, GainKind::AllPass)
    }

    /// True when `H(-f) = conj(H(f))`, i.e. the filter is real.
    pub fn is_conjugate_symmetric(&self) -> bool {
        match &self.kind {
            GainKind::AllPass => true,
            GainKind::Segments {
                conjugate_symmetric, ..
            } => *conjugate_symmetric,
        }
    }

    pub fn gain(&self, f: f64) -> Complex64 {
        match &self.kind {
            GainKind::AllPass => Complex64::new(1.0, 0.0),
            GainKind::Segments { segments, .. } => {
                let idx = segments.partition_point(|(iv, _)| iv.hi <= f);
                match segments.get(idx) {
                    Some((iv, g)) if iv.contains(f) => *g,
                    _ => Complex64::new(0.0, 0.0),
                }
            }
        }
    }

    /// `|H(f)|²`.
    pub fn power_gain(&self, f: f64) -> f64 {
        self.gain(f).norm_sqr()
    }

    /// Support of `H`, or `None` for an all-pass filter.
    pub fn support(&self) -> Option<FrequencySet> {
        match &self.kind {
            GainKind::AllPass => None,
            GainKind::Segments { segments, .. } => {
                Some(FrequencySet::from_pairs(segments.iter().map(|(iv, _)| (iv.lo, iv.hi))))
            }
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            GainKind::AllPass => Vec::new(),
            GainKind::Segments { segments, .. } => {
                let mut pts: Vec<f64> = segments.iter().flat_map(|(iv, _)| [iv.lo, iv.hi]).collect();
                dedup_points(&mut pts);
                pts
            }
        }
    }

    /// Largest `|f|` in the support; infinite for all-pass.
    pub fn extent(&self) -> f64 {
        match &self.kind {
            GainKind::AllPass => f64::INFINITY,
            GainKind::Segments { segments, .. } => segments
                .iter()
                .map(|(iv, _)| iv.lo.abs().max(iv.hi.abs()))
                .fold(0.0, f64::max),
        }
    }
}

fn check_conjugate_symmetric(segments: &[(FrequencyInterval, Complex64)]) -> bool {
    let mut pts: Vec<f64> = segments
        .iter()
        .flat_map(|(iv, _)| [iv.lo, iv.hi, -iv.lo, -iv.hi])
        .collect();
    dedup_points(&mut pts);
    let lookup = |f: f64| {
        let idx = segments.partition_point(|(iv, _)| iv.hi <= f);
        match segments.get(idx) {
            Some((iv, g)) if iv.contains(f) => *g,
            _ => Complex64::new(0.0, 0.0),
        }
    };
    pts.windows(2).all(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        let (a, b) = (lookup(mid), lookup(-mid).conj());
        (a - b).norm() <= 1e-12 * (1.0 + a.norm())
    })
}
