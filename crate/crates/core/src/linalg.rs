//! Small dense Hermitian eigenproblems.
//!
//! Filter-bank matrices are at most a few dozen rows, so a cyclic complex
//! Jacobi sweep is fast enough and converges unconditionally.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 100;

/// Default relative threshold below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Row-major entries. Rejects input whose asymmetry exceeds `1e-12`
    /// relative to the largest entry; the stored matrix is symmetrized.
    pub fn from_row_major(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut m = Self { dim, entries };
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let a = m.get(i, j);
                let b = m.get(j, i).conj();
                asym = asym.max((a - b).norm());
                let avg = 0.5 * (a + b);
                let avg = if i == j { Complex64::new(avg.re, 0.0) } else { avg };
                m.set(i, j, avg);
                m.set(j, i, avg.conj());
            }
        }
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_major(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `A B A` for Hermitian `A` and `B`; the product is Hermitian.
    pub fn sandwich(&self, inner: &Self) -> Self {
        let n = self.dim;
        let ab = matmul(n, &self.entries, &inner.entries);
        let aba = matmul(n, &ab, &self.entries);
        let mut out = Self { dim: n, entries: aba };
        out.symmetrize();
        out
    }

    fn symmetrize(&mut self) {
        for i in 0..self.dim {
            let d = self.get(i, i);
            self.set(i, i, Complex64::new(d.re, 0.0));
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i).conj());
                self.set(i, j, avg);
                self.set(j, i, avg.conj());
            }
        }
    }
}

fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column-major: column `j` holds the eigenvector of `eigenvalues[j]`.
    eigenvectors: Vec<Complex64>,
    dim: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, j: usize) -> &[Complex64] {
        &self.eigenvectors[j * self.dim..(j + 1) * self.dim]
    }

    /// `V f(Λ) V*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim;
        let mut m = HermitianMatrix::zeros(n);
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.eigenvector(j);
            for r in 0..n {
                for c in 0..n {
                    let z = m.get(r, c) + w * v[r] * v[c].conj();
                    m.set(r, c, z);
                }
            }
        }
        m.symmetrize();
        m
    }

    /// `‖M − V Λ V*‖_F`.
    pub fn residual(&self, m: &HermitianMatrix) -> f64 {
        let rebuilt = self.reconstruct_with(|l| l);
        m.entries
            .iter()
            .zip(&rebuilt.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖V* V − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim;
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = self
                    .eigenvector(i)
                    .iter()
                    .zip(self.eigenvector(j))
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err += (dot - target).norm_sqr();
            }
        }
        err.sqrt()
    }
}

/// Eigen-decomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = m.dim;
    let mut a = m.entries.clone();
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let scale = m.frobenius_norm();
    let idx = |i: usize, j: usize| i * n + j;

    let mut converged = n < 2 || scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure {
                what: "Jacobi eigen-solver",
                iterations: sweep,
            });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                // Phase-align a_pq to the real axis, then a real plane rotation.
                let e = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s conj(e), c conj(e)]].
                let upq = Complex64::new(s, 0.0);
                let uqp = -s * e.conj();
                let uqq = c * e.conj();
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp + uqp * akq;
                    a[idx(k, q)] = upq * akp + uqq * akq;
                    let vkp = v[idx(k, p)];
                    let vkq = v[idx(k, q)];
                    v[idx(k, p)] = c * vkp + uqp * vkq;
                    v[idx(k, q)] = upq * vkp + uqq * vkq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk + uqp.conj() * aqk;
                    a[idx(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[idx(p, q)] = Complex64::new(0.0, 0.0);
                a[idx(q, p)] = Complex64::new(0.0, 0.0);
                a[idx(p, p)] = Complex64::new(a[idx(p, p)].re, 0.0);
                a[idx(q, q)] = Complex64::new(a[idx(q, q)].re, 0.0);
            }
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[idx(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        converged = off <= 1e-15 * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[idx(i, i)].re.total_cmp(&a[idx(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[idx(i, i)].re).collect();
    let mut eigenvectors = Vec::with_capacity(n * n);
    for &j in &order {
        eigenvectors.extend((0..n).map(|r| v[idx(r, j)]));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        dim: n,
    })
}

/// Pseudo inverse square root on the range of a PSD matrix.
///
/// Eigenvalues at or below `rank_tol * λ_max` are sent to zero.
pub fn inv_sqrt_psd(m: &HermitianMatrix, rank_tol: f64) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(m)?;
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let cutoff = rank_tol * lmax;
    if let Some(&lmin) = eig.eigenvalues.first() {
        if lmin < -cutoff {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: lmin,
                tolerance: cutoff,
            });
        }
    }
    Ok(eig.reconstruct_with(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 }))
}
