//! Complex-valued linear algebra and special functions shared by the
//! estimators.
//!
//! Matrices here are small (channel matrices, a handful of rows/columns), so
//! everything is implemented directly: one-sided Jacobi for singular values
//! and the pseudo-inverse, Cholesky for the capacity log-determinant, and the
//! Gaussian tail through `erfc`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative rank tolerance: sigma_min <= RANK_TOL * sigma_max is treated as
/// rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Convergence threshold for the one-sided Jacobi sweep.
const JACOBI_TOL: f64 = 1e-13;

/// Sweep budget before the iteration is declared non-convergent.
const MAX_SWEEPS: usize = 64;

/// Complex vector alias; entries are dimensionless channel-domain values.
pub type ComplexVec = Vec<Complex64>;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    /// Builds a matrix from row-major data. Panics on a shape mismatch;
    /// shape errors at this level are programming errors, not input errors.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![Complex64::ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// True when every entry is finite (no NaN/Inf); untrusted inputs are
    /// validated with this before use.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Complex64::ZERO;
                for k in 0..self.cols {
                    acc += self.get(r, k) * other.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> ComplexVec {
        assert_eq!(self.cols, v.len(), "vector length must match cols");
        let mut out = vec![Complex64::ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            let row = self.row(r);
            for (h, x) in row.iter().zip(v.iter()) {
                acc += h * x;
            }
            out[r] = acc;
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let data = self.data.iter().map(|z| z * a).collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entry magnitude of self - other; infinity norm of the
    /// elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Result of a one-sided Jacobi factorization of an m x n matrix (m >= n):
/// `work` holds U * diag(sigma) column by column and `v` the right singular
/// vectors.
struct JacobiFactors {
    /// Columns of the rotated working matrix; column j has norm sigma_j.
    work: Vec<Vec<Complex64>>,
    v: ComplexMat,
    sigma: Vec<f64>,
}

/// One-sided Jacobi orthogonalization. Requires rows >= cols.
fn one_sided_jacobi(h: &ComplexMat) -> Result<JacobiFactors> {
    let m = h.rows();
    let n = h.cols();
    debug_assert!(m >= n);

    let mut work: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..m).map(|i| h.get(i, j)).collect())
        .collect();
    let mut v = ComplexMat::identity(n);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let a: f64 = work[p].iter().map(|z| z.norm_sqr()).sum();
                let b: f64 = work[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = work[p]
                    .iter()
                    .zip(work[q].iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let scale = (a * b).sqrt();
                if scale == 0.0 {
                    continue;
                }
                let off = gamma.norm() / scale;
                max_off = max_off.max(off);
                if off <= JACOBI_TOL {
                    continue;
                }

                // Phase that makes the cross term real, then a real Jacobi
                // rotation on the column pair.
                let u = gamma / gamma.norm();
                let g = gamma.norm();
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                let uc = u.conj();
                for i in 0..m {
                    let wp = work[p][i];
                    let wq = work[q][i] * uc;
                    work[p][i] = c * wp - s * wq;
                    work[q][i] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q) * uc;
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if max_off <= JACOBI_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergent { sweeps: MAX_SWEEPS });
    }

    let sigma: Vec<f64> = work
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(JacobiFactors { work, v, sigma })
}

/// Smallest and largest singular values of `h`.
pub fn singular_values(h: &ComplexMat) -> Result<(f64, f64)> {
    // One-sided Jacobi wants a tall matrix; the singular values of H and H^H
    // coincide.
    let tall;
    let hh = if h.rows() >= h.cols() {
        h
    } else {
        tall = h.hermitian();
        &tall
    };
    let factors = one_sided_jacobi(hh)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &s in &factors.sigma {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

/// Left pseudo-inverse G with G * H = I (cols x cols).
///
/// Requires rows >= cols and full column rank; rank is judged against
/// [`RANK_TOL`] relative to the largest singular value.
pub fn pseudo_inverse(h: &ComplexMat) -> Result<ComplexMat> {
    if h.rows() < h.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.cols(),
            got: h.rows(),
        });
    }
    let factors = one_sided_jacobi(h)?;
    let n = h.cols();
    let m = h.rows();
    let sig_max = factors.sigma.iter().cloned().fold(0.0, f64::max);
    let sig_min = factors.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if sig_max == 0.0 || sig_min <= RANK_TOL * sig_max {
        return Err(Error::RankDeficient {
            ratio: if sig_max == 0.0 { 0.0 } else { sig_min / sig_max },
        });
    }

    // H = U S V^H  =>  H^+ = V S^-1 U^H, with U's columns being the rotated
    // working columns divided by their norms.
    let mut g = ComplexMat::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = Complex64::ZERO;
            for k in 0..n {
                let s2 = factors.sigma[k] * factors.sigma[k];
                acc += factors.v.get(i, k) * factors.work[k][j].conj() / s2;
            }
            g.set(i, j, acc);
        }
    }
    Ok(g)
}

/// Ergodic-style capacity metric `C = (1/M) ln det(I + H H^H / rho^2)` with
/// `M` the number of streams (columns of `h`), natural logarithm.
pub fn log_det_capacity(h: &ComplexMat, rho: f64) -> f64 {
    assert!(rho > 0.0 && rho.is_finite(), "rho must be positive");
    let streams = h.cols() as f64;
    // det(I_m + H H^H / rho^2) = det(I_n + H^H H / rho^2); work with the
    // smaller Gram matrix.
    let gram = if h.rows() <= h.cols() {
        h.mul(&h.hermitian())
    } else {
        h.hermitian().mul(h)
    };
    let n = gram.rows();
    let inv_r2 = 1.0 / (rho * rho);
    let mut a = ComplexMat::identity(n);
    for r in 0..n {
        for c in 0..n {
            let v = a.get(r, c) + gram.get(r, c) * inv_r2;
            a.set(r, c, v);
        }
    }
    (ln_det_hermitian_pd(&a) / streams).max(0.0)
}

/// Natural log-determinant of a Hermitian positive definite matrix via
/// Cholesky.
fn ln_det_hermitian_pd(a: &ComplexMat) -> f64 {
    let n = a.rows();
    let mut l = ComplexMat::zeros(n, n);
    let mut ln_det = 0.0f64;
    for k in 0..n {
        let mut diag = a.get(k, k).re;
        for j in 0..k {
            diag -= l.get(k, j).norm_sqr();
        }
        // I + PSD is strictly positive definite; a non-positive pivot can
        // only come from catastrophic rounding.
        debug_assert!(diag > 0.0, "Cholesky pivot must stay positive");
        let lkk = diag.max(f64::MIN_POSITIVE).sqrt();
        l.set(k, k, Complex64::new(lkk, 0.0));
        ln_det += 2.0 * lkk.ln();
        for i in (k + 1)..n {
            let mut acc = a.get(i, k);
            for j in 0..k {
                acc -= l.get(i, j) * l.get(k, j).conj();
            }
            l.set(i, k, acc / lkk);
        }
    }
    ln_det
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x), evaluated through the
/// complementary error function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
