//! Dense symmetric linear algebra on top of `faer`.
//!
//! Every rank decision uses one relative cutoff: an eigenvalue `λ_i` counts
//! as nonzero iff `λ_i > rtol · λ_1`. Negative eigenvalues from roundoff are
//! treated as zero.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigendecomposition `A = U diag(λ) Uᵀ` with `λ_1 >= ... >= λ_n`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub vectors: Mat<f64>,
    pub values: Vec<f64>,
}

fn check_finite(a: MatRef<'_, f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// `(A + Aᵀ)/2`, bitwise symmetric.
pub fn symmetrize(a: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn sym_eig(a: MatRef<'_, f64>) -> Result<SymEig> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidMatrix(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymEig { vectors: Mat::zeros(0, 0), values: Vec::new() });
    }
    let sym = symmetrize(a);
    let evd =
        sym.self_adjoint_eigen(Side::Lower).map_err(|e| Error::InvalidMatrix(format!("eigensolver failed: {e:?}")))?;
    // faer returns ascending order
    let ascending = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|k| ascending[n - 1 - k]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok(SymEig { vectors, values })
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn cutoff(&self, rtol: f64) -> f64 {
        rtol * self.values.first().copied().unwrap_or(0.0).max(0.0)
    }

    /// Numerical rank: number of eigenvalues above the relative cutoff.
    pub fn rank(&self, rtol: f64) -> usize {
        let cutoff = self.cutoff(rtol);
        self.values.iter().take_while(|&&v| v > cutoff).count()
    }

    /// `Σ_{i<count} f(λ_i) u_i u_iᵀ` for nonnegative `f`, symmetric bit-for-bit.
    fn spectral_function(&self, count: usize, f: impl Fn(f64) -> f64) -> Mat<f64> {
        let n = self.dim();
        let scaled = Mat::from_fn(n, count, |i, k| self.vectors[(i, k)] * f(self.values[k]).sqrt());
        let product = &scaled * scaled.transpose();
        symmetrize(product.as_ref())
    }

    pub fn pinv(&self, rtol: f64) -> Mat<f64> {
        self.spectral_function(self.rank(rtol), |v| 1.0 / v)
    }

    /// Pseudo-inverse of the best rank-`s` approximation.
    pub fn pinv_rank(&self, s: usize, rtol: f64) -> Result<Mat<f64>> {
        if s < 1 || s > self.dim() {
            return Err(Error::InvalidRank { rank: s, min: 1, max: self.dim() });
        }
        Ok(self.spectral_function(self.rank(rtol).min(s), |v| 1.0 / v))
    }

    /// Symmetric PSD square root, eigenvalues at or below the cutoff set to zero.
    pub fn sqrt(&self, rtol: f64) -> Mat<f64> {
        self.spectral_function(self.rank(rtol), |v| v.sqrt())
    }

    /// Pseudo-inverse of [`SymEig::sqrt`] with the same retained eigenvalues.
    pub fn sqrt_pinv(&self, rtol: f64) -> Mat<f64> {
        self.spectral_function(self.rank(rtol), |v| 1.0 / v.sqrt())
    }
}

pub fn pinv(a: MatRef<'_, f64>, rtol: f64) -> Result<Mat<f64>> {
    Ok(sym_eig(a)?.pinv(rtol))
}

pub fn pinv_rank(a: MatRef<'_, f64>, s: usize, rtol: f64) -> Result<Mat<f64>> {
    if s < 1 || s > a.nrows() {
        return Err(Error::InvalidRank { rank: s, min: 1, max: a.nrows() });
    }
    sym_eig(a)?.pinv_rank(s, rtol)
}

pub fn psd_sqrt(a: MatRef<'_, f64>, rtol: f64) -> Result<Mat<f64>> {
    Ok(sym_eig(a)?.sqrt(rtol))
}

/// Orthonormal columns orthogonal to every row of the `m × n` matrix `Φ`:
/// the trailing `n - m` columns of the full QR factor of `Φᵀ`. They span the
/// null space when `Φ` has full row rank and a subspace of it otherwise.
pub fn null_space(phi: MatRef<'_, f64>) -> Mat<f64> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if m >= n {
        return Mat::zeros(n, 0);
    }
    if m == 0 {
        return Mat::identity(n, n);
    }
    let q = phi.transpose().qr().compute_Q();
    Mat::from_fn(n, n - m, |i, k| q[(i, m + k)])
}

/// Orthonormal basis of the numerical null space of `Φ`, found by SVD.
///
/// Singular values at most `rtol · σ_max` count as zero, so rank-deficient
/// matrices of any shape yield their full null space.
pub fn null_space_svd(phi: MatRef<'_, f64>, rtol: f64) -> Result<Mat<f64>> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if m == 0 {
        return Ok(Mat::identity(n, n));
    }
    check_finite(phi)?;
    let svd = phi.svd().map_err(|e| Error::InvalidMatrix(format!("svd did not converge: {e:?}")))?;
    let sigma = svd.S().column_vector();
    let top = if sigma.nrows() > 0 { sigma[0] } else { 0.0 };
    let rank = (0..sigma.nrows()).filter(|&i| sigma[i] > rtol * top).count();
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, k| v[(i, rank + k)]))
}

/// A nonzero `c` with `Φc = 0` for a wide matrix (`ncols > nrows`), scaled to
/// unit max-norm. The zero matrix yields the first basis vector.
pub fn null_vector(phi: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if n <= m {
        return Err(Error::InvalidInput(format!("null_vector needs more columns than rows, got {m}x{n}")));
    }
    check_finite(phi)?;
    let all_zero = (0..n).all(|j| (0..m).all(|i| phi[(i, j)] == 0.0));
    if all_zero {
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        return Ok(c);
    }
    let basis = null_space(phi);
    let last = basis.ncols() - 1;
    let mut c: Vec<f64> = (0..n).map(|i| basis[(i, last)]).collect();
    normalize_max(&mut c);
    Ok(c)
}

/// Scales to unit max-norm with the first largest-magnitude entry positive.
pub(crate) fn normalize_max(c: &mut [f64]) {
    let mut pivot = 0.0f64;
    for &v in c.iter() {
        if v.abs() > pivot.abs() {
            pivot = v;
        }
    }
    if pivot != 0.0 {
        c.iter_mut().for_each(|v| *v /= pivot);
    }
}

#[cfg(test)]
pub(crate) fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out = out.max(a[(i, j)].abs());
        }
    }
    out
}
