//! Finite-rank approximations of a kernel built from landmark points `Z`.
//!
//! All four constructions share one representation,
//!
//! ```text
//! k_app(x, y) = (Bᵀ k(Z, x)) · (Bᵀ k(Z, y)),    B ∈ R^{ℓ × s}
//! ```
//!
//! so the test functions `φ_i(x) = (Bᵀ k(Z, x))_i` come for free:
//!
//! * [`LowRankKind::NystromFull`]: `BBᵀ = k(Z,Z)⁺`, the plain Nyström kernel `k^Z`.
//! * [`LowRankKind::NystromSvd`]: `BBᵀ = k(Z,Z)⁺_s`, the rank-`s` truncation `k_s^Z`.
//! * [`LowRankKind::MercerMu`]: the rank-`s` truncated Mercer decomposition of `k^Z`
//!   with respect to `mu`, which needs the squared kernel `h_mu` in closed form.
//! * [`LowRankKind::MercerEmpirical`]: the same with `h_mu` replaced by its
//!   empirical version `h_X(x, y) = (1/M) k(x, X) k(X, y)`.
//!
//! For the Mercer variants, with `H` the PSD square root of `h(Z,Z)` and
//! `H k(Z,Z)⁺ H = V diag(κ) Vᵀ`, the eigenfunctions of `k^Z` are
//! `f_i = (H⁺ v_i)ᵀ k(Z, ·)` and the factor columns are `√κ_i H⁺ v_i`.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::kernel::{gram_symmetric_unchecked, gram_unchecked, Kernel};
use crate::linalg::{sym_eig, symmetrize, SymEig};
use crate::points::PointSet;

/// Rows per block when evaluating `k(P, Z)` for large point sets.
const BLOCK_ROWS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LowRankKind {
    NystromFull,
    NystromSvd,
    MercerMu,
    MercerEmpirical,
}

impl LowRankKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LowRankKind::NystromFull => "nystrom-full",
            LowRankKind::NystromSvd => "nystrom-svd",
            LowRankKind::MercerMu => "mercer-mu",
            LowRankKind::MercerEmpirical => "mercer-empirical",
        }
    }
}

/// Finite-rank kernel `k_app(x, y) = k(x, Z) B Bᵀ k(Z, y)`.
#[derive(Debug, Clone)]
pub struct LowRankKernel {
    kernel: Kernel,
    landmarks: PointSet,
    factor: Mat<f64>,
    kind: LowRankKind,
    eigenvalues: Vec<f64>,
}

impl LowRankKernel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn landmarks(&self) -> &PointSet {
        &self.landmarks
    }

    /// `B`, of shape `ℓ × s`.
    pub fn factor(&self) -> MatRef<'_, f64> {
        self.factor.as_ref()
    }

    pub fn kind(&self) -> LowRankKind {
        self.kind
    }

    /// Number of test functions `s`.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// All `ℓ` eigenvalues of the construction in nonincreasing order: `λ_i / ℓ`
    /// (eigenvalues of `k(Z,Z)` scaled to `mu_Z`) for the Nyström kinds and `κ_i`
    /// for the Mercer kinds. Only the first [`rank`](Self::rank) are used by `B`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `BBᵀ`.
    pub fn weight_matrix(&self) -> Mat<f64> {
        symmetrize((&self.factor * self.factor.transpose()).as_ref())
    }

    /// Test-function values `φ(x) = Bᵀ k(Z, x)`.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let single = PointSet::new(x.len(), x.to_vec())?;
        self.kernel.check_points(&single)?;
        let row = self.features_unchecked(&single);
        Ok((0..self.rank()).map(|j| row[(0, j)]).collect())
    }

    /// `N × s` matrix of test-function values at every point, `k(P, Z) B`.
    pub fn feature_matrix(&self, points: &PointSet) -> Result<Mat<f64>> {
        self.kernel.check_points(points)?;
        Ok(self.features_unchecked(points))
    }

    fn features_unchecked(&self, points: &PointSet) -> Mat<f64> {
        let n = points.len();
        let s = self.rank();
        let mut out = Mat::<f64>::zeros(n, s);
        if s == 0 {
            return out;
        }
        for start in (0..n).step_by(BLOCK_ROWS) {
            let end = (start + BLOCK_ROWS).min(n);
            let block = gram_unchecked(&self.kernel, &points.slice(start, end), &self.landmarks);
            let values = &block * &self.factor;
            out.as_mut().subrows_mut(start, end - start).copy_from(&values);
        }
        out
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let fx = self.features(x)?;
        let fy = self.features(y)?;
        Ok(fx.iter().zip(&fy).map(|(a, b)| a * b).sum())
    }

    /// `k_app(x, x)`.
    pub fn diag(&self, x: &[f64]) -> Result<f64> {
        Ok(self.features(x)?.iter().map(|v| v * v).sum())
    }

    /// `max(0, k(x, x) - k_app(x, x))`.
    pub fn residual_diag(&self, x: &[f64]) -> Result<f64> {
        let k = self.kernel.eval(x, x)?;
        Ok((k - self.diag(x)?).max(0.0))
    }

    /// `k(x,x) - k_app(x,x)` at every point, without clamping.
    pub fn residual_diag_raw_batch(&self, points: &PointSet) -> Result<Vec<f64>> {
        let features = self.feature_matrix(points)?;
        Ok((0..points.len())
            .map(|i| {
                let x = points.point(i);
                let app: f64 = (0..self.rank()).map(|j| features[(i, j)] * features[(i, j)]).sum();
                self.kernel.eval_unchecked(x, x) - app
            })
            .collect())
    }

    /// [`residual_diag`](Self::residual_diag) at every point.
    pub fn residual_diag_batch(&self, points: &PointSet) -> Result<Vec<f64>> {
        Ok(self.residual_diag_raw_batch(points)?.into_iter().map(|v| v.max(0.0)).collect())
    }
}

/// Eigendecomposition of `k(Z, Z)` shared by every construction on the same
/// landmarks.
#[derive(Debug, Clone)]
pub struct LandmarkBasis {
    kernel: Kernel,
    landmarks: PointSet,
    eig: SymEig,
    rtol: f64,
}

impl LandmarkBasis {
    pub fn new(kernel: &Kernel, landmarks: &PointSet, rtol: f64) -> Result<Self> {
        if landmarks.is_empty() {
            return Err(Error::InvalidInput("landmark set is empty".into()));
        }
        kernel.check_points(landmarks)?;
        let kzz = gram_symmetric_unchecked(kernel, landmarks);
        let eig = sym_eig(kzz.as_ref())?;
        Ok(Self { kernel: *kernel, landmarks: landmarks.clone(), eig, rtol })
    }

    pub fn size(&self) -> usize {
        self.landmarks.len()
    }

    /// Eigenpairs of `k(Z, Z)`, descending.
    pub fn eig(&self) -> &SymEig {
        &self.eig
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }

    fn check_rank(&self, s: usize) -> Result<()> {
        if s > self.size() {
            return Err(Error::InvalidRank { rank: s, min: 0, max: self.size() });
        }
        Ok(())
    }

    fn scaled_eigenvalues(&self) -> Vec<f64> {
        let l = self.size() as f64;
        self.eig.values.iter().map(|v| v / l).collect()
    }

    fn truncated_nystrom(&self, keep: usize, kind: LowRankKind) -> LowRankKernel {
        let u = &self.eig.vectors;
        let factor = Mat::from_fn(self.size(), keep, |i, k| u[(i, k)] / self.eig.values[k].sqrt());
        LowRankKernel {
            kernel: self.kernel,
            landmarks: self.landmarks.clone(),
            factor,
            kind,
            eigenvalues: self.scaled_eigenvalues(),
        }
    }

    /// `k^Z(x, y) = k(x, Z) k(Z, Z)⁺ k(Z, y)`.
    pub fn nystrom(&self) -> LowRankKernel {
        self.truncated_nystrom(self.eig.rank(self.rtol), LowRankKind::NystromFull)
    }

    /// `k_s^Z(x, y) = k(x, Z) k(Z, Z)⁺_s k(Z, y)`.
    pub fn nystrom_svd(&self, s: usize) -> Result<LowRankKernel> {
        self.check_rank(s)?;
        Ok(self.truncated_nystrom(self.eig.rank(self.rtol).min(s), LowRankKind::NystromSvd))
    }

    /// `k_{s,mu}^Z` from the closed-form squared kernel.
    pub fn mercer_mu(&self, s: usize) -> Result<LowRankKernel> {
        self.check_rank(s)?;
        let squared = self.kernel.squared_kernel()?;
        let hzz = gram_symmetric_unchecked(&squared, &self.landmarks);
        self.mercer_from_h(hzz.as_ref(), s, LowRankKind::MercerMu)
    }

    /// `k_{s,X}^Z` from the empirical squared kernel on `X`.
    pub fn mercer_empirical(&self, sample: &PointSet, s: usize) -> Result<LowRankKernel> {
        self.check_rank(s)?;
        let hzz = self.empirical_squared_gram(sample)?;
        self.mercer_from_h(hzz.as_ref(), s, LowRankKind::MercerEmpirical)
    }

    /// `h_X(Z, Z) = (1/M) k(Z, X) k(X, Z)`, accumulated over row blocks of `X`.
    pub fn empirical_squared_gram(&self, sample: &PointSet) -> Result<Mat<f64>> {
        if sample.is_empty() {
            return Err(Error::InvalidInput("empirical measure needs at least one point".into()));
        }
        self.kernel.check_points(sample)?;
        let l = self.size();
        let mut acc = Mat::<f64>::zeros(l, l);
        for start in (0..sample.len()).step_by(BLOCK_ROWS) {
            let end = (start + BLOCK_ROWS).min(sample.len());
            let block = gram_unchecked(&self.kernel, &sample.slice(start, end), &self.landmarks);
            acc += block.transpose() * &block;
        }
        let scale = 1.0 / sample.len() as f64;
        Ok(symmetrize((acc * faer::Scale(scale)).as_ref()))
    }

    fn mercer_from_h(&self, hzz: MatRef<'_, f64>, s: usize, kind: LowRankKind) -> Result<LowRankKernel> {
        let h_eig = sym_eig(hzz)?;
        let h = h_eig.sqrt(self.rtol);
        let h_pinv = h_eig.sqrt_pinv(self.rtol);
        let kzz_pinv = self.eig.pinv(self.rtol);
        let middle = symmetrize((&h * &kzz_pinv * &h).as_ref());
        let m_eig = sym_eig(middle.as_ref())?;
        let keep = m_eig.rank(self.rtol).min(s);
        let scaled_v = Mat::from_fn(self.size(), keep, |i, k| m_eig.vectors[(i, k)] * m_eig.values[k].sqrt());
        let factor = &h_pinv * &scaled_v;
        Ok(LowRankKernel {
            kernel: self.kernel,
            landmarks: self.landmarks.clone(),
            factor,
            kind,
            eigenvalues: m_eig.values,
        })
    }

    /// `mu(k - k^Z) = mu(k) - tr(k(Z,Z)⁺ h_mu(Z,Z))`.
    pub fn mu_residual_exact(&self) -> Result<f64> {
        let squared = self.kernel.squared_kernel()?;
        let trace = self.kernel.trace()?;
        let hzz = gram_symmetric_unchecked(&squared, &self.landmarks);
        let kzz_pinv = self.eig.pinv(self.rtol);
        let l = self.size();
        let mut inner = 0.0;
        for j in 0..l {
            for i in 0..l {
                inner += kzz_pinv[(i, j)] * hzz[(i, j)];
            }
        }
        Ok(trace - inner)
    }
}

/// Plain Nyström approximation `k^Z`.
pub fn build_nystrom(kernel: &Kernel, landmarks: &PointSet, rtol: f64) -> Result<LowRankKernel> {
    Ok(LandmarkBasis::new(kernel, landmarks, rtol)?.nystrom())
}

/// Rank-`s` Nyström approximation `k_s^Z`.
pub fn build_nystrom_svd(kernel: &Kernel, landmarks: &PointSet, s: usize, rtol: f64) -> Result<LowRankKernel> {
    LandmarkBasis::new(kernel, landmarks, rtol)?.nystrom_svd(s)
}

/// Truncated Mercer decomposition `k_{s,mu}^Z` of `k^Z`.
pub fn build_mercer_mu(kernel: &Kernel, landmarks: &PointSet, s: usize, rtol: f64) -> Result<LowRankKernel> {
    // fail before the eigendecomposition when h_mu is unavailable
    kernel.squared_kernel()?;
    LandmarkBasis::new(kernel, landmarks, rtol)?.mercer_mu(s)
}

/// Truncated empirical Mercer decomposition `k_{s,X}^Z` of `k^Z`.
pub fn build_mercer_empirical(
    kernel: &Kernel,
    landmarks: &PointSet,
    sample: &PointSet,
    s: usize,
    rtol: f64,
) -> Result<LowRankKernel> {
    LandmarkBasis::new(kernel, landmarks, rtol)?.mercer_empirical(sample, s)
}

/// `mu(k - k^Z)` in closed form.
pub fn mu_residual_exact(kernel: &Kernel, landmarks: &PointSet, rtol: f64) -> Result<f64> {
    kernel.squared_kernel()?;
    LandmarkBasis::new(kernel, landmarks, rtol)?.mu_residual_exact()
}
