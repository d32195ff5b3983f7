//! Kernels on `[0,1]^d` with the uniform base measure.
//!
//! The Korobov kernel of smoothness `r` is
//!
//! ```text
//! k_r(x, y) = 1 + (-1)^(r-1) (2π)^(2r) / (2r)! · B_2r(|x - y|)
//! ```
//!
//! with `B_2r` the Bernoulli polynomial. Under the uniform measure its integral
//! operator has eigenfunctions `1, √2 cos(2πm·), √2 sin(2πm·)` with eigenvalues
//! `1, m^-2r, m^-2r`, so spectra, traces, mean embeddings and the squared kernel
//! `h_mu(x,y) = ∫ k(x,t) k(t,y) dt = k_2r(x,y)` are all available in closed form.
//! Products over coordinates inherit all of this.
//!
//! The Gaussian kernel has none of those closed forms and exists to exercise the
//! purely empirical code paths.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::Mat;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Highest supported Bernoulli polynomial degree.
pub const MAX_BERNOULLI_DEGREE: u32 = 12;

/// Highest Korobov smoothness whose kernel can be evaluated.
pub const MAX_KOROBOV_R: u32 = MAX_BERNOULLI_DEGREE / 2;

fn binomial(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Coefficients (ascending powers) of `B_0, ..., B_12`, derived once from the
/// Bernoulli numbers in exact rational arithmetic.
fn bernoulli_table() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let top = MAX_BERNOULLI_DEGREE as i64;
        // B_m = -1/(m+1) Σ_{k<m} C(m+1, k) B_k, which gives B_1 = -1/2.
        let mut numbers: Vec<Ratio<i64>> = vec![Ratio::from_integer(1)];
        for m in 1..=top {
            let acc = (0..m).fold(Ratio::from_integer(0), |acc, k| acc + numbers[k as usize] * binomial(m + 1, k));
            numbers.push(-acc / (m + 1));
        }
        // B_n(t) = Σ_k C(n, k) B_k t^(n-k)
        (0..=top)
            .map(|n| {
                let mut coeffs = vec![0.0; n as usize + 1];
                for k in 0..=n {
                    let c = numbers[k as usize] * binomial(n, k);
                    coeffs[(n - k) as usize] = *c.numer() as f64 / *c.denom() as f64;
                }
                coeffs
            })
            .collect()
    })
}

/// Exact-coefficient Bernoulli polynomial `B_n(t)` for even `n <= 12`.
pub fn bernoulli_polynomial(n: u32, t: f64) -> Result<f64> {
    if !n.is_multiple_of(2) || n > MAX_BERNOULLI_DEGREE {
        return Err(Error::UnsupportedDegree(n));
    }
    Ok(horner(&bernoulli_table()[n as usize], t))
}

#[inline]
fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Riemann zeta at an even positive integer, `ζ(2r) = (-1)^(r+1) B_2r (2π)^2r / (2 (2r)!)`.
///
/// For `2r = 2, 4, 6` this reproduces `π²/6`, `π⁴/90`, `π⁶/945`.
pub fn zeta_even(two_r: u32) -> Result<f64> {
    if two_r == 0 {
        return Err(Error::UnsupportedDegree(two_r));
    }
    let b = bernoulli_polynomial(two_r, 0.0)?;
    let r = two_r / 2;
    let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * b * int_pow(2.0 * PI, two_r) / (2.0 * factorial(two_r)))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// Korobov kernel `k_r`, tensorised over the dimensions.
    Korobov { r: u32 },
    /// `exp(-|x - y|² / 2λ²)`.
    Gaussian { lengthscale: f64 },
    /// `k ≡ 1`, the `r → ∞` limit of the Korobov family.
    Constant,
}

/// A symmetric positive-definite kernel on `[0,1]^dim`. Immutable once built.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    kind: KernelKind,
    dim: usize,
    // (-1)^(r-1) (2π)^2r / (2r)!, zero for non-Korobov kinds.
    korobov_scale: f64,
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dim == other.dim
    }
}

fn int_pow(base: f64, exp: u32) -> f64 {
    (0..exp).fold(1.0, |acc, _| acc * base)
}

impl Kernel {
    /// One-dimensional Korobov kernel `k_r`.
    pub fn korobov(r: u32) -> Result<Self> {
        Self::korobov_product(r, 1)
    }

    /// Product kernel `k_r^⊗d`.
    pub fn korobov_product(r: u32, dim: usize) -> Result<Self> {
        if r == 0 || r > MAX_KOROBOV_R {
            return Err(Error::UnsupportedDegree(2 * r));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("kernel dimension must be at least 1".into()));
        }
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        let korobov_scale = sign * int_pow(2.0 * PI, 2 * r) / factorial(2 * r);
        Ok(Self { kind: KernelKind::Korobov { r }, dim, korobov_scale })
    }

    pub fn gaussian(lengthscale: f64, dim: usize) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid lengthscale {lengthscale}")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("kernel dimension must be at least 1".into()));
        }
        Ok(Self { kind: KernelKind::Gaussian { lengthscale }, dim, korobov_scale: 0.0 })
    }

    pub fn constant(dim: usize) -> Self {
        Self { kind: KernelKind::Constant, dim: dim.max(1), korobov_scale: 0.0 }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Korobov { .. } => "korobov",
            KernelKind::Gaussian { .. } => "gaussian",
            KernelKind::Constant => "constant",
        }
    }

    fn checks_unit_cube(&self) -> bool {
        matches!(self.kind, KernelKind::Korobov { .. })
    }

    /// Validates dimension and (for Korobov) the `[0,1]` domain of a point set.
    pub fn check_points(&self, points: &PointSet) -> Result<()> {
        if points.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: points.dim() });
        }
        if self.checks_unit_cube() {
            points.check_unit_cube()?;
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if self.checks_unit_cube() {
            if let Some(&value) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Domain { value });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Kernel value without domain checks; callers validate points once up front.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Korobov { r } => {
                let coeffs = &bernoulli_table()[2 * r as usize];
                x.iter().zip(y).map(|(a, b)| 1.0 + self.korobov_scale * horner(coeffs, (a - b).abs())).product()
            }
            KernelKind::Gaussian { lengthscale } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelKind::Constant => 1.0,
        }
    }

    /// `sup_x k(x, x)`; the diagonal is constant for every supported kind.
    pub fn k_max(&self) -> f64 {
        match self.kind {
            KernelKind::Korobov { .. } => int_pow(1.0 + self.korobov_scale * self.bernoulli_at_zero(), self.dim as u32),
            KernelKind::Gaussian { .. } | KernelKind::Constant => 1.0,
        }
    }

    fn bernoulli_at_zero(&self) -> f64 {
        match self.kind {
            KernelKind::Korobov { r } => bernoulli_table()[2 * r as usize][0],
            _ => 0.0,
        }
    }

    /// The closed-form `h_mu(x, y) = ∫ k(x,t) k(t,y) dmu(t)`; `k_r^⊗d` maps to `k_2r^⊗d`.
    pub fn squared_kernel(&self) -> Result<Kernel> {
        match self.kind {
            KernelKind::Korobov { r } => Self::korobov_product(2 * r, self.dim),
            KernelKind::Constant => Ok(*self),
            KernelKind::Gaussian { .. } => Err(Error::NoAnalyticSquaredKernel(self.name())),
        }
    }

    /// `mu(k) = ∫ k(x,x) dmu(x)`, also the sum of all eigenvalues.
    pub fn trace(&self) -> Result<f64> {
        match self.kind {
            KernelKind::Korobov { r } => Ok(int_pow(1.0 + 2.0 * zeta_even(2 * r)?, self.dim as u32)),
            KernelKind::Constant => Ok(1.0),
            KernelKind::Gaussian { .. } => Err(Error::NoAnalyticSpectrum(self.name())),
        }
    }

    /// Eigenvalues of the integral operator in nonincreasing order.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let marginal = match self.kind {
            KernelKind::Korobov { r } => Marginal::Korobov { r },
            KernelKind::Constant => Marginal::Constant,
            KernelKind::Gaussian { .. } => return Err(Error::NoAnalyticSpectrum(self.name())),
        };
        Ok(Spectrum::new(marginal, self.dim, self.trace()?))
    }

    /// The `m` largest eigenvalues.
    pub fn spectrum_top(&self, m: usize) -> Result<Vec<f64>> {
        Ok(self.spectrum()?.take(m).collect())
    }

    /// `Σ_{i>s} σ_i`.
    pub fn spectral_tail(&self, s: usize) -> Result<f64> {
        let total = self.trace()?;
        if s == 0 {
            return Ok(total);
        }
        let tail = match self.kind {
            KernelKind::Korobov { r } if self.dim == 1 => {
                // after the constant eigenvalue, s - 1 more in pairs m^-2r
                let rest = s - 1;
                let full_pairs = rest / 2;
                let p = -2.0 * r as f64;
                let partial: f64 = (1..=full_pairs).map(|m| (m as f64).powf(p)).sum();
                let mut tail = 2.0 * (zeta_even(2 * r)? - partial);
                if rest % 2 == 1 {
                    tail -= ((full_pairs + 1) as f64).powf(p);
                }
                tail
            }
            _ => total - self.spectrum()?.take(s).sum::<f64>(),
        };
        Ok(tail.max(0.0))
    }

    /// `i`-th L²(mu)-orthonormal eigenfunction (0-based, matching [`Kernel::spectrum`]).
    /// Only available for one-dimensional Korobov kernels.
    pub fn eigenfunction(&self, i: usize, x: f64) -> Result<f64> {
        match self.kind {
            KernelKind::Korobov { .. } if self.dim == 1 => {
                if i == 0 {
                    return Ok(1.0);
                }
                let m = i.div_ceil(2) as f64;
                let arg = 2.0 * PI * m * x;
                Ok(std::f64::consts::SQRT_2 * if i % 2 == 1 { arg.cos() } else { arg.sin() })
            }
            _ => Err(Error::NoAnalyticSpectrum(self.name())),
        }
    }

    /// `∫ k(x, t) dmu(t)`.
    pub fn mean_embedding(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            KernelKind::Korobov { .. } | KernelKind::Constant => {
                self.check_point(x)?;
                Ok(1.0)
            }
            KernelKind::Gaussian { .. } => Err(Error::NoMeanEmbedding(self.name())),
        }
    }

    /// `∬ k(x, y) dmu(x) dmu(y)`.
    pub fn double_integral(&self) -> Result<f64> {
        match self.kind {
            KernelKind::Korobov { .. } | KernelKind::Constant => Ok(1.0),
            KernelKind::Gaussian { .. } => Err(Error::NoMeanEmbedding(self.name())),
        }
    }

    /// Closed-form upper bound on `E[mu(sqrt(k - k_s^Z))]` for an i.i.d. landmark
    /// sample of size `l`, valid for every integer `m >= 1`:
    ///
    /// ```text
    /// 2 sqrt(Σ_{i>s} σ_i) + 4 sqrt(Σ_{i>m} σ_i) + sqrt(k_max)/l · (80 m² ln(1 + 2l) / 9 + 69)
    /// ```
    pub fn bound_wce_iid(&self, l: usize, s: usize, m: usize) -> Result<f64> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidInput("bound needs l >= 1 and m >= 1".into()));
        }
        let l = l as f64;
        let mf = m as f64;
        let sample_term = self.k_max().sqrt() / l * (80.0 * mf * mf * (1.0 + 2.0 * l).ln() / 9.0 + 69.0);
        Ok(2.0 * self.spectral_tail(s)?.sqrt() + 4.0 * self.spectral_tail(m)?.sqrt() + sample_term)
    }
}

/// `x ↦ ∫ k(x,t) k(t,y) dmu` for any supported kernel, falling back to an error
/// for kernels without a closed form.
pub fn squared_kernel(kernel: &Kernel) -> Result<Kernel> {
    kernel.squared_kernel()
}

/// Gram matrix `k(X, Y)`, `|X| × |Y|`.
pub fn gram(kernel: &Kernel, xs: &PointSet, ys: &PointSet) -> Result<Mat<f64>> {
    kernel.check_points(xs)?;
    kernel.check_points(ys)?;
    Ok(gram_unchecked(kernel, xs, ys))
}

pub(crate) fn gram_unchecked(kernel: &Kernel, xs: &PointSet, ys: &PointSet) -> Mat<f64> {
    Mat::from_fn(xs.len(), ys.len(), |i, j| kernel.eval_unchecked(xs.point(i), ys.point(j)))
}

/// Symmetric Gram matrix `k(X, X)`: upper triangle computed, lower mirrored.
pub fn gram_symmetric(kernel: &Kernel, xs: &PointSet) -> Result<Mat<f64>> {
    kernel.check_points(xs)?;
    Ok(gram_symmetric_unchecked(kernel, xs))
}

pub(crate) fn gram_symmetric_unchecked(kernel: &Kernel, xs: &PointSet) -> Mat<f64> {
    let n = xs.len();
    let mut out = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = kernel.eval_unchecked(xs.point(i), xs.point(j));
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Marginal {
    Korobov { r: u32 },
    Constant,
}

impl Marginal {
    fn eigenvalue(self, j: usize) -> f64 {
        match self {
            Marginal::Korobov { r } => {
                if j == 0 {
                    1.0
                } else {
                    (j.div_ceil(2) as f64).powi(-2 * r as i32)
                }
            }
            Marginal::Constant => {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    index: Reverse<Vec<usize>>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| self.index.cmp(&other.index))
    }
}

/// Lazily enumerated eigenvalues `σ_1 >= σ_2 >= ...` of a product kernel.
///
/// Multi-indices over the one-dimensional spectra are explored best-first;
/// equal values come out in lexicographic multi-index order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    marginal: Marginal,
    heap: BinaryHeap<Candidate>,
    seen: HashSet<Vec<usize>>,
    total_trace: f64,
}

impl Spectrum {
    fn new(marginal: Marginal, dim: usize, total_trace: f64) -> Self {
        let start = vec![0; dim];
        let mut heap = BinaryHeap::new();
        let mut seen = HashSet::new();
        seen.insert(start.clone());
        heap.push(Candidate { value: 1.0, index: Reverse(start) });
        Self { marginal, heap, seen, total_trace }
    }

    pub fn total_trace(&self) -> f64 {
        self.total_trace
    }
}

impl Iterator for Spectrum {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let Candidate { value, index: Reverse(index) } = self.heap.pop()?;
        for axis in 0..index.len() {
            let mut next = index.clone();
            next[axis] += 1;
            if self.seen.insert(next.clone()) {
                let value = next.iter().map(|&j| self.marginal.eigenvalue(j)).product();
                self.heap.push(Candidate { value, index: Reverse(next) });
            }
        }
        Some(value)
    }
}
