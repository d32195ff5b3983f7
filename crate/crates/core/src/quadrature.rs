//! Convex quadrature rules built by recombination, and their exact errors.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::lowrank::LowRankKernel;
use crate::points::PointSet;
use crate::recombination::recombine;

/// Negative quadratic forms down to this value are rounding noise and clamp to 0.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Where a rule came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub method: String,
    pub n: usize,
    pub s: usize,
    pub seed: Option<u64>,
}

/// `Q: f ↦ Σ w_i f(x_i)` with convex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: PointSet,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl Quadrature {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite quadrature weight".into()));
        }
        let n = points.len();
        Ok(Self { points, weights, provenance: Provenance { n, ..Provenance::default() } })
    }

    /// Equal weights `1/n` on every point.
    pub fn uniform(points: PointSet) -> Self {
        let n = points.len();
        let weights = vec![1.0 / n as f64; n];
        Self { points, weights, provenance: Provenance { n, ..Provenance::default() } }
    }

    pub fn with_provenance(mut self, method: impl Into<String>, s: usize, seed: Option<u64>) -> Self {
        self.provenance = Provenance { method: method.into(), n: self.len(), s, seed };
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= 0.0) && (self.weights.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (x, &w) in self.points.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Kernel quadrature from a rank-`s` approximation and an empirical sample:
/// reduces the uniform measure on `y` to at most `s + 1` points matching the
/// means of every test function. With `enforce_inequality` the mean of
/// `sqrt(k(x,x) - k_app(x,x))` does not increase; otherwise no direction is used.
pub fn kquad(lrk: &LowRankKernel, y: &PointSet, enforce_inequality: bool) -> Result<Quadrature> {
    if y.is_empty() {
        return Err(Error::InvalidInput("kquad needs at least one sample point".into()));
    }
    let features = lrk.feature_matrix(y)?;
    let s = lrk.rank();
    let direction: Vec<f64> = if enforce_inequality {
        (0..y.len())
            .map(|i| {
                let x = y.point(i);
                let app: f64 = (0..s).map(|j| features[(i, j)] * features[(i, j)]).sum();
                (lrk.kernel().eval_unchecked(x, x) - app).max(0.0).sqrt()
            })
            .collect()
    } else {
        vec![0.0; y.len()]
    };
    let weights = vec![1.0 / y.len() as f64; y.len()];
    let measure = recombine(&weights, features.as_ref(), &direction)?;
    let points = y.select(&measure.indices);
    Ok(Quadrature::new(points, measure.weights)?.with_provenance(lrk.kind().as_str(), s, None))
}

/// `mu_Y(sqrt(k - k_app))` for the uniform measure on `points`.
pub fn mean_sqrt_residual(lrk: &LowRankKernel, points: &PointSet) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let mut acc = CompensatedSum::default();
    for v in lrk.residual_diag_batch(points)? {
        acc.add(v.sqrt());
    }
    Ok(acc.value() / points.len() as f64)
}

fn clamp_form(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NumericalConsistency(format!("{what} is {value:e}, below -{CLAMP_TOLERANCE:e}")))
    }
}

/// `Σ_ij a_i a_j k(x_i, x_j)` over a symmetric Gram, compensated.
fn quadratic_form(kernel: &Kernel, points: &PointSet, a: &[f64]) -> CompensatedSum {
    let mut acc = CompensatedSum::default();
    for i in 0..points.len() {
        let xi = points.point(i);
        acc.add(a[i] * a[i] * kernel.eval_unchecked(xi, xi));
        for j in 0..i {
            acc.add(2.0 * a[i] * a[j] * kernel.eval_unchecked(xi, points.point(j)));
        }
    }
    acc
}

/// Squared worst-case integration error over the unit ball of the RKHS for the
/// uniform measure on the unit cube, `wᵀKw - 2 Σ w_i m(x_i) + ∬k`, clamped.
pub fn wce_sq_exact(q: &Quadrature, kernel: &Kernel) -> Result<f64> {
    let total = kernel.double_integral()?;
    kernel.check_points(&q.points)?;
    if q.points.len() != q.weights.len() {
        return Err(Error::DimensionMismatch { expected: q.points.len(), got: q.weights.len() });
    }
    let mut acc = quadratic_form(kernel, &q.points, &q.weights);
    for (x, &w) in q.points.iter().zip(&q.weights) {
        acc.add(-2.0 * w * kernel.mean_embedding(x)?);
    }
    acc.add(total);
    clamp_form(acc.value(), "squared worst-case error")
}

pub fn wce_exact(q: &Quadrature, kernel: &Kernel) -> Result<f64> {
    Ok(wce_sq_exact(q, kernel)?.sqrt())
}

fn compare_points(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

/// Maximum mean discrepancy between two discrete measures,
/// `sqrt((w1 - w2)ᵀ K (w1 - w2))` over the union of their supports.
///
/// Supports are merged and sorted lexicographically before the form is
/// evaluated, so the result is exactly symmetric and exactly zero for equal
/// measures.
pub fn mmd_discrete(q1: &Quadrature, q2: &Quadrature, kernel: &Kernel) -> Result<f64> {
    kernel.check_points(&q1.points)?;
    kernel.check_points(&q2.points)?;
    for q in [q1, q2] {
        if q.points.len() != q.weights.len() {
            return Err(Error::DimensionMismatch { expected: q.points.len(), got: q.weights.len() });
        }
    }
    // (point, weight in q1, weight in q2), weights summed per distinct point in sorted order
    let mut entries: Vec<(&[f64], f64, f64)> = q1
        .points
        .iter()
        .zip(&q1.weights)
        .map(|(x, &w)| (x, w, 0.0))
        .chain(q2.points.iter().zip(&q2.weights).map(|(x, &w)| (x, 0.0, w)))
        .collect();
    entries.sort_by(|a, b| compare_points(a.0, b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let mut support = PointSet::empty(kernel.dim());
    let mut left: Vec<f64> = Vec::new();
    let mut right: Vec<f64> = Vec::new();
    let mut last: Option<&[f64]> = None;
    for (x, a, b) in entries {
        if last.is_some_and(|p| compare_points(p, x) == Ordering::Equal) {
            *left.last_mut().unwrap() += a;
            *right.last_mut().unwrap() += b;
        } else {
            support.push(x)?;
            left.push(a);
            right.push(b);
            last = Some(x);
        }
    }
    let diff: Vec<f64> = left.iter().zip(&right).map(|(a, b)| a - b).collect();
    let value = quadratic_form(kernel, &support, &diff).value();
    Ok(clamp_form(value, "squared discrepancy")?.sqrt())
}

/// `mu(k) - ∬ k`, the variance constant of i.i.d. sampling.
pub fn c_k_mu(kernel: &Kernel) -> Result<f64> {
    Ok(kernel.trace()? - kernel.double_integral()?)
}
