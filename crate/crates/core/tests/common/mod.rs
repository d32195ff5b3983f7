#![allow(dead_code)]

use faer::{Mat, MatRef};
use nystrom_quad::samplers::{generate, SamplerKind, SeededGenerator};
use nystrom_quad::{DiscreteMeasure, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn uniform_points(n: usize, d: usize, seed: u64, stream: u64) -> PointSet {
    generate(SamplerKind::IidUniform, n, d, SeededGenerator::new(seed, stream)).unwrap()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Checks the output of a recombination against its input: support size,
/// convexity, preserved feature means and a nonincreasing direction mean.
pub fn check_recombination(
    weights: &[f64],
    features: MatRef<'_, f64>,
    direction: &[f64],
    out: &DiscreteMeasure,
) -> Result<(), String> {
    let n = weights.len();
    let s = features.ncols();
    if out.indices.len() != out.weights.len() {
        return Err("index/weight length mismatch".into());
    }
    if out.indices.len() > s + 1 {
        return Err(format!("support {} exceeds s + 1 = {}", out.indices.len(), s + 1));
    }
    if out.indices.windows(2).any(|p| p[0] >= p[1]) || out.indices.iter().any(|&i| i >= n) {
        return Err("indices not strictly increasing within range".into());
    }
    if out.weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
        return Err("nonpositive output weight".into());
    }
    let mass: f64 = out.weights.iter().sum();
    if (mass - 1.0).abs() > 1e-12 {
        return Err(format!("output mass {mass}"));
    }
    for j in 0..s {
        let before: f64 = (0..n).map(|i| weights[i] * features[(i, j)]).sum();
        let after: f64 = out.indices.iter().zip(&out.weights).map(|(&i, &w)| w * features[(i, j)]).sum();
        let scale = (0..n).fold(0.0f64, |m, i| m.max(features[(i, j)].abs()));
        if (before - after).abs() > 1e-9 * (1.0 + scale) {
            return Err(format!("feature {j}: mean {before} became {after}"));
        }
    }
    let before: f64 = weights.iter().zip(direction).map(|(w, g)| w * g).sum();
    let after: f64 = out.indices.iter().zip(&out.weights).map(|(&i, &w)| w * direction[i]).sum();
    let gmax = direction.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if after > before + 1e-9 * (1.0 + gmax) {
        return Err(format!("direction mean increased from {before} to {after}"));
    }
    Ok(())
}

/// A random recombination instance with assorted feature structures.
pub struct Instance {
    pub weights: Vec<f64>,
    pub features: Mat<f64>,
    pub direction: Vec<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_s: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let s = rng.random_range(0..=max_s);
    let style = rng.random_range(0..5);
    let features = match style {
        // dense uniform
        0 => Mat::from_fn(n, s, |_, _| rng.random::<f64>() * 2.0 - 1.0),
        // wildly different column scales
        1 => {
            let scales: Vec<f64> = (0..s).map(|_| 10f64.powf(rng.random_range(-6.0..6.0))).collect();
            Mat::from_fn(n, s, |_, j| scales[j] * (rng.random::<f64>() - 0.5))
        }
        // low rank: columns are combinations of a few base columns
        2 => {
            let k = rng.random_range(1..=s.max(1));
            let base = Mat::from_fn(n, k, |_, _| rng.random::<f64>());
            let mix = Mat::from_fn(k, s, |_, _| rng.random::<f64>() - 0.5);
            &base * &mix
        }
        // repeated rows (duplicate points)
        3 => {
            let distinct = rng.random_range(1..=n);
            let rows = Mat::from_fn(distinct, s, |_, _| rng.random::<f64>());
            let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..distinct)).collect();
            Mat::from_fn(n, s, |i, j| rows[(pick[i], j)])
        }
        // smooth features of a scalar coordinate
        _ => {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            Mat::from_fn(n, s, |i, j| (std::f64::consts::PI * (j + 1) as f64 * x[i]).cos())
        }
    };
    let mut weights: Vec<f64> =
        (0..n).map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random::<f64>() }).collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let direction = match rng.random_range(0..3) {
        0 => vec![0.0; n],
        1 => (0..n).map(|_| rng.random::<f64>()).collect(),
        _ => (0..n).map(|_| (rng.random::<f64>() - 0.5) * 100.0).collect(),
    };
    Instance { weights, features, direction }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
