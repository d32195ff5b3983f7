//! Carathéodory-type recombination.
//!
//! Given a convex measure `Σ w_i δ_i` on `N` points, `s` test functions (the
//! columns of `F`) and one direction function `g`, [`recombine`] returns a convex
//! measure supported on at most `s + 1` of the points that has the same `F`
//! means and a `g` mean that is no larger.
//!
//! Points are processed through a window. For the window the matrix with a row
//! of ones stacked on top of `Fᵀ` has a null space; moving mass along a null
//! vector `c` leaves the total mass and every `F` mean unchanged, the step
//! `t* = min_{c_i > 0} w_i / c_i` zeroes at least one weight, and the sign of
//! `c` is chosen so that `Σ c_i g_i >= 0`, which makes the `g` mean
//! nonincreasing. With [`Window::Minimal`] the window holds `s + 2` points and one
//! null vector is used per factorisation; [`Window::Batched`] holds `2(s + 1)`
//! points and spends a whole null-space basis per factorisation, eliminating the
//! pivot from the remaining basis vectors after every step.
//!
//! Once every point has entered the window the remaining support is reduced
//! further with a rank-revealing null space, so features that are linearly
//! dependent on the support (a constant feature, say) end with fewer than
//! `s + 1` points.

use std::collections::VecDeque;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{null_space, null_space_svd};

/// Weights below this after an update are set to zero.
const SNAP: f64 = 1e-14;

/// Tolerance on `|Σ w - 1|` for accepted input measures.
const MASS_TOLERANCE: f64 = 1e-9;

/// Relative singular-value cutoff for the final rank-revealing phase.
const NULL_RTOL: f64 = 1e-12;

/// Convex measure over indices of a host point set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn uniform(n: usize) -> Self {
        Self { indices: (0..n).collect(), weights: vec![1.0 / n as f64; n] }
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= 0.0) && (self.total_mass() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// `s + 2` points, one null vector per factorisation.
    Minimal,
    /// `2(s + 1)` points, a full null-space basis per factorisation.
    #[default]
    Batched,
}

/// Result of a traced recombination.
#[derive(Debug, Clone)]
pub struct Recombination {
    pub measure: DiscreteMeasure,
    /// Number of elimination steps (each removes at least one point).
    pub eliminations: usize,
}

/// Reduces a convex measure to at most `s + 1` points; see the module docs.
///
/// `weights` has length `N`, `features` is `N × s` and `direction` has length `N`.
pub fn recombine(weights: &[f64], features: MatRef<'_, f64>, direction: &[f64]) -> Result<DiscreteMeasure> {
    Ok(recombine_traced(weights, features, direction, Window::default())?.measure)
}

pub fn recombine_with(
    weights: &[f64],
    features: MatRef<'_, f64>,
    direction: &[f64],
    window: Window,
) -> Result<DiscreteMeasure> {
    Ok(recombine_traced(weights, features, direction, window)?.measure)
}

fn validate(weights: &[f64], features: MatRef<'_, f64>, direction: &[f64]) -> Result<()> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::InvalidInput("recombination needs at least one point".into()));
    }
    if features.nrows() != n || direction.len() != n {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: {n} weights, {}x{} features, {} direction values",
            features.nrows(),
            features.ncols(),
            direction.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidInput(format!("weights must be finite and nonnegative, got {w}")));
    }
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite direction value".into()));
    }
    for j in 0..features.ncols() {
        for i in 0..n {
            if !features[(i, j)].is_finite() {
                return Err(Error::InvalidInput(format!("non-finite feature at ({i}, {j})")));
            }
        }
    }
    let mass: f64 = weights.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidInput(format!("weights sum to {mass}, expected 1")));
    }
    Ok(())
}

pub fn recombine_traced(
    weights: &[f64],
    features: MatRef<'_, f64>,
    direction: &[f64],
    window: Window,
) -> Result<Recombination> {
    validate(weights, features, direction)?;
    let s = features.ncols();
    let mut w = weights.to_vec();

    // column scaling leaves the null space unchanged and balances the QR
    let scale: Vec<f64> = (0..s)
        .map(|j| {
            let m = (0..features.nrows()).fold(0.0f64, |a, i| a.max(features[(i, j)].abs()));
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        })
        .collect();

    let mut pending: VecDeque<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut eliminations = 0;
    if pending.len() > s + 1 {
        let width = match window {
            Window::Minimal => s + 2,
            Window::Batched => 2 * (s + 1),
        };
        let mut active: Vec<usize> = Vec::with_capacity(width);
        loop {
            while active.len() < width {
                match pending.pop_front() {
                    Some(i) => active.push(i),
                    None => break,
                }
            }
            let final_phase = active.len() <= s + 1;
            let steps = eliminate_window(&mut w, &mut active, features, &scale, direction, final_phase)?;
            if steps == 0 {
                if final_phase {
                    break;
                }
                return Err(Error::NumericalConsistency("recombination window made no progress".into()));
            }
            eliminations += steps;
        }
    }

    let mut indices: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    indices.sort_unstable();
    let weights = if eliminations == 0 {
        indices.iter().map(|&i| w[i]).collect()
    } else {
        let mass: f64 = indices.iter().map(|&i| w[i]).sum();
        indices.iter().map(|&i| w[i] / mass).collect()
    };
    Ok(Recombination { measure: DiscreteMeasure { indices, weights }, eliminations })
}

/// Runs eliminations on one window until its null-space basis is used up or
/// the basis loses validity; returns the number of steps and compacts `active`.
fn eliminate_window(
    w: &mut [f64],
    active: &mut Vec<usize>,
    features: MatRef<'_, f64>,
    scale: &[f64],
    direction: &[f64],
    rank_revealing: bool,
) -> Result<usize> {
    let s = features.ncols();
    let m = active.len();
    let phi =
        Mat::from_fn(s + 1, m, |row, k| if row == 0 { 1.0 } else { features[(active[k], row - 1)] * scale[row - 1] });
    let basis = if rank_revealing { null_space_svd(phi.as_ref(), NULL_RTOL)? } else { null_space(phi.as_ref()) };
    let mut vectors: Vec<Vec<f64>> = (0..basis.ncols()).map(|c| (0..m).map(|k| basis[(k, c)]).collect()).collect();
    let mut alive = vec![true; m];
    let mut steps = 0;

    for current in 0..vectors.len() {
        let (head, tail) = vectors.split_at_mut(current + 1);
        let c = &mut head[current];
        let magnitude = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if magnitude < 1e-13 {
            continue;
        }
        let Some((sign, t, pivot)) = choose_step(w, active, &alive, c, direction) else {
            continue;
        };
        if sign < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        let mut zeroed = Vec::new();
        for k in 0..m {
            if !alive[k] || c[k] == 0.0 {
                continue;
            }
            let idx = active[k];
            w[idx] -= t * c[k];
            if k == pivot || w[idx] < SNAP {
                w[idx] = 0.0;
                zeroed.push(k);
            }
        }
        steps += 1;
        for &k in &zeroed {
            alive[k] = false;
        }
        if zeroed.len() > 1 {
            // the remaining vectors only vanish at the pivot; refactorise
            break;
        }
        for later in tail.iter_mut() {
            let factor = later[pivot] / c[pivot];
            if factor != 0.0 {
                for k in 0..m {
                    later[k] -= factor * c[k];
                }
            }
            later[pivot] = 0.0;
        }
        if !rank_revealing && alive.iter().filter(|&&a| a).count() <= s + 1 {
            break;
        }
    }

    let mut k = 0;
    active.retain(|_| {
        let keep = alive[k];
        k += 1;
        keep
    });
    Ok(steps)
}

/// Sign, step length and pivot window position for moving mass along `±c`.
fn choose_step(w: &[f64], active: &[usize], alive: &[bool], c: &[f64], direction: &[f64]) -> Option<(f64, f64, usize)> {
    let along = |sign: f64| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (k, &ck) in c.iter().enumerate() {
            let ck = sign * ck;
            if !alive[k] || ck <= 0.0 {
                continue;
            }
            let ratio = w[active[k]] / ck;
            best = match best {
                None => Some((ratio, k)),
                Some((t, p)) if ratio < t || (ratio == t && active[k] < active[p]) => Some((ratio, k)),
                keep => keep,
            };
        }
        best
    };
    let slope: f64 = c.iter().enumerate().filter(|(k, _)| alive[*k]).map(|(k, v)| v * direction[active[k]]).sum();
    let plus = along(1.0);
    let minus = along(-1.0);
    let pick = |sign: f64, step: Option<(f64, usize)>| step.map(|(t, p)| (sign, t, p));
    if slope > 0.0 {
        pick(1.0, plus)
    } else if slope < 0.0 {
        pick(-1.0, minus)
    } else {
        match (plus, minus) {
            (Some(a), Some(b)) if b.0 > a.0 => pick(-1.0, Some(b)),
            (Some(a), _) => pick(1.0, Some(a)),
            (None, b) => pick(-1.0, b),
        }
    }
}
