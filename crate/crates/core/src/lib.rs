//! Sampling-based Nyström approximations of a kernel/measure pair and the
//! convex kernel quadrature rules built on top of them.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | Korobov (periodic Sobolev) kernels, their products, a Gaussian kernel, analytic spectra |
//! | [`linalg`] | symmetric eigendecomposition, pseudo-inverses, PSD square roots, null vectors |
//! | [`lowrank`] | the four low-rank kernels `k^Z`, `k_s^Z`, `k_{s,mu}^Z`, `k_{s,X}^Z` |
//! | [`recombination`] | Carathéodory-type measure reduction |
//! | [`quadrature`] | the KQuad pipeline and worst-case error / MMD evaluation |
//! | [`samplers`] | seeded point-set generators (i.i.d., grid, scrambled Halton, Beta(2,5)) |
//! | [`experiment`] | configuration-driven experiment harness with CSV output |
//!
//! Matrices are [`faer::Mat<f64>`]; point sets are [`PointSet`].

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod linalg;
pub mod lowrank;
pub mod points;
pub mod quadrature;
pub mod recombination;
pub mod samplers;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelKind};
pub use lowrank::{LowRankKernel, LowRankKind};
pub use recombination::DiscreteMeasure;

pub use points::PointSet;
pub use quadrature::Quadrature;

/// Relative eigenvalue cutoff shared by every rank decision in the crate.
pub const DEFAULT_RTOL: f64 = 1e-10;
