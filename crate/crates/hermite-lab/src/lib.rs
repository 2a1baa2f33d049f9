//! # hermite-lab
//!
//! A numerical laboratory for Hermite analysis under the standard Gaussian
//! measure on R^k. The crate provides, bottom up:
//!
//! * [`hermite_core`]: probabilists' Hermite polynomials, Gauss-Hermite
//!   quadrature grids, multi-index enumeration, and spectral projections.
//! * [`cube_analysis`]: the balanced cube indicator `Cube_k`, its threshold
//!   `theta_k`, exact interval/cube Hermite coefficients, and the low-degree
//!   spectral weight.
//! * [`resilience_engine`]: the iterative truncation construction of
//!   approximately resilient witnesses, with a per-iteration certificate
//!   trace.
//! * [`l1_degree`]: best L1 polynomial approximation and best resilient
//!   distance as linear programs over a quadrature grid, their duality for
//!   Boolean functions, epsilon-approximate degree search, sign-function
//!   degree scaling, and AND-composition checks.
//! * [`gns_noise`]: Gaussian noise sensitivity by closed form, semi-analytic
//!   quadrature, and seeded Monte Carlo.
//! * [`learner_harness`]: agnostic learning of embedded cube concepts by
//!   degree-d L1 polynomial regression plus threshold selection, with a
//!   simulated statistical-query oracle.
//! * [`cli`]: deterministic command-line studies emitting CSV/JSON artifacts.
//!
//! All inner products and norms are taken against the Gaussian density
//! `exp(-|x|^2/2) / (2 pi)^{k/2}`, discretized on tensor Gauss-Hermite grids
//! or seeded Monte Carlo samples. Every operation is deterministic for fixed
//! inputs and seeds.

pub mod cli;
pub mod cube_analysis;
pub mod error;
pub mod gns_noise;
pub mod hermite_core;
pub mod l1_degree;
pub mod learner_harness;
pub mod report;
pub mod resilience_engine;
pub mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
