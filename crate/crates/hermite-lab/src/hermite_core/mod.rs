//! Hermite polynomial substrate: evaluation, quadrature, grids, multi-index
//! enumeration, and spectral projections under the Gaussian measure.
//!
//! # Conventions
//!
//! Everything is phrased for the *probabilists'* Hermite polynomials
//!
//! ```text
//! h_0(x) = 1,  h_1(x) = x,  h_{j+1}(x) = x h_j(x) - j h_{j-1}(x),
//! ```
//!
//! which are orthogonal under `d gamma = exp(-x^2/2)/sqrt(2 pi) dx` with
//! `<h_i, h_j> = delta_ij * j!`. The *orthonormal* family used for all
//! spectral coefficients is `Hbar_j = h_j / sqrt(j!)`, satisfying the stable
//! recurrence
//!
//! ```text
//! Hbar_{j+1}(x) = (x Hbar_j(x) - sqrt(j) Hbar_{j-1}(x)) / sqrt(j+1),
//! ```
//!
//! which avoids factorial overflow entirely. Multivariate basis functions are
//! tensor products indexed by a [`MultiIndex`] `J`, with
//! `Hbar_J(x) = prod_i Hbar_{J_i}(x_i)`.
//!
//! Quadrature nodes and weights come from the symmetric tridiagonal Jacobi
//! matrix of the recurrence (diagonal 0, off-diagonal `sqrt(j)`): nodes are
//! its eigenvalues and weights the squared first components of the
//! eigenvectors. A rule of order `Q` integrates polynomials of degree up to
//! `2Q - 1` exactly against the Gaussian weight.

pub mod expansion;
pub mod grid;
pub mod multi_index;
pub mod poly;
pub mod quadrature;

pub use expansion::{expansion_from_grid, synthesize_on_grid, HermiteExpansion};
pub use grid::{
    gauss_hermite_grid, inner_product, lq_norm, monte_carlo_grid, GridFunction, GridSupport,
    Provenance, DEFAULT_POINT_BUDGET,
};
pub use multi_index::{enumerate_multi_indices, MultiIndex, Parity};
pub use poly::{
    hbar, hbar_table, hbar_table_seeded, hermite_eval, hermite_eval_ln, hermite_eval_normalized,
    sqrt_factorial,
};
pub use quadrature::{gauss_hermite_1d, gauss_legendre_1d};
