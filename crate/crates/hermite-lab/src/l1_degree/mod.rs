//! L1 polynomial approximation and its dual, resilient-witness distance.
//!
//! On a weighted support the two central quantities are
//!
//! ```text
//! e*(f, d)     = min { sum_s w_s |f(x_s) - p(x_s)| : deg p <= d }
//! alpha*(f, d) = min { sum_s w_s |f(x_s) - g(x_s)| : |g| <= 1,
//!                      <w Hbar_J, g> = 0 for all |J| <= d }
//! ```
//!
//! the best weighted-L1 approximation by a polynomial of total degree at
//! most `d`, and the distance from `f` to the set of bounded functions
//! whose low-degree Hermite coefficients all vanish. For Boolean `f` the
//! two are tied by exact linear-programming duality:
//!
//! ```text
//! e*(f, d) + alpha*(f, d) = 1.
//! ```
//!
//! Indeed `e*` equals `max <w f, y>` over `|y| <= 1` with `y` orthogonal
//! to all low-degree basis rows, and for Boolean `f` the objective of any
//! feasible witness `g` is `sum w |f - g| = 1 - <w f, g>` over the same
//! feasible set. [`duality_check`] measures how far the two independently
//! solved programs are from closing that identity.
//!
//! Both programs are solved by the bounded-variable revised simplex in
//! this module, after rescaling by square-root weights so the design
//! entries stay of order one even on wide quadrature grids. Degree
//! searches, threshold sweeps, and AND-composition experiments build on
//! these primitives in [`sweeps`].

mod ops;
mod simplex;
mod sweeps;

pub use ops::{and_compose, best_l1_poly, best_resilient_distance, duality_check};
pub use sweeps::{
    and_composition_check, best_l1_distance, degree_sweep, ganzburg_thresholds, l1_approx_degree,
    CompositionReport, DegreeSearch, DegreeSweepRow, GanzburgReport,
};

use crate::hermite_core::{GridFunction, HermiteExpansion};

/// Terminal state of an LP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::IterationLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

/// Primal object recovered from an LP solve.
#[derive(Debug, Clone)]
pub enum LpPrimal {
    /// Best approximating polynomial, as a Hermite expansion.
    Polynomial(HermiteExpansion),
    /// Nearest low-degree-orthogonal bounded function, as grid values.
    Witness(GridFunction),
}

/// Result of one of the two L1 programs.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Degree cutoff the program was solved at.
    pub d: u32,
    /// Primal objective, recomputed pointwise from the returned object.
    pub objective: f64,
    pub primal: LpPrimal,
    pub status: SolverStatus,
    /// Distance between recomputed primal objective and the solver's own
    /// optimum, folded with the terminal reduced-cost residual; near zero
    /// certifies the solve.
    pub duality_gap: f64,
}

impl LpSolution {
    /// The polynomial primal, when this solution carries one.
    pub fn polynomial(&self) -> Option<&HermiteExpansion> {
        match &self.primal {
            LpPrimal::Polynomial(p) => Some(p),
            LpPrimal::Witness(_) => None,
        }
    }

    /// The witness primal, when this solution carries one.
    pub fn witness(&self) -> Option<&GridFunction> {
        match &self.primal {
            LpPrimal::Polynomial(_) => None,
            LpPrimal::Witness(g) => Some(g),
        }
    }
}
