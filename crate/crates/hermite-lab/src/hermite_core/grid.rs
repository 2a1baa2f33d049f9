//! Weighted support grids and functions represented by their values on one.
//!
//! A [`GridSupport`] is a shared immutable set of weighted points: either a
//! tensor Gauss-Hermite quadrature grid (weights are the products of axis
//! weights and sum to 1) or a seeded Monte Carlo sample from the Gaussian
//! (uniform weights 1/N). A [`GridFunction`] pairs one support with a value
//! per point; all inner products, norms, and spectral coefficients are
//! weighted sums over the support.

use super::quadrature::gauss_hermite_1d;
use crate::util::{csum, CompensatedSum};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Default cap on the number of tensor-grid points.
pub const DEFAULT_POINT_BUDGET: usize = 10_000_000;

/// How a support was produced; recorded for exactness certification and
/// reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Tensor Gauss-Hermite rule with the given per-axis order.
    Quadrature { order: u32 },
    /// Seeded i.i.d. Gaussian sample.
    MonteCarlo { seed: u64, samples: usize },
}

/// Immutable weighted point set in R^k.
#[derive(Debug)]
pub struct GridSupport {
    k: usize,
    /// Row-major N x k coordinates.
    points: Vec<f64>,
    /// Nonnegative weights summing to 1.
    weights: Vec<f64>,
    provenance: Provenance,
}

impl GridSupport {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Coordinates of point `s`.
    pub fn point(&self, s: usize) -> &[f64] {
        &self.points[s * self.k..(s + 1) * self.k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The `axis`-th coordinate of every point, in support order.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        assert!(axis < self.k, "axis out of range");
        (0..self.len()).map(|s| self.points[s * self.k + axis]).collect()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Quadrature order per axis, if this is a quadrature support.
    pub fn quadrature_order(&self) -> Option<u32> {
        match self.provenance {
            Provenance::Quadrature { order } => Some(order),
            Provenance::MonteCarlo { .. } => None,
        }
    }

    /// Tensor support over the product of two supports (used for AND
    /// composition). Weights multiply; provenance keeps the max axis order.
    pub fn tensor(a: &Arc<GridSupport>, b: &Arc<GridSupport>, budget: usize) -> Result<Arc<GridSupport>> {
        let n = a.len().checked_mul(b.len()).unwrap_or(usize::MAX);
        if n > budget {
            return Err(Error::BudgetExceeded(format!(
                "tensor support needs {n} points, budget is {budget}"
            )));
        }
        let (qa, qb) = (a.quadrature_order(), b.quadrature_order());
        let provenance = match (qa, qb) {
            (Some(x), Some(y)) => Provenance::Quadrature { order: x.max(y) },
            _ => {
                return Err(Error::invalid(
                    "support",
                    "tensor composition requires quadrature supports",
                ))
            }
        };
        let k = a.k + b.k;
        let mut points = Vec::with_capacity(n * k);
        let mut weights = Vec::with_capacity(n);
        for sa in 0..a.len() {
            for sb in 0..b.len() {
                points.extend_from_slice(a.point(sa));
                points.extend_from_slice(b.point(sb));
                weights.push(a.weights[sa] * b.weights[sb]);
            }
        }
        Ok(Arc::new(GridSupport {
            k,
            points,
            weights,
            provenance,
        }))
    }
}

/// Values of a function on a shared support.
#[derive(Debug, Clone)]
pub struct GridFunction {
    support: Arc<GridSupport>,
    values: Vec<f64>,
    /// Known polynomial degree of the represented function, when certified.
    poly_degree: Option<u32>,
}

impl GridFunction {
    /// Evaluate `f` at every support point.
    pub fn from_fn(support: Arc<GridSupport>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..support.len()).map(|s| f(support.point(s))).collect();
        GridFunction {
            support,
            values,
            poly_degree: None,
        }
    }

    /// Wrap precomputed values.
    pub fn from_values(support: Arc<GridSupport>, values: Vec<f64>) -> Result<Self> {
        if values.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a support of {} points",
                values.len(),
                support.len()
            )));
        }
        Ok(GridFunction {
            support,
            values,
            poly_degree: None,
        })
    }

    /// Tag the represented function as a polynomial of the given total
    /// degree, enabling exactness certification downstream.
    pub fn with_poly_degree(mut self, degree: u32) -> Self {
        self.poly_degree = Some(degree);
        self
    }

    pub fn support(&self) -> &Arc<GridSupport> {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.k()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        self.support.weights()
    }

    pub fn poly_degree(&self) -> Option<u32> {
        self.poly_degree
    }

    /// Pointwise map producing a new function on the same support.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> GridFunction {
        GridFunction {
            support: Arc::clone(&self.support),
            values: self.values.iter().map(|&v| f(v)).collect(),
            poly_degree: None,
        }
    }

    /// Pointwise combination of two functions on the same support.
    pub fn zip_with(&self, other: &GridFunction, mut f: impl FnMut(f64, f64) -> f64) -> Result<GridFunction> {
        ensure_shared_support(self, other)?;
        Ok(GridFunction {
            support: Arc::clone(&self.support),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            poly_degree: None,
        })
    }

    /// True when every value is -1 or +1 (exactly).
    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }
}

fn supports_identical(a: &GridSupport, b: &GridSupport) -> bool {
    a.k == b.k && a.points == b.points && a.weights == b.weights
}

/// Error unless the two functions share a support (same allocation or
/// identical content).
pub fn ensure_shared_support(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if Arc::ptr_eq(&f.support, &g.support) || supports_identical(&f.support, &g.support) {
        Ok(())
    } else {
        Err(Error::SupportMismatch(format!(
            "supports differ: {} points in R^{} vs {} points in R^{}",
            f.support.len(),
            f.support.k(),
            g.support.len(),
            g.support.k()
        )))
    }
}

/// Tensor Gauss-Hermite support in R^k with order Q per axis.
///
/// Refuses when `Q^k` exceeds the point budget, naming the requirement.
pub fn gauss_hermite_grid(k: usize, q: u32, budget: usize) -> Result<Arc<GridSupport>> {
    if k < 1 {
        return Err(Error::invalid("k", "dimension must be >= 1"));
    }
    let mut n: usize = 1;
    for _ in 0..k {
        n = match n.checked_mul(q as usize) {
            Some(v) if v <= budget => v,
            _ => {
                return Err(Error::BudgetExceeded(format!(
                    "tensor grid needs Q^k = {q}^{k} points, budget is {budget}"
                )))
            }
        };
    }
    let (ax, aw) = gauss_hermite_1d(q)?;
    let mut points = vec![0.0; n * k];
    let mut weights = vec![1.0; n];
    // Odometer over axis indices; last axis varies fastest.
    let mut digits = vec![0usize; k];
    for s in 0..n {
        for a in 0..k {
            points[s * k + a] = ax[digits[a]];
            weights[s] *= aw[digits[a]];
        }
        for a in (0..k).rev() {
            digits[a] += 1;
            if digits[a] < q as usize {
                break;
            }
            digits[a] = 0;
        }
    }
    Ok(Arc::new(GridSupport {
        k,
        points,
        weights,
        provenance: Provenance::Quadrature { order: q },
    }))
}

/// Seeded Monte Carlo support: `n` i.i.d. standard Gaussian points in R^k
/// with uniform weights.
pub fn monte_carlo_grid(k: usize, n: usize, seed: u64) -> Result<Arc<GridSupport>> {
    if k < 1 {
        return Err(Error::invalid("k", "dimension must be >= 1"));
    }
    if n < 1 {
        return Err(Error::invalid("n", "sample count must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n * k);
    for _ in 0..n * k {
        let v: f64 = StandardNormal.sample(&mut rng);
        points.push(v);
    }
    Ok(Arc::new(GridSupport {
        k,
        points,
        weights: vec![1.0 / n as f64; n],
        provenance: Provenance::MonteCarlo { seed, samples: n },
    }))
}

/// Weighted inner product `sum_s w_s f_s g_s` over a shared support.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    ensure_shared_support(f, g)?;
    let w = f.weights();
    Ok(csum(
        (0..f.len()).map(|s| w[s] * f.values[s] * g.values[s]),
    ))
}

/// Weighted Lq norm `(sum_s w_s |f_s|^q)^{1/q}`; `q = infinity` gives the
/// max of `|f_s|` over support points.
pub fn lq_norm(f: &GridFunction, q: f64) -> Result<f64> {
    if q == f64::INFINITY {
        return Ok(f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if !(q >= 1.0) {
        return Err(Error::invalid("q", format!("norm exponent {q} is below 1")));
    }
    let w = f.weights();
    let mut acc = CompensatedSum::new();
    for s in 0..f.len() {
        acc.add(w[s] * f.values[s].abs().powf(q));
    }
    Ok(acc.value().powf(1.0 / q))
}
