//! Hermite expansions: coefficient maps indexed by multi-indices.
//!
//! `expansion_from_grid` computes every coefficient `<f, Hbar_J>` up to a
//! total degree by weighted sums over a support grid. On a tensor quadrature
//! grid of order Q the sum is exact whenever the integrand degree stays
//! within the rule's exactness window `2Q - 1`; the result is marked
//! approximate otherwise.

use super::grid::{GridFunction, GridSupport};
use super::multi_index::{enumerate_multi_indices, MultiIndex, Parity};
use super::poly::hbar_table;
use crate::util::CompensatedSum;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Coefficients of a function in the orthonormal Hermite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    dimension: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
    /// True when the coefficients came from a sum that is not certified
    /// exact for the integrands involved.
    approx: bool,
}

impl HermiteExpansion {
    pub fn new(dimension: usize) -> Self {
        HermiteExpansion {
            dimension,
            coeffs: BTreeMap::new(),
            approx: false,
        }
    }

    pub fn from_coeffs(dimension: usize, coeffs: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        for j in coeffs.keys() {
            if j.len() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "index {j} in an expansion over R^{dimension}"
                )));
            }
        }
        Ok(HermiteExpansion {
            dimension,
            coeffs,
            approx: false,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_approx(&self) -> bool {
        self.approx
    }

    pub fn set_approx(&mut self, approx: bool) {
        self.approx = approx;
    }

    /// Coefficient at `J` (zero when absent).
    pub fn coeff(&self, j: &MultiIndex) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, j: MultiIndex, value: f64) {
        assert_eq!(j.len(), self.dimension, "index dimension mismatch");
        if value == 0.0 {
            self.coeffs.remove(&j);
        } else {
            self.coeffs.insert(j, value);
        }
    }

    /// Iterate over stored (index, coefficient) pairs in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(j, &c)| (j, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest total degree carrying a nonzero coefficient, or None.
    pub fn max_degree(&self) -> Option<u32> {
        self.coeffs
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, _)| j.total_degree())
            .max()
    }

    /// Sum of squared coefficients (the squared L2 norm, by Parseval).
    pub fn squared_norm(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for c in self.coeffs.values() {
            acc.add(c * c);
        }
        acc.value()
    }

    /// Expansion keeping only indices selected by the predicate.
    pub fn filtered(&self, mut keep: impl FnMut(&MultiIndex, f64) -> bool) -> HermiteExpansion {
        HermiteExpansion {
            dimension: self.dimension,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(j, &c)| keep(j, c))
                .map(|(j, &c)| (j.clone(), c))
                .collect(),
            approx: self.approx,
        }
    }
}

/// Per-axis tables of `Hbar_j` values at every support point, up to `deg`.
///
/// `tables[a][j][s]` is `Hbar_j` of the `a`-th coordinate of point `s`.
pub fn axis_tables(support: &GridSupport, deg: u32) -> Vec<Vec<Vec<f64>>> {
    (0..support.k())
        .map(|a| hbar_table(deg, &support.axis_coords(a)))
        .collect()
}

/// All coefficients `<f, Hbar_J>` for total degree `|J| <= d`.
///
/// The result is marked approximate unless the support is a quadrature grid
/// whose exactness window covers `d` plus the tagged polynomial degree of
/// `f`.
pub fn expansion_from_grid(f: &GridFunction, d: u32) -> Result<HermiteExpansion> {
    let support = f.support();
    let k = support.k();
    let n = support.len();
    let tables = axis_tables(support, d);
    let w = support.weights();
    let vals = f.values();

    let mut coeffs = BTreeMap::new();
    for j in enumerate_multi_indices(k, d, Parity::All, true) {
        let mut acc = CompensatedSum::new();
        for s in 0..n {
            let mut basis = 1.0;
            for a in 0..k {
                basis *= tables[a][j.entries()[a] as usize][s];
            }
            acc.add(w[s] * vals[s] * basis);
        }
        let c = acc.value();
        if c != 0.0 {
            coeffs.insert(j, c);
        }
    }

    let exact = match (support.quadrature_order(), f.poly_degree()) {
        (Some(q), Some(pdeg)) => 2 * q - 1 >= d + pdeg,
        _ => false,
    };
    Ok(HermiteExpansion {
        dimension: k,
        coeffs,
        approx: !exact,
    })
}

/// Evaluate an expansion at every point of a support.
///
/// The result carries the expansion's max degree as its polynomial-degree
/// tag, so downstream projections can certify exactness.
pub fn synthesize_on_grid(e: &HermiteExpansion, support: &Arc<GridSupport>) -> Result<GridFunction> {
    if support.k() != e.dimension {
        return Err(Error::DimensionMismatch(format!(
            "expansion over R^{} on a support in R^{}",
            e.dimension,
            support.k()
        )));
    }
    let n = support.len();
    let deg = e.max_degree().unwrap_or(0);
    let tables = axis_tables(support, deg);
    let mut sums = vec![CompensatedSum::new(); n];
    for (j, c) in e.iter() {
        for (s, sum) in sums.iter_mut().enumerate() {
            let mut basis = 1.0;
            for a in 0..e.dimension {
                basis *= tables[a][j.entries()[a] as usize][s];
            }
            sum.add(c * basis);
        }
    }
    let values = sums.into_iter().map(|acc| acc.value()).collect();
    Ok(GridFunction::from_values(Arc::clone(support), values)?.with_poly_degree(deg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite_core::grid::{gauss_hermite_grid, lq_norm, DEFAULT_POINT_BUDGET};
    use crate::hermite_core::poly::hbar;
    use approx::assert_relative_eq;

    #[test]
    fn basis_function_reproduces_itself() {
        let g = gauss_hermite_grid(2, 6, DEFAULT_POINT_BUDGET).unwrap();
        let f = GridFunction::from_fn(Arc::clone(&g), |x| hbar(2, x[0]) * hbar(1, x[1]))
            .with_poly_degree(3);
        let e = expansion_from_grid(&f, 3).unwrap();
        assert!(!e.is_approx(), "2Q-1 = 11 covers degree 3 + 3");
        for (j, c) in e.iter() {
            let expected = if j.entries() == [2, 1] { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-12, "coeff at {j} = {c}");
        }
        assert_relative_eq!(e.coeff(&MultiIndex::new(vec![2, 1])), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn x_squared_decomposes_into_constant_plus_degree_two() {
        let g = gauss_hermite_grid(1, 5, DEFAULT_POINT_BUDGET).unwrap();
        let f = GridFunction::from_fn(Arc::clone(&g), |x| x[0] * x[0]).with_poly_degree(2);
        let e = expansion_from_grid(&f, 4).unwrap();
        assert!(!e.is_approx());
        // x^2 = 1 + h_2(x) and h_2 = sqrt(2) Hbar_2.
        assert_relative_eq!(e.coeff(&MultiIndex::new(vec![0])), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            e.coeff(&MultiIndex::new(vec![2])),
            std::f64::consts::SQRT_2,
            max_relative = 1e-12
        );
        assert!(e.coeff(&MultiIndex::new(vec![1])).abs() < 1e-13);
        assert!(e.coeff(&MultiIndex::new(vec![3])).abs() < 1e-13);
        assert!(e.coeff(&MultiIndex::new(vec![4])).abs() < 1e-12);
    }

    #[test]
    fn synthesis_round_trip_and_parseval() {
        let g = gauss_hermite_grid(2, 8, DEFAULT_POINT_BUDGET).unwrap();
        let mut e = HermiteExpansion::new(2);
        e.set_coeff(MultiIndex::new(vec![0, 0]), 0.3);
        e.set_coeff(MultiIndex::new(vec![1, 2]), -1.7);
        e.set_coeff(MultiIndex::new(vec![4, 0]), 0.9);
        let f = synthesize_on_grid(&e, &g).unwrap();
        assert_eq!(f.poly_degree(), Some(4));

        let back = expansion_from_grid(&f, 4).unwrap();
        assert!(!back.is_approx());
        for (j, c) in e.iter() {
            assert_relative_eq!(back.coeff(j), c, max_relative = 1e-11);
        }
        // Parseval: grid L2 norm squared equals coefficient sum of squares.
        let sq = e.squared_norm();
        assert_relative_eq!(sq, 0.3 * 0.3 + 1.7 * 1.7 + 0.9 * 0.9, max_relative = 1e-14);
        let l2 = lq_norm(&f, 2.0).unwrap();
        assert_relative_eq!(l2 * l2, sq, max_relative = 1e-10);
    }

    #[test]
    fn undersampled_expansion_is_marked_approx() {
        let g = gauss_hermite_grid(1, 3, DEFAULT_POINT_BUDGET).unwrap();
        let f = GridFunction::from_fn(Arc::clone(&g), |x| x[0].powi(4)).with_poly_degree(4);
        let e = expansion_from_grid(&f, 4).unwrap();
        assert!(e.is_approx(), "2Q-1 = 5 cannot certify degree 4 + 4");
        let sign = GridFunction::from_fn(Arc::clone(&g), |x| if x[0] >= 0.0 { 1.0 } else { -1.0 });
        let es = expansion_from_grid(&sign, 2).unwrap();
        assert!(es.is_approx(), "non-polynomial input is never certified");
    }

    #[test]
    fn filtered_keeps_predicate_matches() {
        let mut e = HermiteExpansion::new(1);
        e.set_coeff(MultiIndex::new(vec![0]), 1.0);
        e.set_coeff(MultiIndex::new(vec![2]), 2.0);
        e.set_coeff(MultiIndex::new(vec![5]), 3.0);
        let low = e.filtered(|j, _| j.total_degree() <= 2);
        assert_eq!(low.len(), 2);
        assert_eq!(low.max_degree(), Some(2));
    }
}
