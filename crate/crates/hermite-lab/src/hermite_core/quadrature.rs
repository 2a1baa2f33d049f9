//! Gaussian quadrature rules from Jacobi matrices.
//!
//! Nodes of an orthogonal-polynomial rule are the eigenvalues of the
//! symmetric tridiagonal Jacobi matrix of the three-term recurrence, and the
//! weight of node `i` is `mu_0 * v_{1,i}^2` where `v_{1,i}` is the first
//! component of the i-th normalized eigenvector and `mu_0` the total mass of
//! the weight function. Only that first row is needed, so the implicit-shift
//! QL iteration below rotates a single accumulator row instead of a full
//! eigenvector matrix, giving O(Q^2) work and memory O(Q). This stays
//! accurate and overflow-free into the tens of thousands of nodes, far past
//! the point where the classical Golub-Welsch formulation via factorials
//! breaks down.

use crate::{Error, Result};

/// Eigenvalues and first-row eigenvector components of a symmetric
/// tridiagonal matrix, sorted by ascending eigenvalue.
///
/// `diag` has length n; `off` has length n-1 (`off[i]` couples rows i, i+1).
/// Returns `(eigenvalues, first_row)` where `first_row[i]` is the first
/// component of the unit eigenvector for `eigenvalues[i]`.
pub fn tridiagonal_eigen_first_row(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1), "off-diagonal length");
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find the first negligible off-diagonal at or after l.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NoConvergence(format!(
                    "tridiagonal QL failed at block {l} after 50 sweeps"
                )));
            }
            // Wilkinson shift from the leading 2x2 of the active block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Rotate the first-row accumulator.
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eig: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let first: Vec<f64> = order.iter().map(|&i| z[i]).collect();
    Ok((eig, first))
}

/// Nodes and weights of the Q-point Gauss-Hermite rule for the probabilists'
/// weight `exp(-x^2/2)/sqrt(2 pi)`.
///
/// Weights sum to 1 and the rule integrates polynomials of degree `<= 2Q-1`
/// exactly. Output is symmetrized: nodes come in exact +/- pairs (with an
/// exact 0 for odd Q) and mirrored weights are identical.
pub fn gauss_hermite_1d(q: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if q == 0 {
        return Err(Error::invalid("Q", "quadrature order must be >= 1"));
    }
    if q == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    let n = q as usize;
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|j| (j as f64).sqrt()).collect();
    let (mut x, z) = tridiagonal_eigen_first_row(&diag, &off)?;
    let mut w: Vec<f64> = z.iter().map(|v| v * v).collect();
    // Enforce the +/- symmetry of the spectrum exactly, then renormalize.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (x[j] - x[i]);
        x[i] = -node;
        x[j] = node;
        let weight = 0.5 * (w[i] + w[j]);
        w[i] = weight;
        w[j] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let total: f64 = crate::util::csum(w.iter().copied());
    for v in &mut w {
        *v /= total;
    }
    Ok((x, w))
}

/// Nodes and weights of the n-point Gauss-Legendre rule on `[-1, 1]` with
/// weight 1 (weights sum to 2).
///
/// Same Jacobi-matrix route as the Hermite rule, with off-diagonal entries
/// `j / sqrt(4j^2 - 1)` and total mass `mu_0 = 2`.
pub fn gauss_legendre_1d(n: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("n", "quadrature order must be >= 1"));
    }
    if n == 1 {
        return Ok((vec![0.0], vec![2.0]));
    }
    let m = n as usize;
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m)
        .map(|j| {
            let jf = j as f64;
            jf / (4.0 * jf * jf - 1.0).sqrt()
        })
        .collect();
    let (mut x, z) = tridiagonal_eigen_first_row(&diag, &off)?;
    let mut w: Vec<f64> = z.iter().map(|v| 2.0 * v * v).collect();
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let node = 0.5 * (x[j] - x[i]);
        x[i] = -node;
        x[j] = node;
        let weight = 0.5 * (w[i] + w[j]);
        w[i] = weight;
        w[j] = weight;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::csum;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_rule_is_plus_minus_one() {
        let (x, w) = gauss_hermite_1d(2).unwrap();
        assert_relative_eq!(x[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-14);
        assert_relative_eq!(w[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(w[1], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn one_point_rule_is_origin() {
        let (x, w) = gauss_hermite_1d(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn seven_point_rule_matches_reference() {
        // Reference nodes/weights computed independently with a dense
        // symmetric tridiagonal eigensolver at double precision.
        let (x, w) = gauss_hermite_1d(7).unwrap();
        let x_ref = [
            -3.7504397177257389,
            -2.366759410734538,
            -1.1544053947399684,
            0.0,
            1.1544053947399684,
            2.366759410734538,
            3.7504397177257389,
        ];
        let w_ref = [
            0.00054826885597222038,
            0.030757123967586446,
            0.24012317860501264,
            0.45714285714285735,
            0.24012317860501264,
            0.030757123967586446,
            0.00054826885597222038,
        ];
        for i in 0..7 {
            assert_relative_eq!(x[i], x_ref[i], max_relative = 1e-12, epsilon = 1e-13);
            assert_relative_eq!(w[i], w_ref[i], max_relative = 1e-11);
        }
    }

    #[test]
    fn moments_are_exact_to_rule_degree() {
        // Gaussian moments: m_0 = 1, m_2 = 1, m_4 = 3, m_6 = 15, odd = 0.
        let (x, w) = gauss_hermite_1d(4).unwrap();
        let moment = |p: i32| csum(x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)));
        assert_relative_eq!(moment(0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(moment(2), 1.0, max_relative = 1e-13);
        assert_relative_eq!(moment(4), 3.0, max_relative = 1e-13);
        assert_relative_eq!(moment(6), 15.0, max_relative = 1e-12);
        assert!(moment(1).abs() < 1e-14);
        assert!(moment(3).abs() < 1e-14);
    }

    #[test]
    fn large_rule_stays_finite_and_normalized() {
        let (x, w) = gauss_hermite_1d(3200).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(w.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_relative_eq!(csum(w.iter().copied()), 1.0, max_relative = 1e-12);
        // Symmetry is exact by construction.
        for i in 0..x.len() / 2 {
            assert_eq!(x[i], -x[x.len() - 1 - i]);
            assert_eq!(w[i], w[x.len() - 1 - i]);
        }
        // Second moment of the rule is the Gaussian variance.
        let m2 = csum(x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi));
        assert_relative_eq!(m2, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn legendre_five_point_matches_reference() {
        let (x, w) = gauss_legendre_1d(5).unwrap();
        let x_ref = [
            -0.90617984593866296,
            -0.53846931010568277,
            0.0,
            0.53846931010568277,
            0.90617984593866296,
        ];
        let w_ref = [
            0.2369268850561887,
            0.47862867049936691,
            0.56888888888888867,
            0.47862867049936691,
            0.2369268850561887,
        ];
        for i in 0..5 {
            assert_relative_eq!(x[i], x_ref[i], max_relative = 1e-12, epsilon = 1e-13);
            assert_relative_eq!(w[i], w_ref[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_1d(6).unwrap();
        // int_{-1}^{1} x^10 dx = 2/11 needs n >= 6.
        let v = csum(x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(10)));
        assert_relative_eq!(v, 2.0 / 11.0, max_relative = 1e-12);
    }
}
