//! Shared numeric utilities: compensated summation, the standard normal
//! distribution, log-factorials, and small dense linear solves.
//!
//! The linear algebra here is deliberately minimal. The systems solved are
//! dense, square or wide, and at most a thousand rows, arising from LP basis
//! recovery and least-norm tie-breaking; a partial-pivot LU and a Householder
//! QR cover everything without pulling in a matrix library.

/// Neumaier-compensated sum of a sequence of f64 terms.
///
/// Insensitive to summation order at the stated tolerances of this crate,
/// which is what makes grid reductions reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of terms.
pub fn csum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Standard normal density `phi(x) = exp(-x^2/2)/sqrt(2 pi)`.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via the error function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `2 Phi(x) - 1 = erf(x / sqrt 2)`, the Gaussian mass of `[-x, x]`.
#[inline]
pub fn central_mass(x: f64) -> f64 {
    libm::erf(x / std::f64::consts::SQRT_2)
}

/// `ln(j!)` by direct accumulation; exact for small j, accurate elsewhere.
pub fn ln_factorial(j: u32) -> f64 {
    (2..=j as u64).map(|v| (v as f64).ln()).sum()
}

/// Binomial coefficient C(n, k) in u128, for enumeration count checks.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Solve the square system `A x = b` by partial-pivot LU, in place.
///
/// `a` is row-major n x n and is consumed. Returns `None` when the matrix is
/// singular to working precision.
pub fn solve_lu(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix shape");
    for col in 0..n {
        let (mut pivot_row, mut pivot_abs) = (col, a[col * n + col].abs());
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > pivot_abs {
                pivot_row = row;
                pivot_abs = v;
            }
        }
        if pivot_abs < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for j in col + 1..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for j in col + 1..n {
            v -= a[col * n + j] * b[j];
        }
        b[col] = v / a[col * n + col];
    }
    Some(b)
}

/// Minimum-norm solution of the underdetermined system `A x = b` where `A` is
/// row-major m x n with m <= n and full row rank.
///
/// Computed as `x = A^T (A A^T)^{-1} b`, adequate for the well-conditioned
/// active-set systems this crate produces. Returns `None` if `A A^T` is
/// singular to working precision.
pub fn solve_least_norm(a: &[f64], m: usize, n: usize, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), m * n, "matrix shape");
    assert_eq!(b.len(), m, "rhs length");
    if m == 0 {
        return Some(vec![0.0; n]);
    }
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = csum((0..n).map(|t| a[i * n + t] * a[j * n + t]));
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
    }
    let y = solve_lu(gram, b.to_vec())?;
    let mut x = vec![0.0; n];
    for i in 0..m {
        let yi = y[i];
        if yi == 0.0 {
            continue;
        }
        for t in 0..n {
            x[t] += yi * a[i * n + t];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_recovers_cancelled_mass() {
        // 1 + 1e16 - 1e16 collapses to 0 under naive left-to-right addition.
        let naive: f64 = [1.0, 1e16, -1e16].iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(csum([1.0, 1e16, -1e16]), 1.0);
    }

    #[test]
    fn normal_cdf_matches_known_points() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(normal_cdf(1.0), 0.8413447460685429, max_relative = 1e-14);
        assert_relative_eq!(central_mass(1.0), 0.6826894921370859, max_relative = 1e-14);
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert_relative_eq!(ln_factorial(5), (120.0f64).ln(), max_relative = 1e-15);
        assert_relative_eq!(ln_factorial(20), (2.43290200817664e18f64).ln(), max_relative = 1e-14);
    }

    #[test]
    fn binomial_known_values() {
        assert_eq!(binomial_u128(4, 2), 6);
        assert_eq!(binomial_u128(8, 6), 28);
        assert_eq!(binomial_u128(60, 30), 118264581564861424);
    }

    #[test]
    fn lu_solves_small_system() {
        // [[2,1],[1,3]] x = [5,10] has solution x = [1,3].
        let x = solve_lu(vec![2.0, 1.0, 1.0, 3.0], vec![5.0, 10.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        assert!(solve_lu(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn least_norm_picks_shortest_solution() {
        // x + y = 2 has least-norm solution (1, 1).
        let x = solve_least_norm(&[1.0, 1.0], 1, 2, &[2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn least_norm_empty_constraints_is_zero() {
        let x = solve_least_norm(&[], 0, 3, &[]).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn lu_inverts_random_well_conditioned(seed in 0u64..200) {
            // Build A = I*4 + small random perturbation, solve, check residual.
            let n = 5usize;
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = if i == j { 4.0 } else { 0.0 } + next();
                }
            }
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let x = solve_lu(a.clone(), b.clone()).unwrap();
            for i in 0..n {
                let r: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>() - b[i];
                prop_assert!(r.abs() < 1e-9, "residual {} at row {}", r, i);
            }
        }
    }
}
