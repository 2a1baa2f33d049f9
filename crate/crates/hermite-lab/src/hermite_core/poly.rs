//! Univariate and multivariate Hermite polynomial evaluation.

use super::multi_index::MultiIndex;
use crate::util::ln_factorial;
use crate::{Error, Result};

/// Unnormalized probabilists' Hermite polynomial `h_j(x)` by the three-term
/// recurrence `h_{j+1} = x h_j - j h_{j-1}`.
///
/// Overflows f64 for large `j` at large `|x|`; spectral code paths use the
/// orthonormal [`hbar`] instead.
pub fn hermite_eval(j: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if j == 0 {
        return prev;
    }
    let mut cur = x;
    for t in 1..j {
        let next = x * cur - t as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `sqrt(j!)`, switching to log-space accumulation above j = 20 to avoid
/// overflow in intermediate factorials.
pub fn sqrt_factorial(j: u32) -> f64 {
    if j <= 20 {
        let mut acc = 1.0f64;
        for t in 2..=j as u64 {
            acc *= t as f64;
        }
        acc.sqrt()
    } else {
        (0.5 * ln_factorial(j)).exp()
    }
}

/// Orthonormal Hermite polynomial `Hbar_j(x) = h_j(x)/sqrt(j!)` by the
/// normalized recurrence.
pub fn hbar(j: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if j == 0 {
        return prev;
    }
    let mut cur = x;
    for t in 1..j {
        let tf = t as f64;
        let next = (x * cur - tf.sqrt() * prev) / (tf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Table of `Hbar_j(x_s)` for `j = 0..=deg_max` over a slice of abscissas.
///
/// Row `j` holds the values of `Hbar_j` at every point.
pub fn hbar_table(deg_max: u32, xs: &[f64]) -> Vec<Vec<f64>> {
    hbar_table_seeded(deg_max, xs, None)
}

/// Table of `seed_s * Hbar_j(x_s)` obtained by running the normalized
/// recurrence from a per-point seed row.
///
/// Seeding with `sqrt(w_s)` produces the uniformly bounded entries
/// `sqrt(w_s) Hbar_j(x_s)` that LP design matrices are built from: the raw
/// polynomial values grow like `exp(x^2/4)` at quadrature nodes far out in
/// the tail and overflow long before the weighted products do.
pub fn hbar_table_seeded(deg_max: u32, xs: &[f64], seeds: Option<&[f64]>) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut rows = Vec::with_capacity(deg_max as usize + 1);
    let row0 = match seeds {
        Some(s) => {
            assert_eq!(s.len(), n, "seed length");
            s.to_vec()
        }
        None => vec![1.0; n],
    };
    rows.push(row0);
    if deg_max == 0 {
        return rows;
    }
    let row1: Vec<f64> = (0..n).map(|s| xs[s] * rows[0][s]).collect();
    rows.push(row1);
    for j in 1..deg_max {
        let jf = j as f64;
        let (sj, sj1) = (jf.sqrt(), (jf + 1.0).sqrt());
        let row: Vec<f64> = (0..n)
            .map(|s| (xs[s] * rows[j as usize][s] - sj * rows[j as usize - 1][s]) / sj1)
            .collect();
        rows.push(row);
    }
    rows
}

/// Sign and log-magnitude of `h_j(x)`, stable for large `j` where the raw
/// value overflows.
///
/// Runs the unnormalized recurrence with renormalization whenever the
/// carried pair exceeds 1e100 in magnitude, accumulating the scale in log
/// space. Returns `(sign, ln|h_j(x)|)`; an exact zero reports sign 0 and
/// negative-infinite log.
pub fn hermite_eval_ln(j: u32, x: f64) -> (f64, f64) {
    let mut prev = 1.0f64;
    let mut cur = if j == 0 { 1.0 } else { x };
    let mut ln_scale = 0.0f64;
    const CAP: f64 = 1e100;
    for t in 1..j {
        let next = x * cur - t as f64 * prev;
        prev = cur;
        cur = next;
        if cur.abs() > CAP || prev.abs() > CAP {
            prev /= CAP;
            cur /= CAP;
            ln_scale += CAP.ln();
        }
    }
    if cur == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (cur.signum(), cur.abs().ln() + ln_scale)
    }
}

/// Multivariate orthonormal basis value `Hbar_J(x) = prod_i Hbar_{J_i}(x_i)`.
pub fn hermite_eval_normalized(j: &MultiIndex, x: &[f64]) -> Result<f64> {
    if j.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "multi-index has length {} but point has length {}",
            j.len(),
            x.len()
        )));
    }
    Ok(j
        .entries()
        .iter()
        .zip(x)
        .map(|(&ji, &xi)| hbar(ji, xi))
        .product())
}
