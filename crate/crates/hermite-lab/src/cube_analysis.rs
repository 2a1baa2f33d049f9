//! The balanced solid cube in Gaussian space and its Hermite spectrum.
//!
//! `Cube_k(x) = sign(theta_k - max_i |x_i|)` is +1 on the axis-aligned cube
//! of side half-length `theta_k` and -1 outside. The threshold is fixed so
//! the function is balanced: `P[|Z| <= theta_k]^k = 1/2`, i.e. `theta_k` is
//! the median of `max_i |x_i|`. For k >= 2 it is sandwiched by the Mills
//! estimates `sqrt(2 ln k - ln(2 ln k)) <= theta_k <= sqrt(2 ln k)`.
//!
//! Writing `1_theta` for the 0/1 indicator of `[-theta, theta]`, the cube is
//! `2 prod_i 1_theta(x_i) - 1`, so its Hermite coefficient at `J != 0` is
//! `2 prod_i c_theta(J_i)` where `c_theta(j) = <1_theta, Hbar_j>`. The axis
//! coefficients have the closed form
//!
//! * `c_theta(0) = 2 Phi(theta) - 1`,
//! * `c_theta(j) = 0` for odd `j` (the indicator is even),
//! * `c_theta(j) = -(2/sqrt(j!)) h_{j-1}(theta) phi(theta)` for even `j >= 2`,
//!
//! by integrating the identity `(h_{j-1} phi)' = -h_j phi` over the
//! interval. The low-degree squared-coefficient mass
//! `gamma(k, d) = sum_{1 <= |J| <= d} coeff(J)^2` collapses to a k-fold
//! convolution of the per-axis vector `(c_theta(t)^2)_t`, which is how it is
//! computed here; for `d <= k/(2 e^2 ln k)` it is bounded by
//! `20 d (3 ln k)^d / k`, the quantitative sense in which the cube has
//! almost no low-degree spectral weight.

use crate::hermite_core::{hermite_eval_ln, GridFunction, GridSupport, MultiIndex};
use crate::util::csum;
use crate::{Error, Result};
use std::sync::Arc;

/// The balanced cube function: dimension plus its median threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSpec {
    k: usize,
    theta: f64,
}

impl CubeSpec {
    /// Build the spec for dimension `k`, solving for the balancing
    /// threshold to full precision.
    pub fn new(k: usize) -> Result<CubeSpec> {
        let theta = theta_k(k, 1e-12)?;
        Ok(CubeSpec { k, theta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Values of the cube function on a support grid.
    pub fn on_grid(&self, support: &Arc<GridSupport>) -> Result<GridFunction> {
        if support.k() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "cube over R^{} on a support in R^{}",
                self.k,
                support.k()
            )));
        }
        let spec = self.clone();
        Ok(GridFunction::from_fn(Arc::clone(support), move |x| {
            cube_eval_unchecked(&spec, x)
        }))
    }
}

/// Low-degree spectral mass of the cube, with the comparison bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub k: usize,
    pub d: u32,
    /// `sum_{1 <= |J| <= d}` of squared cube coefficients.
    pub gamma: f64,
    /// The comparison value `20 d (3 ln k)^d / k`.
    pub bound: f64,
    /// Number of even-support indices `1 <= |J| <= d` carrying the mass.
    pub term_count: u128,
}

/// The balancing threshold: the median of `max_i |x_i|`, solved by
/// bisection of `(2 Phi(theta) - 1)^k = 1/2` on `[0, 10 + sqrt(2 ln k)]`.
///
/// Bisection runs to machine width, so the residual is far below any
/// positive `tol`; the argument only validates the caller's request.
pub fn theta_k(k: usize, tol: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::invalid("k", "dimension must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    // Solve central_mass(theta) = (1/2)^{1/k}; both sides are monotone and
    // the target stays well inside (0,1) for every k.
    let target = (-std::f64::consts::LN_2 / k as f64).exp();
    let mut lo = 0.0f64;
    let mut hi = 10.0 + (2.0 * (k as f64).ln().max(0.0)).sqrt();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid.clamp(lo, hi));
        }
        if central_mass(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `P[|Z| <= theta] = 2 Phi(theta) - 1` for a standard Gaussian.
fn central_mass(theta: f64) -> f64 {
    libm::erf(theta / std::f64::consts::SQRT_2)
}

/// Mills sandwich `(sqrt(2 ln k - ln(2 ln k)), sqrt(2 ln k))` around
/// `theta_k`, valid for k >= 8; defined (and returned) for k >= 2.
pub fn mills_bounds(k: usize) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::invalid("k", "Mills bounds need k >= 2"));
    }
    let two_ln_k = 2.0 * (k as f64).ln();
    Ok(((two_ln_k - two_ln_k.ln()).sqrt(), two_ln_k.sqrt()))
}

/// Hermite coefficient `<1_theta, Hbar_j>` of the 0/1 indicator of
/// `[-theta, theta]`.
pub fn interval_coeff(theta: f64, j: u32) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta", "interval half-length must be positive"));
    }
    if j == 0 {
        return Ok(central_mass(theta));
    }
    if j % 2 == 1 {
        return Ok(0.0);
    }
    // -(2/sqrt(j!)) h_{j-1}(theta) phi(theta), assembled in log space so the
    // factorial and the polynomial value cancel before exponentiation.
    let (sign, ln_h) = hermite_eval_ln(j - 1, theta);
    if sign == 0.0 {
        return Ok(0.0);
    }
    let ln_phi = -0.5 * theta * theta - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let ln_mag = std::f64::consts::LN_2 + ln_h + ln_phi - 0.5 * crate::util::ln_factorial(j);
    Ok(-sign * ln_mag.exp())
}

/// Upper bound `(1 + theta sqrt(e/j))^{2(j-1)} e^{-theta^2}` on the squared
/// interval coefficient, for even j >= 2.
pub fn interval_coeff_bound(theta: f64, j: u32) -> Result<f64> {
    if j < 2 || j % 2 == 1 {
        return Err(Error::invalid("j", "the coefficient bound needs even j >= 2"));
    }
    let base = 1.0 + theta * (std::f64::consts::E / j as f64).sqrt();
    Ok((2.0 * (j as f64 - 1.0) * base.ln() - theta * theta).exp())
}

/// Hermite coefficient of the cube at `J`: 0 at the origin index, else
/// `2 prod_i c_theta(J_i)`.
pub fn cube_coeff(spec: &CubeSpec, j: &MultiIndex) -> Result<f64> {
    if j.len() != spec.k {
        return Err(Error::DimensionMismatch(format!(
            "index {} for a cube over R^{}",
            j,
            spec.k
        )));
    }
    if j.is_zero() {
        return Ok(0.0);
    }
    let mut prod = 2.0;
    for &ji in j.entries() {
        if ji % 2 == 1 {
            return Ok(0.0);
        }
        prod *= interval_coeff(spec.theta, ji)?;
    }
    Ok(prod)
}

/// Low-degree squared-coefficient mass `gamma(k, d)` by exact dynamic
/// programming: the per-axis vector of squared even-degree coefficients is
/// convolved k times, truncated to total degree d, and the degree >= 1 part
/// is scaled by 4 for the leading factor 2 in each cube coefficient.
pub fn cube_low_degree_weight(spec: &CubeSpec, d: u32) -> Result<WeightReport> {
    let dd = d as usize;
    let mut axis = vec![0.0f64; dd + 1];
    let mut axis_count = vec![0u128; dd + 1];
    for t in (0..=dd).step_by(2) {
        let c = interval_coeff(spec.theta, t as u32)?;
        axis[t] = c * c;
        axis_count[t] = 1;
    }
    let mut acc = vec![0.0f64; dd + 1];
    let mut acc_count = vec![0u128; dd + 1];
    acc[0] = 1.0;
    acc_count[0] = 1;
    for _ in 0..spec.k {
        acc = convolve_truncated(&acc, &axis, dd);
        acc_count = convolve_counts(&acc_count, &axis_count, dd);
    }
    let gamma = 4.0 * csum(acc.iter().skip(1).copied());
    let term_count = acc_count.iter().skip(1).sum();
    let kf = spec.k as f64;
    let bound = 20.0 * d as f64 * (3.0 * kf.ln()).powi(d as i32) / kf;
    Ok(WeightReport {
        k: spec.k,
        d,
        gamma,
        bound,
        term_count,
    })
}

fn convolve_truncated(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; d + 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (t, &bt) in b.iter().enumerate().take(d + 1 - i) {
            out[i + t] += ai * bt;
        }
    }
    out
}

fn convolve_counts(a: &[u128], b: &[u128], d: usize) -> Vec<u128> {
    let mut out = vec![0u128; d + 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (t, &bt) in b.iter().enumerate().take(d + 1 - i) {
            out[i + t] += ai * bt;
        }
    }
    out
}

/// `Cube_k(x)`: +1 iff every coordinate lies in the closed interval
/// `[-theta_k, theta_k]`.
pub fn cube_eval(spec: &CubeSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.k {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} for a cube over R^{}",
            x.len(),
            spec.k
        )));
    }
    Ok(cube_eval_unchecked(spec, x))
}

fn cube_eval_unchecked(spec: &CubeSpec, x: &[f64]) -> f64 {
    if x.iter().all(|v| v.abs() <= spec.theta) {
        1.0
    } else {
        -1.0
    }
}
