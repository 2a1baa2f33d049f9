//! Degree searches and threshold sweeps over the L1 programs.
//!
//! The driver facts: `e*(f, d)` is nonincreasing in `d` (more degrees can
//! only help), so smallest-degree questions bisect after an exponential
//! bracket; and for a function with definite parity on a sign-symmetric
//! grid the optimal approximant can be symmetrized, so only indices of
//! matching total-degree parity carry weight. The parity shortcut is an
//! acceleration of the value solver only; the full-index programs in
//! `ops` stay untouched, and a dedicated test pins the two routes to each
//! other.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ops::{and_compose, build_design, dual_value, t_form_value};
use super::SolverStatus;
use crate::error::Error;
use crate::hermite_core::{
    enumerate_multi_indices, gauss_hermite_grid, GridFunction, GridSupport, Parity,
    DEFAULT_POINT_BUDGET,
};
use crate::util::csum;
use crate::Result;

/// Comparison slack when testing `e* <= eps`, so that exactly attained
/// targets (a polynomial input with `eps = 0`) are recognized.
const EPS_SLACK: f64 = 1e-12;
/// Largest per-axis order a threshold sweep will escalate to.
const MAX_SWEEP_ORDER: u32 = 12_800;
/// Degree cap for the open-ended sign threshold search.
const MAX_SIGN_DEGREE: u32 = 1_150;

/// Outcome of a smallest-degree search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeSearch {
    /// Smallest degree whose best approximation meets the target.
    Found(u32),
    /// Every degree up to the cap leaves more than the target error.
    ExceedsDMax { d_max: u32 },
}

impl std::fmt::Display for DegreeSearch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DegreeSearch::Found(d) => write!(f, "{d}"),
            DegreeSearch::ExceedsDMax { d_max } => write!(f, "exceeds d_max ({d_max})"),
        }
    }
}

/// One row of a degree-sweep table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DegreeSweepRow {
    pub function_id: String,
    pub d: u32,
    pub e_star: f64,
    pub alpha_star: f64,
    pub duality_residual: f64,
    pub grid_q: u32,
    pub solver_status: SolverStatus,
}

/// Threshold table for the sign function with a fitted growth exponent.
#[derive(Debug, Clone)]
pub struct GanzburgReport {
    /// `(eps, smallest degree reaching error eps)`, in input order.
    pub thresholds: Vec<(f64, u32)>,
    /// Least-squares slope of `log d` against `log(1/eps)`.
    pub slope: f64,
    /// Change in the hardest threshold's optimum when its grid order is
    /// doubled; `None` when the order cap forbids the recheck.
    pub drift: Option<f64>,
    /// Whether the drift check ran and stayed within 1e-4.
    pub converged: bool,
}

/// AND-composition experiment: component degrees at `eps`, composed
/// degree at `c * eps` with `c` the smaller acceptance probability.
#[derive(Debug, Clone)]
pub struct CompositionReport {
    pub eps: f64,
    /// Smaller of the two components' probability of outputting +1.
    pub c_min: f64,
    pub degree_g1: DegreeSearch,
    pub degree_g2: DegreeSearch,
    pub degree_composed: DegreeSearch,
    /// True only when the measured triple contradicts the composition
    /// lower bound; censored searches never register a violation.
    pub violated: bool,
}

/// Mirror symmetry of grid values: `Some(0)` even, `Some(1)` odd, `None`
/// when undetermined. Requires a quadrature support, whose tensor order
/// reverses under coordinate negation.
fn detect_parity(f: &GridFunction) -> Option<u32> {
    let sup = f.support();
    sup.quadrature_order()?;
    let n = sup.len();
    for s in 0..n {
        let a = sup.point(s);
        let b = sup.point(n - 1 - s);
        if a.iter().zip(b).any(|(&x, &y)| x != -y) {
            return None;
        }
    }
    let v = f.values();
    if (0..n).all(|s| v[s] == v[n - 1 - s]) {
        Some(0)
    } else if (0..n).all(|s| v[s] == -v[n - 1 - s]) {
        Some(1)
    } else {
        None
    }
}

/// Value of the best-L1 program only, with the parity shortcut applied
/// when the function's symmetry certifies it.
pub fn best_l1_distance(f: &GridFunction, d: u32) -> Result<f64> {
    let k = f.support().k();
    let parity = detect_parity(f);
    let indices: Vec<_> = enumerate_multi_indices(k, d, Parity::All, true)
        .into_iter()
        .filter(|j| parity.map_or(true, |p| j.total_degree() % 2 == p))
        .collect();
    if indices.is_empty() {
        // An odd function against degree 0: the empty program's optimum
        // is the plain weighted L1 mass, matched by the best constant 0.
        return Ok(csum(
            f.values()
                .iter()
                .zip(f.support().weights())
                .map(|(&v, &w)| w * v.abs()),
        ));
    }
    let dz = build_design(f, indices)?;
    let dual = dual_value(&dz)?;
    if dual.status != SolverStatus::Optimal {
        return Err(Error::NoConvergence(format!(
            "distance solve at degree {d} stopped {}",
            dual.status
        )));
    }
    Ok(dual.value)
}

/// Exponential bracket plus bisection for the smallest rank `t` with
/// `eval(to_degree(t)) <= eps`; `None` when even the cap rank fails.
fn smallest_rank(
    eval: &mut dyn FnMut(u32) -> Result<f64>,
    to_degree: &dyn Fn(u32) -> u32,
    max_rank: u32,
    eps: f64,
) -> Result<Option<u32>> {
    if eval(to_degree(0))? <= eps + EPS_SLACK {
        return Ok(Some(0));
    }
    if max_rank == 0 {
        return Ok(None);
    }
    let mut lo = 0u32;
    let mut hi = 1u32.min(max_rank);
    loop {
        if eval(to_degree(hi))? <= eps + EPS_SLACK {
            break;
        }
        if hi == max_rank {
            return Ok(None);
        }
        lo = hi;
        hi = (hi * 2 + 1).min(max_rank);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(to_degree(mid))? <= eps + EPS_SLACK {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Rank-to-degree maps: with definite parity only one residue class can
/// be the smallest achieving degree (the other always matches its
/// predecessor's error), so the search walks that class.
fn degree_map(parity: Option<u32>, d_max: u32) -> (Box<dyn Fn(u32) -> u32>, u32) {
    match parity {
        // Odd functions: degrees 0, 1, 3, 5, ...
        Some(p) if p % 2 == 1 => (
            Box::new(|t| if t == 0 { 0 } else { 2 * t - 1 }),
            if d_max == 0 { 0 } else { d_max.div_ceil(2) },
        ),
        // Even functions: degrees 0, 2, 4, ...
        Some(_) => (Box::new(|t| 2 * t), d_max / 2),
        None => (Box::new(|t| t), d_max),
    }
}

/// Smallest degree whose best L1 approximation of `f` has error at most
/// `eps`, or the sentinel when the cap `d_max` is not enough.
pub fn l1_approx_degree(f: &GridFunction, eps: f64, d_max: u32) -> Result<DegreeSearch> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid("eps", "the error target must lie in [0, 1)"));
    }
    let parity = detect_parity(f);
    let (to_degree, max_rank) = degree_map(parity, d_max);
    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    let mut eval = |d: u32| -> Result<f64> {
        if let Some(&v) = memo.get(&d) {
            return Ok(v);
        }
        let v = best_l1_distance(f, d)?;
        memo.insert(d, v);
        Ok(v)
    };
    match smallest_rank(&mut eval, &*to_degree, max_rank, eps)? {
        Some(t) => Ok(DegreeSearch::Found(to_degree(t))),
        None => Ok(DegreeSearch::ExceedsDMax { d_max }),
    }
}

/// Per-degree grid for the sign threshold sweep: wide enough that the
/// the row count never outruns the support, and never below order 400.
fn sign_grid(d: u32) -> Result<Arc<GridSupport>> {
    let needed = (1.1 * (f64::from(d) + 1.0)).ceil() as u32;
    let q = needed.max(400).min(MAX_SWEEP_ORDER);
    gauss_hermite_grid(1, q + (q % 2), DEFAULT_POINT_BUDGET)
}

fn sign_on(support: &Arc<GridSupport>) -> GridFunction {
    GridFunction::from_fn(Arc::clone(support), |x| {
        if x[0] >= 0.0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Smallest degrees at which the sign function reaches each error target,
/// with the growth exponent fitted in log-log coordinates.
pub fn ganzburg_thresholds(eps_list: &[f64]) -> Result<GanzburgReport> {
    if eps_list.len() < 2 {
        return Err(Error::invalid(
            "eps_list",
            "fitting a slope needs at least two error targets",
        ));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::invalid("eps_list", "error targets must lie in (0, 1)"));
    }

    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    let mut eval = |d: u32| -> Result<f64> {
        if let Some(&v) = memo.get(&d) {
            return Ok(v);
        }
        let grid = sign_grid(d)?;
        let v = best_l1_distance(&sign_on(&grid), d)?;
        memo.insert(d, v);
        Ok(v)
    };

    // Sign is odd: walk degrees 0, 1, 3, 5, ...
    let (to_degree, max_rank) = degree_map(Some(1), MAX_SIGN_DEGREE);
    let mut thresholds = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        match smallest_rank(&mut eval, &*to_degree, max_rank, eps)? {
            Some(t) => thresholds.push((eps, to_degree(t))),
            None => {
                return Err(Error::NoConvergence(format!(
                    "no degree at or below {MAX_SIGN_DEGREE} reaches error {eps}"
                )))
            }
        }
    }

    let xs: Vec<f64> = thresholds.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = thresholds
        .iter()
        .map(|(_, d)| f64::from((*d).max(1)).ln())
        .collect();
    let xm = csum(xs.iter().copied()) / xs.len() as f64;
    let ym = csum(ys.iter().copied()) / ys.len() as f64;
    let sxx = csum(xs.iter().map(|x| (x - xm) * (x - xm)));
    let sxy = csum(xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)));
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };

    // Grid-resolution check at the hardest threshold: the optimum must be
    // stable under doubling the order, unless the cap forbids it.
    let (&(_, d_hard), _) = thresholds
        .iter()
        .map(|t| (t, t.1))
        .max_by_key(|&(_, d)| d)
        .expect("nonempty thresholds");
    let q_used = {
        let needed = (1.1 * (f64::from(d_hard) + 1.0)).ceil() as u32;
        let q = needed.max(400).min(MAX_SWEEP_ORDER);
        q + (q % 2)
    };
    let q_double = (2 * q_used).min(MAX_SWEEP_ORDER);
    let (drift, converged) = if q_double > q_used {
        let grid = gauss_hermite_grid(1, q_double, DEFAULT_POINT_BUDGET)?;
        let refined = best_l1_distance(&sign_on(&grid), d_hard)?;
        let base = memo[&d_hard];
        let drift = (refined - base).abs();
        (Some(drift), drift <= 1e-4)
    } else {
        (None, false)
    };

    Ok(GanzburgReport {
        thresholds,
        slope,
        drift,
        converged,
    })
}

/// Degree-sweep rows for a Boolean function on a quadrature support: both
/// L1 programs per degree plus their duality residual.
pub fn degree_sweep(f: &GridFunction, function_id: &str, ds: &[u32]) -> Result<Vec<DegreeSweepRow>> {
    if !f.is_boolean() {
        return Err(Error::invalid(
            "f",
            "degree sweeps need Boolean (+-1) values on the support",
        ));
    }
    let Some(grid_q) = f.support().quadrature_order() else {
        return Err(Error::invalid(
            "f",
            "degree sweeps need a quadrature support",
        ));
    };
    let k = f.support().k();
    let mut rows = Vec::with_capacity(ds.len());
    for &d in ds {
        let indices = enumerate_multi_indices(k, d, Parity::All, true);
        let dz = build_design(f, indices)?;
        let dual = dual_value(&dz)?;
        let (alpha, _, alpha_status, _) = t_form_value(&dz)?;
        let status = if dual.status == SolverStatus::Optimal {
            alpha_status
        } else {
            dual.status
        };
        rows.push(DegreeSweepRow {
            function_id: function_id.to_string(),
            d,
            e_star: dual.value,
            alpha_star: alpha,
            duality_residual: (dual.value + alpha - 1.0).abs(),
            grid_q,
            solver_status: status,
        });
    }
    Ok(rows)
}

/// Composition experiment: degrees of the components at `eps`, of their
/// AND at `c * eps`, and whether the triple contradicts the composition
/// lower bound (the AND should be at least as hard as its parts).
pub fn and_composition_check(
    g1: &GridFunction,
    g2: &GridFunction,
    eps: f64,
    d_max: u32,
) -> Result<CompositionReport> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::invalid("eps", "the error target must lie in (0, 1)"));
    }
    let accept_mass = |g: &GridFunction| {
        csum(
            g.values()
                .iter()
                .zip(g.support().weights())
                .map(|(&v, &w)| if v > 0.0 { w } else { 0.0 }),
        )
    };
    let degree_g1 = l1_approx_degree(g1, eps, d_max)?;
    let degree_g2 = l1_approx_degree(g2, eps, d_max)?;
    let c_min = accept_mass(g1).min(accept_mass(g2));
    let composed = and_compose(g1, g2)?;
    let degree_composed = l1_approx_degree(&composed, c_min * eps, d_max)?;

    // A censored composed search can never witness a violation; a found
    // composed degree below a component's (possibly censored) degree can.
    let floor = |s: DegreeSearch| match s {
        DegreeSearch::Found(d) => d,
        DegreeSearch::ExceedsDMax { d_max } => d_max + 1,
    };
    let violated = match degree_composed {
        DegreeSearch::ExceedsDMax { .. } => false,
        DegreeSearch::Found(dc) => dc < floor(degree_g1).max(floor(degree_g2)),
    };
    Ok(CompositionReport {
        eps,
        c_min,
        degree_g1,
        degree_g2,
        degree_composed,
        violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_analysis::CubeSpec;
    use approx::assert_relative_eq;

    fn sign_q(q: u32) -> GridFunction {
        sign_on(&gauss_hermite_grid(1, q, DEFAULT_POINT_BUDGET).unwrap())
    }

    fn interval_q(q: u32) -> GridFunction {
        let spec = CubeSpec::new(1).unwrap();
        let g = gauss_hermite_grid(1, q, DEFAULT_POINT_BUDGET).unwrap();
        spec.on_grid(&g).unwrap()
    }

    #[test]
    fn sign_distance_curve_matches_reference() {
        let f = sign_q(400);
        for (d, want) in [
            (1u32, 0.51984712473444694),
            (3, 0.39763094910289687),
            (12, 0.24127578966077531),
        ] {
            let e = best_l1_distance(&f, d).unwrap();
            assert_relative_eq!(e, want, max_relative = 3e-7);
        }
        // Even degrees add nothing for an odd function.
        let e11 = best_l1_distance(&f, 11).unwrap();
        let e12 = best_l1_distance(&f, 12).unwrap();
        assert_relative_eq!(e11, e12, max_relative = 1e-9);
    }

    #[test]
    fn interval_distance_curve_matches_reference() {
        let f = interval_q(400);
        for (d, want) in [
            (0u32, 0.94077492982734545),
            (2, 0.65240407365081565),
            (12, 0.29463429939614444),
        ] {
            let e = best_l1_distance(&f, d).unwrap();
            assert_relative_eq!(e, want, max_relative = 3e-7);
        }
    }

    #[test]
    fn parity_shortcut_matches_full_program() {
        // The accelerated value path against the untouched full-index
        // dual, on both parities.
        let f = sign_q(80);
        let fast = best_l1_distance(&f, 5).unwrap();
        let full = super::super::best_l1_poly(&f, 5).unwrap();
        assert_relative_eq!(fast, full.objective, max_relative = 1e-8);

        let spec = CubeSpec::new(2).unwrap();
        let g = gauss_hermite_grid(2, 24, DEFAULT_POINT_BUDGET).unwrap();
        let cube = spec.on_grid(&g).unwrap();
        let fast = best_l1_distance(&cube, 4).unwrap();
        let full = super::super::best_l1_poly(&cube, 4).unwrap();
        assert_relative_eq!(fast, full.objective, max_relative = 1e-8);
    }

    #[test]
    fn smallest_degree_examples() {
        let f = sign_q(400);
        assert_eq!(l1_approx_degree(&f, 0.52, 20).unwrap(), DegreeSearch::Found(1));
        assert_eq!(l1_approx_degree(&f, 0.40, 20).unwrap(), DegreeSearch::Found(3));
        assert_eq!(
            l1_approx_degree(&f, 0.20, 12).unwrap(),
            DegreeSearch::ExceedsDMax { d_max: 12 }
        );
    }

    #[test]
    fn near_trivial_target_needs_degree_one() {
        // Degree 0 leaves error exactly 1 on this balanced grid, so even
        // a 0.99 target forces the first odd degree.
        let f = sign_q(400);
        assert_eq!(l1_approx_degree(&f, 0.99, 12).unwrap(), DegreeSearch::Found(1));
    }

    #[test]
    fn found_degree_is_locally_minimal() {
        let f = sign_q(400);
        let DegreeSearch::Found(d) = l1_approx_degree(&f, 0.25, 12).unwrap() else {
            panic!("0.25 is reachable within degree 12");
        };
        assert!(best_l1_distance(&f, d).unwrap() <= 0.25 + 1e-12);
        assert!(d >= 1, "degree 0 leaves error 1");
        assert!(best_l1_distance(&f, d - 1).unwrap() > 0.25);
    }

    #[test]
    fn threshold_degree_is_monotone_in_eps() {
        let f = sign_q(400);
        let rank = |s: DegreeSearch| match s {
            DegreeSearch::Found(d) => u64::from(d),
            DegreeSearch::ExceedsDMax { .. } => u64::MAX,
        };
        let mut last = 0u64;
        for eps in [0.52, 0.45, 0.40, 0.30] {
            let here = rank(l1_approx_degree(&f, eps, 16).unwrap());
            assert!(here >= last, "degree dropped as eps tightened to {eps}");
            last = here;
        }
    }

    #[test]
    fn error_target_validation() {
        let f = sign_q(16);
        assert!(l1_approx_degree(&f, 1.0, 4).is_err());
        assert!(l1_approx_degree(&f, -0.1, 4).is_err());
        assert!(ganzburg_thresholds(&[0.5]).is_err());
        assert!(ganzburg_thresholds(&[0.5, 1.2]).is_err());
    }

    #[test]
    fn ganzburg_small_thresholds() {
        let report = ganzburg_thresholds(&[0.52, 0.40]).unwrap();
        assert_eq!(report.thresholds, vec![(0.52, 1), (0.40, 3)]);
        assert!(report.slope.is_finite() && report.slope > 0.0);
        let drift = report.drift.expect("doubling is far below the order cap");
        assert!(drift <= 1e-4, "order-doubling drift {drift}");
        assert!(report.converged);
    }

    #[test]
    fn sweep_rows_close_duality() {
        let f = sign_q(400);
        let rows = degree_sweep(&f, "sign", &[0, 1, 3]).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.grid_q, 400);
            assert_eq!(row.solver_status, SolverStatus::Optimal);
            assert!(row.duality_residual <= 1e-6, "residual {}", row.duality_residual);
        }
        assert_relative_eq!(rows[0].e_star, 1.0, max_relative = 1e-9);
        assert_relative_eq!(rows[1].alpha_star, 0.4801528767787101, max_relative = 3e-7);
        assert!(rows[1].e_star > rows[2].e_star);
        assert!(rows[1].alpha_star < rows[2].alpha_star);
    }

    #[test]
    fn composition_check_on_small_grids() {
        let g1 = sign_q(32);
        let g2 = interval_q(32);
        let report = and_composition_check(&g1, &g2, 0.45, 8).unwrap();
        assert!((report.c_min - 0.5).abs() <= 0.1);
        assert!(!report.violated);
        assert!(matches!(report.degree_g1, DegreeSearch::Found(_)));
    }
}
