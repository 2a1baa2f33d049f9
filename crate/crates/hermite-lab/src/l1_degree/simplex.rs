//! Self-contained bounded-variable two-phase revised simplex.
//!
//! Solves `maximize c.x subject to A x = b, l <= x <= u` with an explicit
//! basis inverse, suited to the shapes produced by this crate: a few
//! hundred equality rows against up to a few tens of thousands of boxed
//! columns. Dantzig pricing with a Bland's-rule fallback after a run of
//! degenerate pivots keeps the method finite; periodic refactorization of
//! the inverse keeps it accurate. Everything is deterministic: fixed scan
//! order, fixed tolerances, no randomness.

/// Primal feasibility tolerance.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost (dual feasibility) tolerance.
const COST_TOL: f64 = 1e-9;
/// A ratio-test step below this counts as a degenerate pivot.
const DEGEN_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_TRIGGER: usize = 40;
/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 120;
/// Harris ratio-test relaxation: how far a blocking bound may be
/// overshot, in variable units, to buy a larger pivot element.
const HARRIS_DELTA: f64 = 1e-9;
/// Pivot elements below this are taken only when no improving column
/// offers better, and force an immediate refactorization.
const PIVOT_GOOD: f64 = 1e-5;

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    /// An unblocked improving ray; impossible for well-posed inputs here,
    /// surfaced so callers can report a hard error.
    Unbounded,
}

/// An equality-constrained boxed LP in column-major dense form.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub m: usize,
    pub n: usize,
    /// Column-major: entry (i, j) at `cols[j * m + i]`.
    pub cols: Vec<f64>,
    pub b: Vec<f64>,
    /// Objective to maximize.
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Solution report.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: SimplexStatus,
    /// `c.x` at the returned point.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row multipliers at termination; exercised by the duality tests.
    #[allow(dead_code)]
    pub duals: Vec<f64>,
    /// Largest eligible reduced cost at stop; ~0 certifies optimality.
    pub residual: f64,
    #[allow(dead_code)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Lower,
    Upper,
    Basic,
}

struct Tableau {
    m: usize,
    /// Structural columns followed by m artificial unit columns.
    n_total: usize,
    cols: Vec<f64>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    /// Variable occupying each basis row.
    basis: Vec<usize>,
    /// Row position of each basic variable, or usize::MAX.
    in_basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn bound_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Lower => self.lower[j],
            VarState::Upper => self.upper[j],
            VarState::Basic => self.xb[self.in_basis[j]],
        }
    }

    /// `binv * col(j)`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let a = self.col(j);
        let mut w = vec![0.0; m];
        for (i, wi) in w.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for t in 0..m {
                acc += row[t] * a[t];
            }
            *wi = acc;
        }
        w
    }

    /// Row multipliers `y = c_B . binv` for the given full cost vector.
    fn btran(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for t in 0..m {
                    y[t] += cb * row[t];
                }
            }
        }
        y
    }

    /// Rebuild the inverse and basic values from the basis definition.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        // Gauss-Jordan inversion of the basis matrix with partial pivoting.
        let mut aug = vec![0.0; m * 2 * m];
        for (i, row) in aug.chunks_mut(2 * m).enumerate() {
            for (pos, &bj) in self.basis.iter().enumerate() {
                row[pos] = self.col(bj)[i];
            }
            row[m + i] = 1.0;
        }
        for col in 0..m {
            let mut p = col;
            let mut best = aug[col * 2 * m + col].abs();
            for r in col + 1..m {
                let v = aug[r * 2 * m + col].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-13 {
                return false;
            }
            if p != col {
                for t in 0..2 * m {
                    aug.swap(col * 2 * m + t, p * 2 * m + t);
                }
            }
            let piv = aug[col * 2 * m + col];
            for t in 0..2 * m {
                aug[col * 2 * m + t] /= piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let factor = aug[r * 2 * m + col];
                if factor != 0.0 {
                    for t in 0..2 * m {
                        aug[r * 2 * m + t] -= factor * aug[col * 2 * m + t];
                    }
                }
            }
        }
        for i in 0..m {
            for t in 0..m {
                self.binv[i * m + t] = aug[i * 2 * m + m + t];
            }
        }
        self.recompute_xb();
        self.pivots_since_refactor = 0;
        true
    }

    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.n_total {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.bound_value(j);
            if v != 0.0 {
                let a = &self.cols[j * m..(j + 1) * m];
                for i in 0..m {
                    rhs[i] -= a[i] * v;
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for t in 0..m {
                acc += row[t] * rhs[t];
            }
            self.xb[i] = acc;
        }
    }
}

/// Solve `maximize c.x, A x = b, l <= x <= u`.
pub fn solve_bounded(p: &LpProblem, max_iter: usize) -> LpOutcome {
    assert!(p.m >= 1, "at least one constraint row");
    assert_eq!(p.cols.len(), p.m * p.n);
    let m = p.m;
    let n_total = p.n + m;

    // Nonbasic structurals start at the finite bound closer to zero.
    let mut state = vec![VarState::Lower; n_total];
    let mut lower = Vec::with_capacity(n_total);
    let mut upper = Vec::with_capacity(n_total);
    for j in 0..p.n {
        let (l, u) = (p.lower[j], p.upper[j]);
        assert!(l <= u, "empty bound interval on column {j}");
        // Start at the finite bound closer to zero; no free columns are
        // produced in this crate.
        state[j] = if !l.is_finite() || (u.is_finite() && u.abs() < l.abs()) {
            VarState::Upper
        } else {
            VarState::Lower
        };
        lower.push(l);
        upper.push(u);
    }

    // Residual the artificial basis must cover.
    let mut rhs = p.b.clone();
    for j in 0..p.n {
        let v = match state[j] {
            VarState::Lower => lower[j],
            VarState::Upper => upper[j],
            VarState::Basic => unreachable!(),
        };
        if v != 0.0 {
            for i in 0..m {
                rhs[i] -= p.cols[j * m + i] * v;
            }
        }
    }

    let mut cols = Vec::with_capacity(n_total * m);
    cols.extend_from_slice(&p.cols);
    for i in 0..m {
        let mut unit = vec![0.0; m];
        unit[i] = if rhs[i] >= 0.0 { 1.0 } else { -1.0 };
        cols.extend_from_slice(&unit);
        lower.push(0.0);
        upper.push(f64::INFINITY);
        state[p.n + i] = VarState::Basic;
    }

    let mut tab = Tableau {
        m,
        n_total,
        cols,
        b: p.b.clone(),
        lower,
        upper,
        state,
        basis: (p.n..n_total).collect(),
        in_basis: vec![usize::MAX; n_total],
        binv: {
            let mut id = vec![0.0; m * m];
            for i in 0..m {
                // The artificial column signs make the starting inverse
                // diagonal +-1.
                id[i * m + i] = if rhs[i] >= 0.0 { 1.0 } else { -1.0 };
            }
            id
        },
        xb: rhs.iter().map(|v| v.abs()).collect(),
        pivots_since_refactor: 0,
    };
    for (pos, &j) in tab.basis.iter().enumerate() {
        tab.in_basis[j] = pos;
    }

    let mut iterations = 0usize;

    // Phase 1: drive the artificial mass to zero (skip if already there).
    let art_mass: f64 = tab.xb.iter().sum();
    if art_mass > FEAS_TOL {
        let mut phase1_cost = vec![0.0; n_total];
        for j in p.n..n_total {
            phase1_cost[j] = -1.0;
        }
        let (st, it) = run_phase(&mut tab, &phase1_cost, max_iter);
        iterations += it;
        if st == SimplexStatus::Unbounded {
            return finish(p, &tab, SimplexStatus::Unbounded, iterations);
        }
        let remaining: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &j)| j >= p.n)
            .map(|(i, _)| tab.xb[i])
            .sum();
        if st == SimplexStatus::IterationLimit {
            return finish(p, &tab, SimplexStatus::IterationLimit, iterations);
        }
        if remaining > 1e-7 {
            return finish(p, &tab, SimplexStatus::Infeasible, iterations);
        }
    }
    // Pin artificials for phase 2; any still basic sit at level ~0.
    for j in p.n..n_total {
        tab.upper[j] = 0.0;
        if tab.state[j] != VarState::Basic {
            tab.state[j] = VarState::Lower;
        }
    }

    let mut phase2_cost = vec![0.0; n_total];
    phase2_cost[..p.n].copy_from_slice(&p.c);
    let (st, it) = run_phase(&mut tab, &phase2_cost, max_iter.saturating_sub(iterations));
    iterations += it;
    finish(p, &tab, st, iterations)
}

fn finish(p: &LpProblem, tab: &Tableau, status: SimplexStatus, iterations: usize) -> LpOutcome {
    let mut x = vec![0.0; p.n];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = tab.bound_value(j);
    }
    let mut cost = vec![0.0; tab.n_total];
    cost[..p.n].copy_from_slice(&p.c);
    let duals = tab.btran(&cost);
    let mut residual = 0.0f64;
    for j in 0..p.n {
        if tab.state[j] == VarState::Basic {
            continue;
        }
        let a = tab.col(j);
        let mut d = cost[j];
        for i in 0..tab.m {
            d -= duals[i] * a[i];
        }
        let eligible = match tab.state[j] {
            VarState::Lower => d > 0.0,
            VarState::Upper => d < 0.0,
            VarState::Basic => false,
        };
        if eligible {
            residual = residual.max(d.abs());
        }
    }
    let objective = x.iter().zip(&p.c).map(|(&xi, &ci)| xi * ci).sum();
    LpOutcome {
        status,
        objective,
        x,
        duals,
        residual,
        iterations,
    }
}

/// Ratio test, two passes: strict minimum step, then the Harris-relaxed
/// minimum that lets each blocking bound give way by HARRIS_DELTA in
/// variable units. The leaving row is picked among rooms inside the band
/// by largest pivot element, which keeps the basis well conditioned.
/// Bland's anti-cycling proof needs the exact minimum-ratio set, so while
/// Bland's rule is active the band is strict and the smallest basis
/// variable index wins instead. `leave = None` reports a bound flip.
fn ratio_test(tab: &Tableau, j_in: usize, dir: f64, w: &[f64], bland: bool) -> (f64, Option<usize>) {
    let m = tab.m;
    let own_span = tab.upper[j_in] - tab.lower[j_in];
    let room_of = |i: usize| -> Option<f64> {
        let flow = dir * w[i];
        if flow.abs() <= 1e-11 {
            return None;
        }
        let bi = tab.basis[i];
        Some(if flow > 0.0 {
            (tab.xb[i] - tab.lower[bi]).max(0.0) / flow
        } else {
            (tab.upper[bi] - tab.xb[i]).max(0.0) / (-flow)
        })
    };
    let mut t_strict = f64::INFINITY;
    let mut t_relax = f64::INFINITY;
    for i in 0..m {
        if let Some(room) = room_of(i) {
            t_strict = t_strict.min(room);
            t_relax = t_relax.min(room + HARRIS_DELTA / (dir * w[i]).abs());
        }
    }
    let band = if bland { t_strict + 1e-12 } else { t_relax };

    if own_span <= band {
        // Bound flip: no basis change.
        return (own_span, None);
    }
    let mut pick: Option<(usize, f64)> = None;
    for i in 0..m {
        let Some(room) = room_of(i) else { continue };
        if room > band {
            continue;
        }
        let better = match pick {
            None => true,
            Some((r, _)) => {
                if bland {
                    tab.basis[i] < tab.basis[r]
                } else {
                    w[i].abs() > w[r].abs()
                }
            }
        };
        if better {
            pick = Some((i, room));
        }
    }
    match pick {
        Some((r, room)) => (room.max(0.0), Some(r)),
        // Unreachable: the row attaining t_relax lies in the band. Kept
        // as a safe fallback.
        None => (t_strict, None),
    }
}

/// Reduced cost of column `j` under row prices `y`, or `None` when the
/// column cannot improve: basic, fixed, banned, or priced within COST_TOL
/// of its bound's side.
fn improving_cost(tab: &Tableau, cost: &[f64], y: &[f64], banned: &[bool], j: usize) -> Option<f64> {
    if banned[j] {
        return None;
    }
    match tab.state[j] {
        VarState::Basic => return None,
        VarState::Lower if tab.lower[j] == tab.upper[j] => return None,
        _ => {}
    }
    let a = tab.col(j);
    let mut d = cost[j];
    for (yi, ai) in y.iter().zip(a) {
        d -= yi * ai;
    }
    let eligible = match tab.state[j] {
        VarState::Lower => d > COST_TOL,
        VarState::Upper => d < -COST_TOL,
        VarState::Basic => false,
    };
    eligible.then_some(d)
}

/// Entering choice when every improving column was shelved for pivot
/// quality: ratio-test each one and take the best-conditioned basis
/// change on offer, preferring bound flips (which need no pivot at all),
/// then the largest pivot element, with the reduced cost as a tiebreak.
fn forced_pivot(
    tab: &Tableau,
    cost: &[f64],
    y: &[f64],
    banned: &[bool],
) -> Option<(usize, f64, Vec<f64>, f64, Option<usize>)> {
    let mut best: Option<(f64, f64, (usize, f64, Vec<f64>, f64, Option<usize>))> = None;
    for j in 0..tab.n_total {
        let Some(d) = improving_cost(tab, cost, y, banned, j) else {
            continue;
        };
        let dir = if d > 0.0 { 1.0 } else { -1.0 };
        let w = tab.ftran(j);
        let (t_best, leave) = ratio_test(tab, j, dir, &w, false);
        if t_best.is_infinite() {
            // Unbounded ray: report it through the normal path.
            return Some((j, dir, w, t_best, leave));
        }
        let quality = match leave {
            None => f64::INFINITY,
            Some(r) => w[r].abs(),
        };
        let replace = match &best {
            None => true,
            Some((q, dc, _)) => quality > *q || (quality == *q && d.abs() > *dc),
        };
        if replace {
            best = Some((quality, d.abs(), (j, dir, w, t_best, leave)));
        }
    }
    best.map(|(_, _, c)| c)
}

fn run_phase(tab: &mut Tableau, cost: &[f64], max_iter: usize) -> (SimplexStatus, usize) {
    let m = tab.m;
    let mut degenerate_run = 0usize;
    let mut iterations = 0usize;

    // Entering columns whose only blocking pivots are numerically poor get
    // shelved for the current round and repriced without; `round` stamps
    // make clearing the shelf O(1) after each basis change. Columns whose
    // acceptance left the basis numerically singular are rolled back and
    // banned for the rest of the phase.
    let mut shelved = vec![0u32; tab.n_total];
    let mut round = 1u32;
    let mut shelved_now = 0usize;
    let mut force_tiny = false;
    let mut banned = vec![false; tab.n_total];

    loop {
        if iterations >= max_iter {
            return (SimplexStatus::IterationLimit, iterations);
        }
        let bland = degenerate_run >= BLAND_TRIGGER;
        let y = tab.btran(cost);

        // Price and ratio-test until a column with an acceptable pivot is
        // found; the prices stay valid across shelves because the basis
        // does not change.
        let mut accepted: Option<(usize, f64, Vec<f64>, f64, Option<usize>)> = None;
        loop {
            if force_tiny {
                accepted = forced_pivot(tab, cost, &y, &banned);
                break;
            }
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..tab.n_total {
                if !bland && shelved[j] == round {
                    continue;
                }
                let Some(d) = improving_cost(tab, cost, &y, &banned, j) else {
                    continue;
                };
                if bland {
                    enter = Some((j, d));
                    break;
                }
                if enter.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    enter = Some((j, d));
                }
            }
            let Some((j_in, d_in)) = enter else {
                if !bland && shelved_now > 0 {
                    // Every improving column was shelved; reprice them all
                    // and take the least-bad pivot available.
                    round += 1;
                    shelved_now = 0;
                    force_tiny = true;
                    continue;
                }
                break;
            };

            let dir = if d_in > 0.0 { 1.0 } else { -1.0 };
            let w = tab.ftran(j_in);
            let (t_best, leave) = ratio_test(tab, j_in, dir, &w, bland);

            if let Some(r) = leave {
                if !bland && w[r].abs() < PIVOT_GOOD {
                    shelved[j_in] = round;
                    shelved_now += 1;
                    continue;
                }
            }
            accepted = Some((j_in, dir, w, t_best, leave));
            break;
        }
        let Some((j_in, dir, w, t_best, leave)) = accepted else {
            return (SimplexStatus::Optimal, iterations);
        };
        iterations += 1;
        round += 1;
        shelved_now = 0;
        force_tiny = false;

        // A pivot below the quality bar is applied provisionally: keep
        // enough state to roll it back if it leaves the basis singular.
        let snapshot = match leave {
            Some(r) if w[r].abs() < PIVOT_GOOD => Some((
                tab.basis.clone(),
                tab.in_basis.clone(),
                tab.state.clone(),
                tab.xb.clone(),
                tab.binv.clone(),
                tab.pivots_since_refactor,
            )),
            _ => None,
        };

        if t_best.is_infinite() {
            return (SimplexStatus::Unbounded, iterations);
        }
        if t_best <= DEGEN_TOL {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }

        // Move the entering variable and update basic values.
        let start = tab.bound_value(j_in);
        for i in 0..m {
            tab.xb[i] -= dir * t_best * w[i];
        }
        match leave {
            None => {
                tab.state[j_in] = match tab.state[j_in] {
                    VarState::Lower => VarState::Upper,
                    VarState::Upper => VarState::Lower,
                    VarState::Basic => unreachable!(),
                };
            }
            Some(r) => {
                let j_out = tab.basis[r];
                // The leaving variable lands on the bound it ran into.
                let flow = dir * w[r];
                tab.state[j_out] = if flow > 0.0 {
                    VarState::Lower
                } else {
                    VarState::Upper
                };
                tab.in_basis[j_out] = usize::MAX;
                tab.basis[r] = j_in;
                tab.in_basis[j_in] = r;
                tab.state[j_in] = VarState::Basic;
                tab.xb[r] = start + dir * t_best;

                // Explicit-inverse pivot update.
                let wr = w[r];
                let row_r: Vec<f64> = tab.binv[r * m..(r + 1) * m].iter().map(|v| v / wr).collect();
                for i in 0..m {
                    if i == r {
                        continue;
                    }
                    let wi = w[i];
                    if wi != 0.0 {
                        for t in 0..m {
                            tab.binv[i * m + t] -= wi * row_r[t];
                        }
                    }
                }
                tab.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);

                // A reluctantly accepted tiny pivot degrades the updated
                // inverse badly enough that waiting for the periodic
                // refactorization lets later pivot decisions run on
                // garbage; refactor on the spot instead.
                // A reluctantly accepted tiny pivot degrades the updated
                // inverse badly enough that waiting for the periodic
                // refactorization lets later pivot decisions run on
                // garbage; refactor on the spot instead.
                let degraded = wr.abs() < PIVOT_GOOD;
                tab.pivots_since_refactor += 1;
                if (degraded || tab.pivots_since_refactor >= REFACTOR_EVERY) && !tab.refactor() {
                    // The accepted column left the basis numerically
                    // singular. Restore the pre-pivot state and ban the
                    // column for the rest of the phase; the optimum it
                    // could have contributed is below factorization
                    // precision anyway.
                    if let Some((basis, in_basis, state, xb, binv, since)) = snapshot {
                        tab.basis = basis;
                        tab.in_basis = in_basis;
                        tab.state = state;
                        tab.xb = xb;
                        tab.binv = binv;
                        tab.pivots_since_refactor = since;
                        banned[j_in] = true;
                        continue;
                    }
                    // Singular without a risky pivot to blame: genuine
                    // corruption, surfaced as an iteration problem rather
                    // than a panic.
                    return (SimplexStatus::IterationLimit, iterations);
                }
            }
        }
    }
}
