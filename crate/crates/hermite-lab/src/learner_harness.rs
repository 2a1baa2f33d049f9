//! Agnostic learning of embedded cube concepts at desk scale.
//!
//! The hidden concept is `F(x) = Cube_k(P x)` for a k x n matrix `P` with
//! orthonormal rows; since `P x ~ gamma_k` when `x ~ gamma_n`, everything
//! known about the cube in its own dimension transfers to the ambient
//! problem. The harness covers the full experimental loop:
//!
//! * [`sample_concept`]: a seeded random embedding;
//! * [`generate_dataset`]: i.i.d. Gaussian samples with clean labels and
//!   either independent label flips or margin-targeted adversarial flips,
//!   so the realized optimum is a known quantity;
//! * [`l1_regression_learn`]: degree-d polynomial L1 regression in the
//!   ambient Hermite basis followed by threshold selection over a grid,
//!   the classical route from L1 approximation to agnostic learning: its
//!   error is bounded by the noise rate plus half the best L1
//!   approximation distance of the hidden function;
//! * [`evaluate_error`]: fresh-sample error against the noisy label law
//!   and the excess over the realized optimum;
//! * [`StatOracle`]: a simulated statistical-query oracle whose answers
//!   are correct up to an adversarial perturbation within the tolerance.
//!
//! The exact empirical L1 minimizer is a linear program too large for the
//! in-crate simplex at these sample counts, so the fit anneals a Huber
//! surrogate (delta shrinking geometrically) under Adam; the surrogate's
//! minimizers converge to an L1 minimizer as delta drops, and the bound
//! the experiments check leaves generous slack for the approximation.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cube_analysis::CubeSpec;
use crate::error::Error;
use crate::hermite_core::{enumerate_multi_indices, hbar_table_seeded, MultiIndex, Parity};
use crate::util::csum;
use crate::Result;

/// Fixed shard count for sampling; merging by count keeps every result a
/// function of the seed alone.
const SHARDS: u64 = 8;
/// Feature-matrix entry budget for the regression fit.
const FIT_BUDGET: u64 = 600_000_000;
/// Distinct Hermite multi-indices may touch at most this many variables.
const SUPPORT_CAP: u32 = 6;
/// Training epochs for the annealed fit.
const EPOCHS: u32 = 24;
/// Adam step size at the start of the cosine decay.
const LR_START: f64 = 3e-3;
/// Adam step size at the end; small enough that terminal stochastic
/// steps add negligible coefficient noise even over thousands of columns.
const LR_END: f64 = 2e-4;
/// Minibatch size.
const BATCH: usize = 2048;

/// A hidden cube concept `x -> Cube_k(P x)` embedded in R^n.
#[derive(Debug, Clone)]
pub struct EmbeddedConcept {
    n: usize,
    k: usize,
    /// Row-major k x n with orthonormal rows.
    p: Vec<f64>,
    spec: CubeSpec,
}

impl EmbeddedConcept {
    /// Wrap an explicit embedding matrix, checking row orthonormality.
    pub fn from_matrix(n: usize, k: usize, p: Vec<f64>, spec: CubeSpec) -> Result<EmbeddedConcept> {
        if k == 0 || k > n {
            return Err(Error::invalid("k", "need 1 <= k <= n"));
        }
        if p.len() != k * n {
            return Err(Error::DimensionMismatch(format!(
                "embedding matrix of {} entries for shape {k} x {n}",
                p.len()
            )));
        }
        if spec.k() != k {
            return Err(Error::DimensionMismatch(format!(
                "cube over R^{} behind a rank-{k} embedding",
                spec.k()
            )));
        }
        for a in 0..k {
            for b in a..k {
                let dot = csum((0..n).map(|j| p[a * n + j] * p[b * n + j]));
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(Error::invalid(
                        "p",
                        format!("rows {a} and {b} have inner product {dot}, not {want}"),
                    ));
                }
            }
        }
        Ok(EmbeddedConcept { n, k, p, spec })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> &CubeSpec {
        &self.spec
    }

    /// `P x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|a| csum((0..self.n).map(|j| self.p[a * self.n + j] * x[j])))
            .collect()
    }

    /// Concept value `Cube_k(P x)`, in {-1, +1}.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let z = self.project(x);
        if z.iter().all(|v| v.abs() <= self.spec.theta()) {
            1.0
        } else {
            -1.0
        }
    }

    /// Distance of `P x` from the cube boundary in the max norm; the
    /// adversarial noise model flips the smallest values first.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let z = self.project(x);
        let peak = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        (self.spec.theta() - peak).abs()
    }
}

/// Random embedding: a seeded Gaussian matrix with rows orthonormalized
/// by modified Gram-Schmidt. Deterministic in `(n, k, seed)`.
pub fn sample_concept(n: usize, k: usize, seed: u64) -> Result<EmbeddedConcept> {
    if k == 0 || k > n {
        return Err(Error::invalid("k", "need 1 <= k <= n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for q in &rows {
                let t = csum(v.iter().zip(q).map(|(a, b)| a * b));
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= t * qi;
                }
            }
        }
        let norm = csum(v.iter().map(|a| a * a)).sqrt();
        // A numerically dependent draw; take a fresh one.
        if norm < 1e-6 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rows.push(v);
    }
    let p = rows.concat();
    EmbeddedConcept::from_matrix(n, k, p, CubeSpec::new(k)?)
}

/// Label corruption applied on top of the clean concept labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Labels are the concept values.
    None,
    /// Each label flips independently with the given probability in [0, 1/2).
    RandomFlip(f64),
    /// Exactly `floor(budget * m)` labels flip, chosen at the smallest
    /// cube-boundary margins; budget in [0, 1).
    AdversarialMargin(f64),
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::RandomFlip(eta) => {
                if !(0.0..0.5).contains(&eta) {
                    Err(Error::invalid("eta", "flip probability must lie in [0, 1/2)"))
                } else {
                    Ok(())
                }
            }
            NoiseModel::AdversarialMargin(budget) => {
                if !(0.0..1.0).contains(&budget) {
                    Err(Error::invalid("budget", "flip budget must lie in [0, 1)"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The error of the best classifier in hindsight under this noise.
    pub fn realized_opt(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::RandomFlip(eta) => eta,
            NoiseModel::AdversarialMargin(budget) => budget,
        }
    }
}

/// One labeled example; `clean_y` keeps the pre-corruption label so the
/// realized optimum stays computable.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: i8,
    pub clean_y: i8,
}

/// `m` i.i.d. samples `x ~ gamma_n` labeled by the concept and corrupted
/// per the noise model. Deterministic in `(concept, m, noise, seed)`.
pub fn generate_dataset(
    concept: &EmbeddedConcept,
    m: u64,
    noise: NoiseModel,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    noise.validate()?;
    if m == 0 {
        return Err(Error::invalid("m", "need at least one sample"));
    }
    let n = concept.n;
    let base = m / SHARDS;
    let extra = m % SHARDS;
    let flip_prob = match noise {
        NoiseModel::RandomFlip(eta) => Some(eta),
        _ => None,
    };

    let shards: Vec<Vec<LabeledSample>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..SHARDS)
            .map(|shard| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(shard);
                    let quota = base + u64::from(shard < extra);
                    let mut out = Vec::with_capacity(quota as usize);
                    for _ in 0..quota {
                        let x: Vec<f64> =
                            (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                        let clean = if concept.eval(&x) > 0.0 { 1i8 } else { -1i8 };
                        let y = match flip_prob {
                            Some(eta) if rng.gen::<f64>() < eta => -clean,
                            _ => clean,
                        };
                        out.push(LabeledSample { x, y, clean_y: clean });
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("a sampling shard panicked"))
            .collect()
    });
    let mut data: Vec<LabeledSample> = shards.into_iter().flatten().collect();

    if let NoiseModel::AdversarialMargin(budget) = noise {
        let flips = (budget * m as f64).floor() as usize;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            concept
                .margin(&data[a].x)
                .partial_cmp(&concept.margin(&data[b].x))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(flips) {
            data[i].y = -data[i].clean_y;
        }
    }
    Ok(data)
}

/// A degree-d polynomial with a sign threshold.
#[derive(Debug, Clone)]
pub struct L1Hypothesis {
    n: usize,
    d: u32,
    indices: Vec<MultiIndex>,
    coeffs: Vec<f64>,
    threshold: f64,
    /// Classify as `sign(threshold - p(x))` instead.
    flipped: bool,
}

impl L1Hypothesis {
    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The fitted polynomial.
    pub fn eval_poly(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        let table = hbar_table_seeded(self.d, x, None);
        csum(self.indices.iter().zip(&self.coeffs).map(|(j, &c)| {
            let mut prod = c;
            for (axis, &deg) in j.entries().iter().enumerate() {
                if deg > 0 {
                    prod *= table[deg as usize][axis];
                }
            }
            prod
        }))
    }

    /// The classifier, in {-1, +1}.
    pub fn classify(&self, x: &[f64]) -> f64 {
        let s = if self.eval_poly(x) >= self.threshold {
            1.0
        } else {
            -1.0
        };
        if self.flipped {
            -s
        } else {
            s
        }
    }
}

/// The ambient Hermite basis for the fit: total degree at most `d`,
/// support capped so the column count stays a desk-scale quantity.
fn fit_indices(n: usize, d: u32) -> Vec<MultiIndex> {
    enumerate_multi_indices(n, d, Parity::All, true)
        .into_iter()
        .filter(|j| j.entries().iter().filter(|&&e| e > 0).count() as u32 <= SUPPORT_CAP.min(d.max(1)))
        .collect()
}

/// Degree-d empirical L1 polynomial regression followed by threshold
/// selection on a `thresholds`-point grid over [-1, 1], each orientation.
///
/// Refuses under-determined fits: the sample count must be at least ten
/// times the basis column count.
pub fn l1_regression_learn(
    data: &[LabeledSample],
    d: u32,
    thresholds: usize,
) -> Result<L1Hypothesis> {
    if data.is_empty() {
        return Err(Error::invalid("data", "need at least one sample"));
    }
    if thresholds < 2 {
        return Err(Error::invalid("thresholds", "grid needs at least 2 points"));
    }
    let n = data[0].x.len();
    if data.iter().any(|s| s.x.len() != n) {
        return Err(Error::DimensionMismatch(
            "samples of mixed dimension".to_string(),
        ));
    }
    let indices = fit_indices(n, d);
    let cols = indices.len();
    let m = data.len();
    if (m as u64) < 10 * cols as u64 {
        return Err(Error::invalid(
            "data",
            format!(
                "degree-{d} fit over {n} variables has {cols} columns and needs at least {} samples, got {m}",
                10 * cols
            ),
        ));
    }
    if (m as u64) * (cols as u64) > FIT_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "feature matrix of {m} x {cols} entries exceeds the fit budget"
        )));
    }

    // Feature matrix in f32, row-major per sample.
    let mut feats = vec![0.0f32; m * cols];
    for (s, sample) in data.iter().enumerate() {
        let table = hbar_table_seeded(d, &sample.x, None);
        let row = &mut feats[s * cols..(s + 1) * cols];
        for (c, j) in indices.iter().enumerate() {
            let mut prod = 1.0f64;
            for (axis, &deg) in j.entries().iter().enumerate() {
                if deg > 0 {
                    prod *= table[deg as usize][axis];
                }
            }
            row[c] = prod as f32;
        }
    }
    let labels: Vec<f32> = data.iter().map(|s| f32::from(s.y)).collect();

    // Warm start at the empirical least-squares fit: the basis is
    // orthonormal under the sampling law, so the Gram matrix is close to
    // the identity and the projection coefficients are one pass of
    // column means of y * feature. The annealed descent then only has to
    // close the L2-to-L1 gap.
    let mut coeffs = vec![0.0f64; cols];
    for (s, sample) in data.iter().enumerate() {
        let row = &feats[s * cols..(s + 1) * cols];
        let y = f64::from(sample.y);
        for (c, &f) in row.iter().enumerate() {
            coeffs[c] += y * f64::from(f);
        }
    }
    for c in &mut coeffs {
        *c /= m as f64;
    }
    let mut adam_m = vec![0.0f64; cols];
    let mut adam_v = vec![0.0f64; cols];
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1bad_5eed);
    let mut step = 0u64;
    let total_steps = u64::from(EPOCHS) * m.div_ceil(BATCH) as u64;
    for epoch in 0..EPOCHS {
        let delta = (0.5 * 0.8f64.powi(epoch as i32)).max(0.01);
        // Fisher-Yates with the module's own stream.
        for i in (1..m).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut grad = vec![0.0f64; cols];
        for batch in order.chunks(BATCH) {
            for g in &mut grad {
                *g = 0.0;
            }
            for &s in batch {
                let row = &feats[s * cols..(s + 1) * cols];
                let mut pred = 0.0f64;
                for (c, &f) in row.iter().enumerate() {
                    pred += coeffs[c] * f64::from(f);
                }
                let r = pred - f64::from(labels[s]);
                // d/dr huber_delta(r), clipped to +-1 outside the well.
                let dr = (r / delta).clamp(-1.0, 1.0);
                for (c, &f) in row.iter().enumerate() {
                    grad[c] += dr * f64::from(f);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            step += 1;
            let phase = std::f64::consts::PI * (step - 1) as f64 / total_steps as f64;
            let lr = LR_END + 0.5 * (LR_START - LR_END) * (1.0 + phase.cos());
            let bc1 = 1.0 - beta1_pow(beta1, step);
            let bc2 = 1.0 - beta1_pow(beta2, step);
            for c in 0..cols {
                let g = grad[c] * scale;
                adam_m[c] = beta1 * adam_m[c] + (1.0 - beta1) * g;
                adam_v[c] = beta2 * adam_v[c] + (1.0 - beta2) * g * g;
                coeffs[c] -= lr * (adam_m[c] / bc1) / ((adam_v[c] / bc2).sqrt() + eps);
            }
        }
    }

    // Threshold grid, both orientations, minimizing training
    // misclassification; ties resolve to the earliest grid point.
    let preds: Vec<f64> = (0..m)
        .map(|s| {
            let row = &feats[s * cols..(s + 1) * cols];
            row.iter()
                .enumerate()
                .map(|(c, &f)| coeffs[c] * f64::from(f))
                .sum()
        })
        .collect();
    let mut best = (usize::MAX, 0.0, false);
    for ti in 0..thresholds {
        let t = -1.0 + 2.0 * ti as f64 / (thresholds - 1) as f64;
        let mut wrong_plus = 0usize;
        for (s, &p) in preds.iter().enumerate() {
            let sign = if p >= t { 1i8 } else { -1i8 };
            if sign != data[s].y {
                wrong_plus += 1;
            }
        }
        let wrong_minus = m - wrong_plus;
        if wrong_plus < best.0 {
            best = (wrong_plus, t, false);
        }
        if wrong_minus < best.0 {
            best = (wrong_minus, t, true);
        }
    }

    Ok(L1Hypothesis {
        n,
        d,
        indices,
        coeffs,
        threshold: best.1,
        flipped: best.2,
    })
}

fn beta1_pow(beta: f64, step: u64) -> f64 {
    beta.powi(step.min(1_000_000) as i32)
}

/// Fresh-sample misclassification rate of `classify` against the noisy
/// label law, and its excess over the realized optimum of the noise
/// model. Deterministic in the seed.
pub fn evaluate_error<H>(
    classify: H,
    concept: &EmbeddedConcept,
    noise: NoiseModel,
    m_test: u64,
    seed: u64,
) -> Result<(f64, f64)>
where
    H: Fn(&[f64]) -> f64,
{
    let test = generate_dataset(concept, m_test, noise, seed)?;
    let wrong = test
        .iter()
        .filter(|s| {
            let h = if classify(&s.x) > 0.0 { 1i8 } else { -1i8 };
            h != s.y
        })
        .count();
    let error = wrong as f64 / m_test as f64;
    Ok((error, error - noise.realized_opt()))
}

/// How a [`StatOracle`] perturbs the true expectation.
#[derive(Debug, Clone, Copy)]
pub enum StatAdversary {
    /// `+tau * sign(E)`: the worst deterministic centered shift.
    WorstShift,
    /// A seeded uniform draw from [-tau, tau].
    SeededUniform(u64),
}

/// Simulated statistical-query access to the noisy labeled distribution:
/// answers are `E[g(x, y)]` up to the adversary's within-tolerance shift,
/// with the Monte Carlo simulation error held an order below it.
#[derive(Debug, Clone)]
pub struct StatOracle {
    concept: EmbeddedConcept,
    noise: NoiseModel,
    seed: u64,
}

impl StatOracle {
    pub fn new(concept: EmbeddedConcept, noise: NoiseModel, seed: u64) -> Result<StatOracle> {
        noise.validate()?;
        Ok(StatOracle {
            concept,
            noise,
            seed,
        })
    }

    /// Answer one query of tolerance `tau > 0` for a function bounded by
    /// 1 in absolute value; unbounded queries are refused when sampling
    /// catches them.
    pub fn query<G>(&self, g: G, tau: f64, adversary: StatAdversary) -> Result<f64>
    where
        G: Fn(&[f64], f64) -> f64,
    {
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", "tolerance must be positive"));
        }
        // 3 sigma of a [-1, 1] variable under the sample count stays at
        // or below tau / 10.
        let samples = (900.0 / (tau * tau)).ceil() as u64;
        if samples > 200_000_000 {
            return Err(Error::BudgetExceeded(format!(
                "a tau = {tau} query needs {samples} simulation samples"
            )));
        }
        let data = generate_dataset(&self.concept, samples, self.noise, self.seed)?;
        let mut acc = 0.0;
        for s in &data {
            let v = g(&s.x, f64::from(s.y));
            if !(v.abs() <= 1.0 + 1e-12) {
                return Err(Error::invalid(
                    "g",
                    format!("query returned {v}; statistical queries must stay in [-1, 1]"),
                ));
            }
            acc += v;
        }
        let truth = acc / samples as f64;
        let shift = match adversary {
            StatAdversary::WorstShift => tau * truth.signum() * f64::from(truth != 0.0),
            StatAdversary::SeededUniform(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.gen_range(-tau..=tau)
            }
        };
        Ok(truth + shift)
    }
}

/// One line of the experiment log.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub d: u32,
    pub m: u64,
    pub noise: NoiseModel,
    pub test_error: f64,
    pub opt: f64,
    pub excess: f64,
}

const RLAB_MAGIC: &[u8; 4] = b"RLAB";
const RLAB_VERSION: u16 = 1;

/// Write a dataset snapshot: 16-byte header (magic, version, n, m), then
/// per sample `n` little-endian f64 coordinates and the two i8 labels.
pub fn write_rlab<W: Write>(mut w: W, data: &[LabeledSample]) -> Result<()> {
    let n = data.first().map_or(0, |s| s.x.len());
    if n > usize::from(u16::MAX) {
        return Err(Error::BudgetExceeded(format!(
            "dimension {n} does not fit the snapshot header"
        )));
    }
    w.write_all(RLAB_MAGIC)?;
    w.write_all(&RLAB_VERSION.to_le_bytes())?;
    w.write_all(&(n as u16).to_le_bytes())?;
    w.write_all(&(data.len() as u64).to_le_bytes())?;
    for s in data {
        if s.x.len() != n {
            return Err(Error::DimensionMismatch(
                "samples of mixed dimension in one snapshot".to_string(),
            ));
        }
        for v in &s.x {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[s.y as u8, s.clean_y as u8])?;
    }
    Ok(())
}

fn bad_snapshot(msg: &str) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()))
}

/// Read a dataset snapshot written by [`write_rlab`].
pub fn read_rlab<R: Read>(mut r: R) -> Result<Vec<LabeledSample>> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != RLAB_MAGIC {
        return Err(bad_snapshot("not a dataset snapshot (bad magic)"));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != RLAB_VERSION {
        return Err(bad_snapshot("unsupported snapshot version"));
    }
    let n = usize::from(u16::from_le_bytes([head[6], head[7]]));
    let m = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
    let mut data = Vec::with_capacity(m.min(1 << 24) as usize);
    let mut buf = vec![0u8; 8 * n + 2];
    for _ in 0..m {
        r.read_exact(&mut buf)?;
        let x: Vec<f64> = buf[..8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let y = buf[8 * n] as i8;
        let clean_y = buf[8 * n + 1] as i8;
        if !matches!(y, -1 | 1) || !matches!(clean_y, -1 | 1) {
            return Err(bad_snapshot("label outside {-1, +1}"));
        }
        data.push(LabeledSample { x, y, clean_y });
    }
    Ok(data)
}
