//! Command-line front door: one subcommand per study.
//!
//! Every run is deterministic. Seeds default to 0 and are never drawn from
//! the clock, tables route through [`crate::report`] so identical configs
//! produce byte-identical artifacts, and output goes to `--out` when given
//! and to stdout otherwise. Validation failures exit with code 2 and a
//! message naming the offending parameter; budget refusals exit with 3.

use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cube_analysis::{
    cube_coeff, cube_low_degree_weight, interval_coeff, mills_bounds, theta_k, CubeSpec,
};
use crate::gns_noise::{gns_cube_semianalytic, gns_estimate, gns_sign_analytic};
use crate::hermite_core::{
    enumerate_multi_indices, gauss_hermite_grid, GridFunction, Parity, DEFAULT_POINT_BUDGET,
};
use crate::l1_degree::{degree_sweep, ganzburg_thresholds};
use crate::learner_harness::{
    evaluate_error, generate_dataset, l1_regression_learn, sample_concept, write_rlab,
    ExperimentRecord, NoiseModel,
};
use crate::report::{
    coeff_table_csv, degree_sweep_csv, experiment_jsonl, gns_table_csv, sorted_json,
    theta_table_csv, weight_table_csv, witness_json, CoeffRow, GnsRow, ThetaRow,
};
use crate::resilience_engine::build_witness;
use crate::{Error, Result};

/// Numerical laboratory for Hermite analysis in Gaussian space.
#[derive(Debug, Parser)]
#[command(name = "hermite-lab", version, disable_help_subcommand = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Table rendering; each subcommand has its contractual default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Balancing thresholds with their Mills sandwich.
    Theta(ThetaArgs),
    /// Hermite coefficients of an interval or a cube.
    Coeffs(CoeffsArgs),
    /// Low-degree spectral mass of cubes against the comparison bound.
    Lowdeg(LowdegArgs),
    /// Approximately resilient witness construction for a cube.
    Witness(WitnessArgs),
    /// L1 distance and resilient distance curves with duality residuals.
    L1degree(L1degreeArgs),
    /// Smallest sign degrees at shrinking error targets.
    Ganzburg(GanzburgArgs),
    /// Gaussian noise sensitivity tables and the LP comparison.
    Gns(GnsArgs),
    /// Agnostic learning experiments on embedded cubes.
    Learn(LearnArgs),
    /// Quick invariant checks across every module.
    Selftest,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    /// Cube dimension; repeat for several rows.
    #[arg(long, required = true)]
    pub k: Vec<usize>,

    /// Bisection tolerance handed to the threshold solver.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Interval half-width for one-dimensional coefficients.
    #[arg(long, conflicts_with = "k")]
    pub theta: Option<f64>,

    /// Cube dimension for multi-index coefficients.
    #[arg(long)]
    pub k: Option<usize>,

    /// Largest 1-d degree (interval mode).
    #[arg(long, default_value_t = 20)]
    pub j_max: u32,

    /// Total-degree cutoff (cube mode).
    #[arg(long, default_value_t = 6)]
    pub d: u32,
}

#[derive(Debug, Args)]
pub struct LowdegArgs {
    /// Cube dimension; repeat for several.
    #[arg(long, default_values_t = [16usize, 64, 256, 1024, 4096])]
    pub k: Vec<usize>,

    /// Degree cutoff; repeat for several.
    #[arg(long, default_values_t = [2u32, 4, 6])]
    pub d: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// Cube dimension.
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Orthogonality degree.
    #[arg(long, default_value_t = 2)]
    pub d: u32,

    /// Per-axis quadrature order.
    #[arg(long, default_value_t = 80)]
    pub q: u32,

    /// Stop once the low-degree coefficient norm falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub stop_tol: f64,

    /// Iteration cap.
    #[arg(long, default_value_t = 30)]
    pub max_iter: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionId {
    Cube,
    Sign,
    Interval,
}

#[derive(Debug, Args)]
pub struct L1degreeArgs {
    /// Which Boolean function the curves are for.
    #[arg(long, value_enum, default_value_t = FunctionId::Cube)]
    pub function: FunctionId,

    /// Cube dimension (cube mode).
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Per-axis quadrature order; defaults to 80 for cubes and 400 for
    /// the one-dimensional functions.
    #[arg(long)]
    pub q: Option<u32>,

    /// Degrees to solve at; repeat for several.
    #[arg(long, default_values_t = [0u32, 1, 2, 3, 4, 5, 6, 7, 8])]
    pub d: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct GanzburgArgs {
    /// Error targets; repeat for several.
    #[arg(long, default_values_t = [0.3f64, 0.2, 0.1])]
    pub eps: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GnsArgs {
    /// Cube dimension.
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// LP degree for the comparison columns.
    #[arg(long, default_value_t = 2)]
    pub d: u32,

    /// Per-axis quadrature order for the LP columns.
    #[arg(long, default_value_t = 80)]
    pub q: u32,

    /// Noise rates; the comparison rate (ln d / d)^2 is always appended.
    #[arg(long, default_values_t = [0.05f64, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0])]
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    None,
    RandomFlip,
    AdversarialMargin,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 8)]
    pub n: usize,

    /// Concept cube dimension.
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Fit degree.
    #[arg(long, default_value_t = 2)]
    pub d: u32,

    /// Training samples per run.
    #[arg(long, default_value_t = 4000)]
    pub m: u64,

    /// Label noise model.
    #[arg(long, value_enum, default_value_t = NoiseKind::None)]
    pub noise: NoiseKind,

    /// Flip rate or margin budget for the noisy models.
    #[arg(long, default_value_t = 0.1)]
    pub noise_param: f64,

    /// Base seed; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of independent runs.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,

    /// Fresh samples for error estimation.
    #[arg(long, default_value_t = 20_000)]
    pub m_test: u64,

    /// Threshold grid size.
    #[arg(long, default_value_t = 201)]
    pub thresholds: usize,

    /// Also write the first run's training set here in the binary
    /// dataset format.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

/// Execute a parsed command line; the return value is the process exit
/// code for a run that produced a result (selftest reports failures as
/// exit 1 after printing every check).
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Theta(a) => run_theta(cli, a),
        Command::Coeffs(a) => run_coeffs(cli, a),
        Command::Lowdeg(a) => run_lowdeg(cli, a),
        Command::Witness(a) => run_witness(cli, a),
        Command::L1degree(a) => run_l1degree(cli, a),
        Command::Ganzburg(a) => run_ganzburg(cli, a),
        Command::Gns(a) => run_gns(cli, a),
        Command::Learn(a) => run_learn(cli, a),
        Command::Selftest => run_selftest(cli),
    }
}

/// Exit code for a failed run: 2 for validation, 3 for budget refusals,
/// 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. } | Error::DimensionMismatch(_) => 2,
        Error::BudgetExceeded(_) => 3,
        _ => 1,
    }
}

fn emit(cli: &Cli, content: &str) -> Result<i32> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
        }
    }
    Ok(0)
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

/// Rows as a JSON array of sorted-key objects, for tables whose primary
/// rendering is CSV.
fn rows_json<T: serde::Serialize>(rows: &[T]) -> Result<String> {
    sorted_json(&rows)
}

fn run_theta(cli: &Cli, a: &ThetaArgs) -> Result<i32> {
    let mut rows = Vec::with_capacity(a.k.len());
    for &k in &a.k {
        let theta = theta_k(k, a.tol)?;
        let (lower, upper) = mills_bounds(k)?;
        rows.push(ThetaRow { k, theta, lower, upper });
    }
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => theta_table_csv(&rows)?,
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row {
                k: usize,
                theta: f64,
                lower: f64,
                upper: f64,
            }
            rows_json(
                &rows
                    .iter()
                    .map(|r| Row { k: r.k, theta: r.theta, lower: r.lower, upper: r.upper })
                    .collect::<Vec<_>>(),
            )?
        }
    };
    emit(cli, &content)
}

fn run_coeffs(cli: &Cli, a: &CoeffsArgs) -> Result<i32> {
    let rows = match (a.theta, a.k) {
        (Some(theta), None) => {
            let mut rows = Vec::new();
            for j in 0..=a.j_max {
                rows.push(CoeffRow {
                    index: j.to_string(),
                    coefficient: interval_coeff(theta, j)?,
                });
            }
            rows
        }
        (None, Some(k)) => {
            let spec = CubeSpec::new(k)?;
            let mut rows = Vec::new();
            for j in enumerate_multi_indices(k, a.d, Parity::All, true) {
                let index = j
                    .entries()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                rows.push(CoeffRow {
                    index,
                    coefficient: cube_coeff(&spec, &j)?,
                });
            }
            rows
        }
        _ => {
            return Err(Error::invalid(
                "theta",
                "pass exactly one of --theta (interval) or --k (cube)",
            ))
        }
    };
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => coeff_table_csv(&rows)?,
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row<'a> {
                index: &'a str,
                coefficient: f64,
            }
            rows_json(
                &rows
                    .iter()
                    .map(|r| Row { index: &r.index, coefficient: r.coefficient })
                    .collect::<Vec<_>>(),
            )?
        }
    };
    emit(cli, &content)
}

fn run_lowdeg(cli: &Cli, a: &LowdegArgs) -> Result<i32> {
    let mut rows = Vec::new();
    for &k in &a.k {
        let spec = CubeSpec::new(k)?;
        for &d in &a.d {
            rows.push(cube_low_degree_weight(&spec, d)?);
        }
    }
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => weight_table_csv(&rows)?,
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row {
                k: usize,
                d: u32,
                gamma: f64,
                bound: f64,
                ratio: f64,
                term_count: u64,
            }
            rows_json(
                &rows
                    .iter()
                    .map(|r| Row {
                        k: r.k,
                        d: r.d,
                        gamma: r.gamma,
                        bound: r.bound,
                        ratio: r.gamma / r.bound,
                        term_count: u64::try_from(r.term_count).unwrap_or(u64::MAX),
                    })
                    .collect::<Vec<_>>(),
            )?
        }
    };
    emit(cli, &content)
}

fn run_witness(cli: &Cli, a: &WitnessArgs) -> Result<i32> {
    if cli.format == Some(Format::Csv) {
        return Err(Error::invalid("format", "witness reports are JSON only"));
    }
    let spec = CubeSpec::new(a.k)?;
    let grid = gauss_hermite_grid(a.k, a.q, DEFAULT_POINT_BUDGET)?;
    let f = spec.on_grid(&grid)?;
    let report = build_witness(&f, a.d, a.stop_tol, a.max_iter)?;
    emit(cli, &witness_json(&report))
}

fn run_l1degree(cli: &Cli, a: &L1degreeArgs) -> Result<i32> {
    let (f, id) = match a.function {
        FunctionId::Cube => {
            let spec = CubeSpec::new(a.k)?;
            let grid = gauss_hermite_grid(a.k, a.q.unwrap_or(80), DEFAULT_POINT_BUDGET)?;
            (spec.on_grid(&grid)?, format!("cube_{}", a.k))
        }
        FunctionId::Sign => {
            let grid = gauss_hermite_grid(1, a.q.unwrap_or(400), DEFAULT_POINT_BUDGET)?;
            let f = GridFunction::from_fn(Arc::clone(&grid), |x| {
                if x[0] >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            });
            (f, "sign".to_string())
        }
        FunctionId::Interval => {
            let spec = CubeSpec::new(1)?;
            let grid = gauss_hermite_grid(1, a.q.unwrap_or(400), DEFAULT_POINT_BUDGET)?;
            (spec.on_grid(&grid)?, "interval".to_string())
        }
    };
    let rows = degree_sweep(&f, &id, &a.d)?;
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => degree_sweep_csv(&rows)?,
        Format::Json => rows_json(&rows)?,
    };
    emit(cli, &content)
}

fn run_ganzburg(cli: &Cli, a: &GanzburgArgs) -> Result<i32> {
    let report = ganzburg_thresholds(&a.eps)?;
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => {
            let rows = report.thresholds.iter().map(|&(eps, d)| {
                vec![eps.to_string(), d.to_string(), report.slope.to_string()]
            });
            crate::report::raw_csv(&["eps", "degree", "fitted_exponent"], rows)?
        }
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                thresholds: Vec<(f64, u32)>,
                slope: f64,
                drift: Option<f64>,
                converged: bool,
            }
            sorted_json(&Doc {
                thresholds: report.thresholds.clone(),
                slope: report.slope,
                drift: report.drift,
                converged: report.converged,
            })?
        }
    };
    emit(cli, &content)
}

fn run_gns(cli: &Cli, a: &GnsArgs) -> Result<i32> {
    if a.d < 2 {
        return Err(Error::invalid("d", "the comparison needs d >= 2"));
    }
    let spec = CubeSpec::new(a.k)?;
    let grid = gauss_hermite_grid(a.k, a.q, DEFAULT_POINT_BUDGET)?;
    let f = spec.on_grid(&grid)?;
    let sweep = degree_sweep(&f, "cube", &[a.d])?;
    let (lp_e_star, alpha_star) = (sweep[0].e_star, sweep[0].alpha_star);
    let log_d = f64::from(a.d).ln();
    let rho_star = (log_d / f64::from(a.d)).powi(2);
    let mut rhos = a.rho.clone();
    rhos.push(rho_star);
    let mut rows = Vec::with_capacity(rhos.len());
    for rho in rhos {
        let gns_value = gns_cube_semianalytic(&spec, rho)?;
        rows.push(GnsRow {
            k: a.k,
            d: a.d,
            rho,
            gns_value,
            gns_over_logd: gns_value / log_d,
            lp_e_star,
            resilience_alpha_star: alpha_star,
        });
    }
    let content = match format_or(cli, Format::Csv) {
        Format::Csv => gns_table_csv(&rows)?,
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row {
                k: usize,
                d: u32,
                rho: f64,
                gns_value: f64,
                gns_over_logd: f64,
                lp_e_star: f64,
                resilience_alpha_star: f64,
            }
            rows_json(
                &rows
                    .iter()
                    .map(|r| Row {
                        k: r.k,
                        d: r.d,
                        rho: r.rho,
                        gns_value: r.gns_value,
                        gns_over_logd: r.gns_over_logd,
                        lp_e_star: r.lp_e_star,
                        resilience_alpha_star: r.resilience_alpha_star,
                    })
                    .collect::<Vec<_>>(),
            )?
        }
    };
    emit(cli, &content)
}

fn noise_model(kind: NoiseKind, param: f64) -> NoiseModel {
    match kind {
        NoiseKind::None => NoiseModel::None,
        NoiseKind::RandomFlip => NoiseModel::RandomFlip(param),
        NoiseKind::AdversarialMargin => NoiseModel::AdversarialMargin(param),
    }
}

fn run_learn(cli: &Cli, a: &LearnArgs) -> Result<i32> {
    if cli.format == Some(Format::Csv) {
        return Err(Error::invalid("format", "experiment records are JSON lines only"));
    }
    if a.seeds == 0 {
        return Err(Error::invalid("seeds", "need at least one run"));
    }
    let noise = noise_model(a.noise, a.noise_param);
    let mut records = Vec::with_capacity(a.seeds as usize);
    for i in 0..a.seeds {
        let s = a.seed + i;
        let concept = sample_concept(a.n, a.k, s)?;
        let data = generate_dataset(&concept, a.m, noise, s + 0x0100_0000)?;
        if i == 0 {
            if let Some(path) = &a.snapshot {
                let file = std::fs::File::create(path)?;
                write_rlab(std::io::BufWriter::new(file), &data)?;
            }
        }
        let hyp = l1_regression_learn(&data, a.d, a.thresholds)?;
        let (test_error, excess) = evaluate_error(
            |x| hyp.classify(x),
            &concept,
            noise,
            a.m_test,
            s + 0x0200_0000,
        )?;
        records.push(ExperimentRecord {
            seed: s,
            n: a.n,
            k: a.k,
            d: a.d,
            m: a.m,
            noise,
            test_error,
            opt: noise.realized_opt(),
            excess,
        });
    }
    emit(cli, &experiment_jsonl(&records)?)
}

struct Selftest {
    lines: Vec<String>,
    failed: bool,
}

impl Selftest {
    fn check(&mut self, name: &str, outcome: Result<bool>) {
        let line = match outcome {
            Ok(true) => format!("ok   {name}"),
            Ok(false) => {
                self.failed = true;
                format!("FAIL {name}")
            }
            Err(e) => {
                self.failed = true;
                format!("FAIL {name}: {e}")
            }
        };
        self.lines.push(line);
    }
}

fn run_selftest(cli: &Cli) -> Result<i32> {
    use crate::hermite_core::{gauss_legendre_1d, hbar_table_seeded};
    use crate::util::{csum, normal_pdf};

    let mut st = Selftest { lines: Vec::new(), failed: false };

    st.check("hermite orthonormality (Q=25, degrees to 20)", (|| {
        let grid = gauss_hermite_grid(1, 25, DEFAULT_POINT_BUDGET)?;
        let xs: Vec<f64> = (0..grid.len()).map(|s| grid.point(s)[0]).collect();
        let table = hbar_table_seeded(20, &xs, None);
        let mut worst = 0.0f64;
        for i in 0..=20usize {
            for j in i..=20usize {
                let ip = csum(
                    grid.weights()
                        .iter()
                        .enumerate()
                        .map(|(s, &w)| w * table[i][s] * table[j][s]),
                );
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        Ok(worst <= 1e-10)
    })());

    st.check("interval coefficients match quadrature (theta=1)", (|| {
        let (nodes, weights) = gauss_legendre_1d(200)?;
        let mut worst = 0.0f64;
        for j in 0..=20u32 {
            let analytic = interval_coeff(1.0, j)?;
            // Direct quadrature of the positive-part inner product over
            // [-1, 1], mapped from the Legendre reference interval.
            let xs: Vec<f64> = nodes.clone();
            let table = hbar_table_seeded(j, &xs, None);
            let direct = csum(nodes.iter().enumerate().map(|(s, &x)| {
                weights[s] * normal_pdf(x) * table[j as usize][s]
            }));
            worst = worst.max((analytic - direct).abs());
        }
        Ok(worst <= 1e-8)
    })());

    st.check("threshold sandwich on a log grid", (|| {
        let mut k = 8usize;
        while k <= 1_000_000 {
            let t = theta_k(k, 1e-12)?;
            let (l, u) = mills_bounds(k)?;
            if !(l <= t && t <= u) {
                return Ok(false);
            }
            k *= 4;
        }
        Ok(true)
    })());

    st.check("low-degree weight DP matches enumeration (k=3, d=4)", (|| {
        let spec = CubeSpec::new(3)?;
        let report = cube_low_degree_weight(&spec, 4)?;
        let mut brute = 0.0f64;
        for j in enumerate_multi_indices(3, 4, Parity::All, false) {
            let c = cube_coeff(&spec, &j)?;
            brute += c * c;
        }
        Ok((report.gamma - brute).abs() <= 1e-12)
    })());

    st.check("LP duality identity (cube_2, Q=40, d=2)", (|| {
        let spec = CubeSpec::new(2)?;
        let grid = gauss_hermite_grid(2, 40, DEFAULT_POINT_BUDGET)?;
        let f = spec.on_grid(&grid)?;
        let rows = degree_sweep(&f, "cube_2", &[2])?;
        Ok(rows[0].duality_residual <= 1e-6)
    })());

    st.check("witness certificates (cube_2, Q=40, d=2)", (|| {
        let spec = CubeSpec::new(2)?;
        let grid = gauss_hermite_grid(2, 40, DEFAULT_POINT_BUDGET)?;
        let f = spec.on_grid(&grid)?;
        let r = build_witness(&f, 2, 1e-6, 30)?;
        Ok(r.max_low_coeff <= 1e-6 && r.sup_norm_g <= 1.0 + 1e-6)
    })());

    st.check("noise sensitivity closed forms agree with sampling", (|| {
        let analytic = gns_sign_analytic(0.5)?;
        let mc = gns_estimate(1, |x| x[0].signum(), 0.5, 200_000, 7)?;
        if (mc.value - analytic).abs() > 3.0 * mc.stderr {
            return Ok(false);
        }
        let spec = CubeSpec::new(2)?;
        let semi = gns_cube_semianalytic(&spec, 0.1)?;
        Ok((semi - 0.21795153699162129).abs() <= 1e-9)
    })());

    st.check("learner recovers an embedded interval", (|| {
        // The slab's acceptance region is unbounded orthogonally to the
        // hidden direction, which amplifies coefficient noise far from
        // the origin; n = 2 with m = 4000 keeps that effect small.
        let concept = sample_concept(2, 1, 5)?;
        let data = generate_dataset(&concept, 4_000, NoiseModel::None, 6)?;
        let hyp = l1_regression_learn(&data, 2, 101)?;
        let (err, _) =
            evaluate_error(|x| hyp.classify(x), &concept, NoiseModel::None, 10_000, 7)?;
        Ok(err <= 0.08)
    })());

    st.check("report emitters are byte-stable", (|| {
        let rows = [ThetaRow { k: 8, theta: 1.5, lower: 1.2, upper: 2.0 }];
        Ok(theta_table_csv(&rows)? == theta_table_csv(&rows)?)
    })());

    let mut content = st.lines.join("\n");
    content.push('\n');
    emit(cli, &content)?;
    Ok(if st.failed { 1 } else { 0 })
}
