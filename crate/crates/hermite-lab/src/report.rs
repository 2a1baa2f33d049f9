//! Deterministic serialization of result tables and reports.
//!
//! Every emitter produces byte-identical output for identical input.
//! Floats go through Rust's shortest-roundtrip formatting, CSV is RFC 4180
//! (header row, CRLF record endings, quotes only where needed), and JSON
//! objects keep their keys sorted.

use crate::cube_analysis::WeightReport;
use crate::l1_degree::DegreeSweepRow;
use crate::learner_harness::ExperimentRecord;
use crate::resilience_engine::WitnessReport;
use crate::{Error, Result};

/// One row of a `theta` table: the balancing threshold and its sandwich.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRow {
    pub k: usize,
    pub theta: f64,
    pub lower: f64,
    pub upper: f64,
}

/// One labelled coefficient, e.g. `("2,0", -0.38)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffRow {
    pub index: String,
    pub coefficient: f64,
}

/// One row of the noise-sensitivity comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsRow {
    pub k: usize,
    pub d: u32,
    pub rho: f64,
    pub gns_value: f64,
    pub gns_over_logd: f64,
    pub lp_e_star: f64,
    pub resilience_alpha_star: f64,
}

fn csv_from_records<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(row.into_iter().map(|field| field.into_bytes()))
            .map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes)
        .map_err(|_| Error::Io(std::io::Error::other("csv output was not UTF-8")))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// CSV with a caller-supplied header and preformatted fields, for tables
/// that only one study emits.
pub fn raw_csv<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    csv_from_records(header, rows)
}

/// `k, theta, lower, upper` table.
pub fn theta_table_csv(rows: &[ThetaRow]) -> Result<String> {
    csv_from_records(
        &["k", "theta", "lower", "upper"],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.theta.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
            ]
        }),
    )
}

/// `index, coefficient` table.
pub fn coeff_table_csv(rows: &[CoeffRow]) -> Result<String> {
    csv_from_records(
        &["index", "coefficient"],
        rows.iter()
            .map(|r| vec![r.index.clone(), r.coefficient.to_string()]),
    )
}

/// `k, d, gamma, bound, ratio, term_count` table; `ratio = gamma / bound`.
pub fn weight_table_csv(rows: &[WeightReport]) -> Result<String> {
    csv_from_records(
        &["k", "d", "gamma", "bound", "ratio", "term_count"],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.d.to_string(),
                r.gamma.to_string(),
                r.bound.to_string(),
                (r.gamma / r.bound).to_string(),
                r.term_count.to_string(),
            ]
        }),
    )
}

/// `function_id, d, e_star, alpha_star, duality_residual, grid_Q,
/// solver_status` table.
pub fn degree_sweep_csv(rows: &[DegreeSweepRow]) -> Result<String> {
    csv_from_records(
        &[
            "function_id",
            "d",
            "e_star",
            "alpha_star",
            "duality_residual",
            "grid_Q",
            "solver_status",
        ],
        rows.iter().map(|r| {
            vec![
                r.function_id.clone(),
                r.d.to_string(),
                r.e_star.to_string(),
                r.alpha_star.to_string(),
                r.duality_residual.to_string(),
                r.grid_q.to_string(),
                r.solver_status.to_string(),
            ]
        }),
    )
}

/// `k, d, rho, gns_value, gns_over_logd, lp_e_star, resilience_alpha_star`
/// table.
pub fn gns_table_csv(rows: &[GnsRow]) -> Result<String> {
    csv_from_records(
        &[
            "k",
            "d",
            "rho",
            "gns_value",
            "gns_over_logd",
            "lp_e_star",
            "resilience_alpha_star",
        ],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.d.to_string(),
                r.rho.to_string(),
                r.gns_value.to_string(),
                r.gns_over_logd.to_string(),
                r.lp_e_star.to_string(),
                r.resilience_alpha_star.to_string(),
            ]
        }),
    )
}

/// Witness construction report as a JSON document with sorted keys: the
/// scalar certification summary plus the per-iteration trace.
pub fn witness_json(r: &WitnessReport) -> String {
    let iterations: Vec<serde_json::Value> = r
        .iterations
        .iter()
        .map(|it| {
            serde_json::json!({
                "i": it.i,
                "tau": it.tau,
                "low_norm": it.low_norm,
                "sup_norm": it.sup_norm,
                "l1_drift": it.l1_drift,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "k": r.k,
        "d": r.d,
        "alpha_predicted": r.alpha_predicted,
        "alpha_achieved": r.alpha_achieved,
        "sup_norm_g": r.sup_norm_g,
        "max_low_coeff": r.max_low_coeff,
        "iterations": iterations,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("in-memory JSON");
    s.push('\n');
    s
}

/// Any serializable value as a pretty JSON document with sorted keys.
pub fn sorted_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let mut s = serde_json::to_string_pretty(&v).expect("in-memory JSON");
    s.push('\n');
    Ok(s)
}

/// Experiment records as JSON lines, one compact sorted-key object each.
pub fn experiment_jsonl(records: &[ExperimentRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let v = serde_json::to_value(r)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        out.push_str(&serde_json::to_string(&v).expect("in-memory JSON"));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner_harness::NoiseModel;

    #[test]
    fn theta_table_uses_crlf_and_roundtrip_floats() {
        let rows = [ThetaRow { k: 1000, theta: 2.26, lower: 2.2, upper: 3.72 }];
        let s = theta_table_csv(&rows).unwrap();
        assert_eq!(s, "k,theta,lower,upper\r\n1000,2.26,2.2,3.72\r\n");
    }

    #[test]
    fn sweep_table_quotes_only_when_needed() {
        use crate::l1_degree::SolverStatus;
        let rows = [DegreeSweepRow {
            function_id: "and(sign, interval)".into(),
            d: 6,
            e_star: 0.25,
            alpha_star: 0.75,
            duality_residual: 1e-12,
            grid_q: 64,
            solver_status: SolverStatus::Optimal,
        }];
        let s = degree_sweep_csv(&rows).unwrap();
        assert_eq!(
            s,
            "function_id,d,e_star,alpha_star,duality_residual,grid_Q,solver_status\r\n\
             \"and(sign, interval)\",6,0.25,0.75,0.000000000001,64,optimal\r\n"
        );
    }

    #[test]
    fn weight_table_carries_ratio_and_count() {
        let rows = [WeightReport {
            k: 1024,
            d: 2,
            gamma: 0.5,
            bound: 2.0,
            term_count: 180_007_424,
        }];
        let s = weight_table_csv(&rows).unwrap();
        assert_eq!(
            s,
            "k,d,gamma,bound,ratio,term_count\r\n1024,2,0.5,2,0.25,180007424\r\n"
        );
    }

    #[test]
    fn gns_table_layout() {
        let rows = [GnsRow {
            k: 2,
            d: 2,
            rho: 0.1,
            gns_value: 0.2,
            gns_over_logd: 0.3,
            lp_e_star: 0.55,
            resilience_alpha_star: 0.45,
        }];
        let s = gns_table_csv(&rows).unwrap();
        assert!(s.starts_with(
            "k,d,rho,gns_value,gns_over_logd,lp_e_star,resilience_alpha_star\r\n"
        ));
        assert!(s.ends_with("2,2,0.1,0.2,0.3,0.55,0.45\r\n"));
    }

    #[test]
    fn experiment_lines_sort_keys_and_tag_noise() {
        let recs = [
            ExperimentRecord {
                seed: 7,
                n: 8,
                k: 2,
                d: 6,
                m: 100,
                noise: NoiseModel::None,
                test_error: 0.25,
                opt: 0.0,
                excess: 0.25,
            },
            ExperimentRecord {
                seed: 8,
                n: 8,
                k: 2,
                d: 6,
                m: 100,
                noise: NoiseModel::RandomFlip(0.1),
                test_error: 0.5,
                opt: 0.1,
                excess: 0.4,
            },
        ];
        let s = experiment_jsonl(&recs).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "{\"d\":6,\"excess\":0.25,\"k\":2,\"m\":100,\"n\":8,\"noise\":\"none\",\
             \"opt\":0.0,\"seed\":7,\"test_error\":0.25}"
        );
        assert!(lines[1].contains("\"noise\":{\"random_flip\":0.1}"));
    }

    #[test]
    fn witness_document_sorts_keys_at_both_levels() {
        use crate::hermite_core::grid::DEFAULT_POINT_BUDGET;
        use crate::hermite_core::{gauss_hermite_grid, GridFunction};
        use crate::resilience_engine::IterateState;

        let g = gauss_hermite_grid(1, 3, DEFAULT_POINT_BUDGET).unwrap();
        let zero = GridFunction::from_fn(g, |_| 0.0);
        let r = WitnessReport {
            k: 1,
            d: 2,
            alpha_predicted: 0.5,
            alpha_achieved: 0.25,
            sup_norm_g: 1.0,
            max_low_coeff: 1e-9,
            witness: zero.clone(),
            normalized: true,
            iterations: vec![IterateState {
                i: 1,
                f: zero,
                tau: 0.125,
                low_norm: 0.5,
                sup_norm: 1.5,
                l1_drift: 0.0,
            }],
            flags: Vec::new(),
        };
        let s = witness_json(&r);
        let order = [
            "\"alpha_achieved\"",
            "\"alpha_predicted\"",
            "\"d\"",
            "\"iterations\"",
            "\"i\"",
            "\"l1_drift\"",
            "\"low_norm\"",
            "\"sup_norm\"",
            "\"tau\"",
            "\"k\"",
            "\"max_low_coeff\"",
            "\"sup_norm_g\"",
        ];
        let mut at = 0;
        for key in order {
            let pos = s[at..].find(key).unwrap_or_else(|| panic!("missing {key}"));
            at += pos + key.len();
        }
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let rows = [ThetaRow { k: 8, theta: 1.5, lower: 1.2, upper: 2.0 }];
        assert_eq!(theta_table_csv(&rows).unwrap(), theta_table_csv(&rows).unwrap());
    }
}
