//! Fixed-schema CSV emission and parsing.
//!
//! The base schema is versioned and shared by `simulate` and `sweep`; sweep
//! appends the analytic-overlay columns. Floats print through Rust's
//! shortest round-trip formatting so every row re-parses losslessly.

use crate::config::SPEC_VERSION;
use flowbal_core::{ConfigError, PolicyKind, RunSummary, StabilityFlag};

pub const BASE_HEADER: &str = "spec_version,experiment,policy,M,lambda,eps,beta,w,seed,slots,\
warmup,mean_total_workload,ci_halfwidth,mean_delay,departures,mean_w_perp_sq,mean_unused,\
stability_flag";

pub const SWEEP_EXTRA: &str = "eps_times_mean_workload,analytic_jlw,analytic_rlb";

pub const LOSS_CURVE_HEADER: &str =
    "spec_version,experiment,delta,p1,p2,join_prob,throughput_loss,supportable_load";

pub fn sweep_header() -> String {
    format!("{BASE_HEADER},{SWEEP_EXTRA}")
}

/// One emitted result row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub policy: PolicyKind,
    pub num_aps: usize,
    pub lambda: f64,
    pub eps: f64,
    /// NaN for non-two-point size laws.
    pub beta: f64,
    pub w: f64,
    pub seed: u64,
    pub slots: u64,
    pub warmup: u64,
    pub summary: RunSummary,
    pub analytic_jlw: Option<f64>,
    pub analytic_rlb: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn format_base(&self) -> String {
        let s = &self.summary;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            SPEC_VERSION,
            self.experiment,
            self.policy,
            self.num_aps,
            self.lambda,
            self.eps,
            self.beta,
            self.w,
            self.seed,
            self.slots,
            self.warmup,
            s.mean_total_workload,
            s.ci_halfwidth,
            s.mean_delay,
            s.departures,
            s.mean_w_perp_sq,
            s.mean_unused,
            s.stability,
        )
    }

    pub fn format_sweep(&self) -> String {
        format!(
            "{},{},{},{}",
            self.format_base(),
            self.eps * self.summary.mean_total_workload,
            opt(self.analytic_jlw),
            opt(self.analytic_rlb),
        )
    }

    /// Parse a base or sweep row back into its fields.
    pub fn parse(line: &str) -> Result<Row, ConfigError> {
        let bad = |field: &str, what: &str| ConfigError::new(field, what.to_string());
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 18 && cols.len() != 21 {
            return Err(bad("row", &format!("expected 18 or 21 columns, got {}", cols.len())));
        }
        if cols[0] != SPEC_VERSION {
            return Err(bad("spec_version", &format!("unsupported version {:?}", cols[0])));
        }
        let f = |i: usize, field: &str| -> Result<f64, ConfigError> {
            cols[i].parse::<f64>().map_err(|_| bad(field, &format!("bad number {:?}", cols[i])))
        };
        let u = |i: usize, field: &str| -> Result<u64, ConfigError> {
            cols[i].parse::<u64>().map_err(|_| bad(field, &format!("bad integer {:?}", cols[i])))
        };
        let of = |i: usize, field: &str| -> Result<Option<f64>, ConfigError> {
            if cols.len() <= i || cols[i].is_empty() { Ok(None) } else { f(i, field).map(Some) }
        };
        Ok(Row {
            experiment: cols[1].to_string(),
            policy: cols[2].parse()?,
            num_aps: u(3, "M")? as usize,
            lambda: f(4, "lambda")?,
            eps: f(5, "eps")?,
            beta: f(6, "beta")?,
            w: f(7, "w")?,
            seed: u(8, "seed")?,
            slots: u(9, "slots")?,
            warmup: u(10, "warmup")?,
            summary: RunSummary {
                mean_total_workload: f(11, "mean_total_workload")?,
                ci_halfwidth: f(12, "ci_halfwidth")?,
                mean_delay: f(13, "mean_delay")?,
                departures: u(14, "departures")?,
                mean_w_perp_sq: f(15, "mean_w_perp_sq")?,
                mean_unused: f(16, "mean_unused")?,
                stability: cols[17].parse::<StabilityFlag>()?,
            },
            analytic_jlw: of(19, "analytic_jlw")?,
            analytic_rlb: of(20, "analytic_rlb")?,
        })
    }
}

/// One loss-curve row over the on-probability gap `delta`, with
/// `p1 = (1 + delta)/2` and `p2 = (1 - delta)/2`.
pub fn loss_curve_row(
    experiment: &str,
    delta: f64,
) -> Result<String, ConfigError> {
    let p1 = (1.0 + delta) / 2.0;
    let p2 = (1.0 - delta) / 2.0;
    let join = flowbal_core::analysis::bcf_join_prob(p1, p2)?;
    let loss = flowbal_core::analysis::bcf_throughput_loss(p1, p2)?;
    let load = flowbal_core::analysis::bcf_supportable_load(p1, p2)?;
    Ok(format!("{SPEC_VERSION},{experiment},{delta},{p1},{p2},{join},{loss},{load}"))
}
