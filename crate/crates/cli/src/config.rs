//! JSON experiment configuration.
//!
//! Probabilities and other exactness-sensitive numbers may be written as
//! decimal strings (`"0.1"`) or as plain JSON numbers; both parse to the
//! same f64. Unknown fields are rejected so typos surface as errors.

use flowbal_core::model::{ArrivalLaw, ChannelLaw, FlowSizeLaw, SystemConfig};
use flowbal_core::rng::derive_run_seed;
use flowbal_core::{analysis, engine, ConfigError, PolicyKind, RunConfig};
use serde::de::{self, Deserializer};
use serde::Deserialize;
use std::fmt;
use std::path::Path;

/// Schema tag written into every CSV row.
pub const SPEC_VERSION: &str = "1";

/// A number that accepts both `0.1` and `"0.1"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Dec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
                Ok(Dec(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
                v.trim().parse::<f64>().map(Dec).map_err(|_| {
                    E::custom(format!("expected a decimal number, got {v:?}"))
                })
            }
        }
        d.deserialize_any(V)
    }
}

fn decs(v: &[Dec]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    LambdaSweep,
    EpsSweep,
    MSweep,
    BetaSweep,
    BcfLossCurve,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizesSpec {
    /// Sizes 10 or 10*beta packets with the mixture pinned by the mean
    /// workload `w`. `w` is derived from the AP count in m-sweep mode.
    TwoPoint {
        beta: Dec,
        #[serde(default)]
        w: Option<Dec>,
    },
    /// Explicit size pmf in packets.
    Pmf { support: Vec<u32>, probs: Vec<Dec> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProbsSpec {
    /// One row shared by every AP.
    Shared(Vec<Dec>),
    /// One row per AP.
    PerAp(Vec<Vec<Dec>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub rates: Vec<u32>,
    pub probs: ProbsSpec,
}

impl ChannelSpec {
    fn reference() -> Self {
        ChannelSpec {
            rates: vec![0, 1, 5, 10],
            probs: ProbsSpec::Shared(vec![Dec(0.1), Dec(0.2), Dec(0.5), Dec(0.2)]),
        }
    }

    fn build(&self, num_aps: usize) -> Result<ChannelLaw, ConfigError> {
        match &self.probs {
            ProbsSpec::Shared(row) => ChannelLaw::shared(self.rates.clone(), decs(row), num_aps),
            ProbsSpec::PerAp(rows) => {
                if rows.len() != num_aps {
                    return Err(ConfigError::new(
                        "channel.probs",
                        format!("{} rows for {num_aps} APs", rows.len()),
                    ));
                }
                ChannelLaw::new(self.rates.clone(), rows.iter().map(|r| decs(r)).collect())
            }
        }
    }
}

fn default_replications() -> u32 {
    1
}

/// One experiment: a mode, a parameter grid, and run protocol knobs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub policies: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub num_aps: Option<usize>,
    #[serde(default)]
    pub flow_sizes: Option<SizesSpec>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub lambda: Option<Dec>,
    #[serde(default)]
    pub eps: Option<Dec>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<Dec>>,
    #[serde(default)]
    pub eps_grid: Option<Vec<Dec>>,
    #[serde(default)]
    pub m_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub beta_grid: Option<Vec<Dec>>,
    #[serde(default)]
    pub delta_grid: Option<Vec<Dec>>,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub batch_count: Option<u64>,
    #[serde(default)]
    pub guard: Option<u64>,
    /// Exit 3 when the workload guard trips. Defaults to true under
    /// `simulate` and false under `sweep`.
    #[serde(default)]
    pub fail_on_instability: Option<bool>,
    #[serde(default)]
    pub out: Option<String>,
}

/// One fully resolved grid point. Replications and policies fan out from it.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub index: u64,
    pub num_aps: usize,
    pub lambda: f64,
    /// Load gap `M - lambda * w`.
    pub eps: f64,
    /// Mean per-flow workload.
    pub w: f64,
    /// Two-point spread parameter; NaN for pmf size laws.
    pub beta: f64,
    pub sizes: FlowSizeLaw,
    pub channels: ChannelLaw,
    pub horizon: u64,
    pub warmup: u64,
    pub batch_count: u64,
    pub guard: u64,
    /// Heavy-traffic predictions at this point's geometry, when the size
    /// law is two-point.
    pub analytic_jlw: Option<f64>,
    pub analytic_rlb: Option<f64>,
}

/// The full expansion of an experiment: points crossed with policies and
/// replications, in emission order.
#[derive(Debug, Clone)]
pub struct Plan {
    pub experiment: String,
    pub base_seed: u64,
    pub policies: Vec<PolicyKind>,
    pub replications: u32,
    pub points: Vec<GridPoint>,
    pub fail_on_instability: Option<bool>,
    pub out: Option<String>,
}

/// One executable job within a plan.
#[derive(Debug, Clone)]
pub struct Job {
    pub point: GridPoint,
    pub policy: PolicyKind,
    pub replication: u32,
    pub seed: u64,
}

impl Plan {
    /// All jobs in deterministic emission order: grid point, then policy,
    /// then replication.
    pub fn jobs(&self) -> Vec<Job> {
        let mut out = Vec::new();
        for point in &self.points {
            for &policy in &self.policies {
                for rep in 0..self.replications {
                    // The seed ignores the policy so policies share arrival
                    // and size paths at each (point, replication).
                    let seed = derive_run_seed(
                        self.base_seed,
                        &self.experiment,
                        point.index,
                        u64::from(rep),
                    );
                    out.push(Job { point: point.clone(), policy, replication: rep, seed });
                }
            }
        }
        out
    }

    pub fn run_config(&self, job: &Job) -> Result<RunConfig, ConfigError> {
        let p = &job.point;
        let system = SystemConfig {
            num_aps: p.num_aps,
            arrivals: ArrivalLaw::bernoulli(p.lambda)?,
            sizes: p.sizes.clone(),
            channels: p.channels.clone(),
            policy: job.policy,
        };
        let mut cfg = RunConfig::new(system, job.seed);
        cfg.horizon = p.horizon;
        cfg.warmup = p.warmup;
        cfg.batch_count = p.batch_count;
        cfg.guard = p.guard;
        cfg.align_warmup();
        Ok(cfg)
    }
}

/// Grid of closed-form points for the loss-curve mode; no simulation runs.
#[derive(Debug, Clone)]
pub struct LossCurve {
    pub experiment: String,
    pub deltas: Vec<f64>,
    pub out: Option<String>,
}

/// What a config file expands to.
#[derive(Debug, Clone)]
pub enum Expanded {
    Runs(Plan),
    Analytic(LossCurve),
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn parsed_policies(&self) -> Result<Vec<PolicyKind>, ConfigError> {
        if self.policies.is_empty() {
            return Err(ConfigError::new("policies", "need at least one policy"));
        }
        self.policies.iter().map(|s| s.parse()).collect()
    }

    /// Size law plus the beta column value (NaN for pmf laws). `w_override`
    /// is the m-sweep tie of w to the AP count.
    fn sizes_for(&self, w_override: Option<f64>) -> Result<(FlowSizeLaw, f64), ConfigError> {
        let spec = match self.flow_sizes.clone() {
            Some(spec) => spec,
            None => {
                // Reference defaults; m-sweep retargets w without a clash.
                let beta = 20.0;
                let w = w_override.unwrap_or(5.0);
                return Ok((FlowSizeLaw::two_point(beta, w)?, beta));
            }
        };
        match spec {
            SizesSpec::TwoPoint { beta, w } => {
                let w = match (w_override, w) {
                    (Some(tied), Some(cfg)) if (cfg.0 - tied).abs() > 1e-12 => {
                        return Err(ConfigError::new(
                            "flow_sizes.w",
                            format!("m-sweep ties w to the AP count; drop w or set it to {tied}"),
                        ));
                    }
                    (Some(tied), _) => tied,
                    (None, Some(cfg)) => cfg.0,
                    (None, None) => {
                        return Err(ConfigError::new("flow_sizes.w", "required outside m-sweep"))
                    }
                };
                Ok((FlowSizeLaw::two_point(beta.0, w)?, beta.0))
            }
            SizesSpec::Pmf { support, probs } => {
                if w_override.is_some() {
                    return Err(ConfigError::new(
                        "flow_sizes",
                        "m-sweep requires the two-point size law",
                    ));
                }
                Ok((FlowSizeLaw::bounded_iid(support, decs(&probs))?, f64::NAN))
            }
        }
    }

    fn point(
        &self,
        index: u64,
        num_aps: usize,
        lambda: f64,
        w_override: Option<f64>,
        beta_override: Option<f64>,
    ) -> Result<GridPoint, ConfigError> {
        let (sizes, beta) = match beta_override {
            // beta-sweep: keep the configured w, replace beta.
            Some(b) => {
                let w = match &self.flow_sizes {
                    None => 5.0,
                    Some(SizesSpec::TwoPoint { w: Some(w), .. }) => w.0,
                    _ => {
                        return Err(ConfigError::new(
                            "flow_sizes",
                            "beta-sweep requires a two-point law with w set",
                        ))
                    }
                };
                (FlowSizeLaw::two_point(b, w)?, b)
            }
            None => self.sizes_for(w_override)?,
        };
        let channels =
            self.channel.clone().unwrap_or_else(ChannelSpec::reference).build(num_aps)?;
        let c_max = channels.c_max();
        let w = sizes.mean_workload(c_max);
        let eps = num_aps as f64 - lambda * w;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ConfigError::new(
                "lambda",
                format!("must lie in [0, 1], got {lambda}"),
            ));
        }
        let horizon = self.horizon.unwrap_or_else(|| engine::default_horizon(eps));
        let warmup = self.warmup.unwrap_or(horizon / 10);
        let batch_count = self.batch_count.unwrap_or(20);
        let guard = self.guard.unwrap_or(engine::DEFAULT_GUARD);

        // Heavy-traffic overlays exist for the two-point law under Bernoulli
        // arrivals; sigma2 is evaluated at the capacity point lambda = M / w.
        let (analytic_jlw, analytic_rlb) = if beta.is_nan() {
            (None, None)
        } else {
            let lambda0 = num_aps as f64 / w;
            if lambda0 <= 1.0 + 1e-9 {
                let sigma2 = analysis::arrival_workload_variance(lambda0.min(1.0), w, beta)?;
                (
                    Some(analysis::jlw_heavy_traffic_limit(sigma2)),
                    Some(analysis::rlb_heavy_traffic_limit(sigma2, num_aps)),
                )
            } else {
                (None, None)
            }
        };
        Ok(GridPoint {
            index,
            num_aps,
            lambda,
            eps,
            w,
            beta,
            sizes,
            channels,
            horizon,
            warmup,
            batch_count,
            guard,
            analytic_jlw,
            analytic_rlb,
        })
    }

    fn reject(&self, field: &str, message: &str) -> ConfigError {
        ConfigError::new(field, message)
    }

    /// Expand the config into executable form, validating the grid.
    pub fn expand(&self) -> Result<Expanded, ConfigError> {
        if self.replications == 0 {
            return Err(self.reject("replications", "must be at least 1"));
        }
        let num_aps = self.num_aps.unwrap_or(5);
        if num_aps == 0 {
            return Err(self.reject("num_aps", "need at least one AP"));
        }
        let mut points = Vec::new();
        match self.mode {
            Mode::Single => {
                let lambda = self.lambda.ok_or_else(|| self.reject("lambda", "required"))?;
                points.push(self.point(0, num_aps, lambda.0, None, None)?);
            }
            Mode::LambdaSweep => {
                let grid = self
                    .lambda_grid
                    .as_ref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| self.reject("lambda_grid", "required and nonempty"))?;
                for (i, l) in grid.iter().enumerate() {
                    points.push(self.point(i as u64, num_aps, l.0, None, None)?);
                }
            }
            Mode::EpsSweep => {
                let grid = self
                    .eps_grid
                    .as_ref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| self.reject("eps_grid", "required and nonempty"))?;
                for (i, e) in grid.iter().enumerate() {
                    let probe = self.point(i as u64, num_aps, 0.0, None, None)?;
                    let lambda = (num_aps as f64 - e.0) / probe.w;
                    if e.0 <= 0.0 || lambda <= 0.0 || lambda > 1.0 {
                        return Err(self.reject(
                            "eps_grid",
                            &format!(
                                "eps {} needs lambda (M - eps)/w = {lambda} in (0, 1]",
                                e.0
                            ),
                        ));
                    }
                    points.push(self.point(i as u64, num_aps, lambda, None, None)?);
                }
            }
            Mode::MSweep => {
                let grid = self
                    .m_grid
                    .as_ref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| self.reject("m_grid", "required and nonempty"))?;
                let eps = self.eps.ok_or_else(|| self.reject("eps", "required for m-sweep"))?;
                for (i, &m) in grid.iter().enumerate() {
                    if m == 0 {
                        return Err(self.reject("m_grid", "AP counts must be positive"));
                    }
                    // w tied to M keeps lambda = (M - eps)/w just under 1.
                    let w = m as f64;
                    let lambda = (m as f64 - eps.0) / w;
                    if eps.0 <= 0.0 || lambda > 1.0 || lambda < 0.0 {
                        return Err(self.reject("eps", &format!("gives lambda {lambda} at M {m}")));
                    }
                    points.push(self.point(i as u64, m, lambda, Some(w), None)?);
                }
            }
            Mode::BetaSweep => {
                let grid = self
                    .beta_grid
                    .as_ref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| self.reject("beta_grid", "required and nonempty"))?;
                let lambda =
                    self.lambda.ok_or_else(|| self.reject("lambda", "required for beta-sweep"))?;
                for (i, b) in grid.iter().enumerate() {
                    points.push(self.point(i as u64, num_aps, lambda.0, None, Some(b.0))?);
                }
            }
            Mode::BcfLossCurve => {
                let grid = self
                    .delta_grid
                    .as_ref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| self.reject("delta_grid", "required and nonempty"))?;
                for d in grid {
                    if !(0.0..=1.0).contains(&d.0) {
                        return Err(
                            self.reject("delta_grid", &format!("delta {} outside [0, 1]", d.0))
                        );
                    }
                }
                return Ok(Expanded::Analytic(LossCurve {
                    experiment: self.name.clone(),
                    deltas: decs(grid),
                    out: self.out.clone(),
                }));
            }
        }
        Ok(Expanded::Runs(Plan {
            experiment: self.name.clone(),
            base_seed: self.base_seed,
            policies: self.parsed_policies()?,
            replications: self.replications,
            points,
            fail_on_instability: self.fail_on_instability,
            out: self.out.clone(),
        }))
    }
}
