//! Simulation engine: drives the slotted model over a horizon and reduces
//! the trajectory to summary statistics.
//!
//! Statistics convention: the workload process is sampled at slot boundaries
//! (before the slot's arrivals), the first `warmup` slots are discarded, and
//! confidence intervals come from batch means over the retained slots. Every
//! run also tracks the pooled single-queue oracle fed the same arrivals; its
//! level must never exceed the system's total workload.

use crate::analysis::{transverse_workload_sq, OracleQueue};
use crate::error::{ConfigError, Result};
use crate::model::{SlotRecord, SystemConfig, SystemState};
use crate::policies::LoadBalancer;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::fmt;
use std::str::FromStr;

/// Default horizon given the load gap `M - rho`: tight gaps need long runs.
pub fn default_horizon(load_gap: f64) -> u64 {
    if load_gap <= 0.05 {
        10_000_000
    } else {
        1_000_000
    }
}

/// Default workload guard: a run whose total workload passes this is cut
/// short and flagged.
pub const DEFAULT_GUARD: u64 = 1_000_000_000;

/// Number of evenly spaced trajectory samples kept for the trend test.
const TREND_SAMPLES: u64 = 4096;

/// One run's parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub root_seed: u64,
    /// Slots to simulate.
    pub horizon: u64,
    /// Leading slots excluded from statistics.
    pub warmup: u64,
    /// Batches for the batch-means confidence interval.
    pub batch_count: u64,
    /// Total-workload level that aborts the run as presumed divergent.
    pub guard: u64,
    /// Recompute workloads from residuals every slot and count mismatches.
    pub check_invariants: bool,
    /// Keep every post-warmup departure's delay.
    pub collect_delays: bool,
}

impl RunConfig {
    /// Defaults: horizon by load gap, 10% warmup, 20 batches, standard guard.
    pub fn new(system: SystemConfig, root_seed: u64) -> Self {
        let gap = system.num_aps as f64 - system.offered_load();
        let horizon = default_horizon(gap);
        Self {
            system,
            root_seed,
            horizon,
            warmup: horizon / 10,
            batch_count: 20,
            guard: DEFAULT_GUARD,
            check_invariants: false,
            collect_delays: false,
        }
    }

    /// Nudge warmup up to the nearest value making the measured span an exact
    /// multiple of `batch_count`, so arbitrary horizons validate.
    pub fn align_warmup(&mut self) {
        if self.batch_count > 0 && self.horizon > self.warmup {
            self.warmup += (self.horizon - self.warmup) % self.batch_count;
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be positive"));
        }
        if self.warmup >= self.horizon {
            return Err(ConfigError::new(
                "warmup",
                format!("warmup {} must be below horizon {}", self.warmup, self.horizon),
            ));
        }
        if self.batch_count == 0 {
            return Err(ConfigError::new("batch_count", "must be positive"));
        }
        if (self.horizon - self.warmup) % self.batch_count != 0 {
            return Err(ConfigError::new(
                "batch_count",
                format!(
                    "batch count {} must divide the measured span {}",
                    self.batch_count,
                    self.horizon - self.warmup
                ),
            ));
        }
        if self.guard == 0 {
            return Err(ConfigError::new("guard", "must be positive"));
        }
        Ok(())
    }
}

/// Verdict on whether the workload process looked positive recurrent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityFlag {
    Stable,
    SuspectedUnstable,
}

impl StabilityFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityFlag::Stable => "stable",
            StabilityFlag::SuspectedUnstable => "suspected-unstable",
        }
    }
}

impl fmt::Display for StabilityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StabilityFlag {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(StabilityFlag::Stable),
            "suspected-unstable" => Ok(StabilityFlag::SuspectedUnstable),
            other => Err(ConfigError::new("stability_flag", format!("unknown flag {other:?}"))),
        }
    }
}

/// Reported statistics of one run. Workload moments are boundary-sampled
/// post-warmup means; delays cover post-warmup departures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mean_total_workload: f64,
    /// 95% batch-means half-width for `mean_total_workload`; NaN when fewer
    /// than two complete batches exist.
    pub ci_halfwidth: f64,
    /// Mean slots in system per departed flow (arrival slot counts); NaN if
    /// nothing departed.
    pub mean_delay: f64,
    pub departures: u64,
    /// Mean squared distance of the workload vector from balance.
    pub mean_w_perp_sq: f64,
    /// Mean number of APs idling per slot (no service delivered).
    pub mean_unused: f64,
    pub stability: StabilityFlag,
}

/// Summary plus diagnostics that support the consistency checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    /// Slots actually simulated (short of the horizon only on a guard trip).
    pub slots_completed: u64,
    /// Post-warmup arrivals (flows).
    pub arrivals: u64,
    /// Post-warmup packets delivered.
    pub delivered_packets: u64,
    /// Mean flows present per post-warmup slot, counted after arrivals.
    pub mean_flows_in_service: f64,
    /// Boundary slots where the pooled-queue oracle exceeded the system's
    /// total workload. Must be zero.
    pub oracle_violations: u64,
    /// Slots where a recomputed workload disagreed with the cache or the
    /// per-slot balance failed (only counted under `check_invariants`).
    pub dynamics_violations: u64,
    pub final_total_workload: u64,
    pub final_oracle_level: u64,
    /// Per-departure delays when `collect_delays` is set.
    pub delays: Option<Vec<u64>>,
}

/// Ordinary least squares with a t-statistic for the slope.
fn trend(samples: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = samples.len() as f64;
    if samples.len() < 8 {
        return None;
    }
    let mean_x = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = samples.iter().map(|s| (s.0 - mean_x) * (s.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let sse: f64 = samples
        .iter()
        .map(|s| (s.1 - mean_y - slope * (s.0 - mean_x)).powi(2))
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    Some((slope, se, mean_y))
}

/// Trend test on the second half of the trajectory samples: flag only a
/// clearly material climb (fitted rise over the window exceeding half the
/// window's mean level) that is also statistically unambiguous. Plain
/// significance alone would misfire on slowly mixing but stable runs.
fn looks_divergent(samples: &[(f64, f64)]) -> bool {
    let tail = &samples[samples.len() / 2..];
    let Some((slope, se, mean_y)) = trend(tail) else {
        return false;
    };
    if slope <= 0.0 {
        return false;
    }
    let span = tail.last().unwrap().0 - tail.first().unwrap().0;
    let rise = slope * span;
    let material = rise > 0.5 * mean_y.max(1.0);
    let unambiguous = se == 0.0 || slope / se > 5.0;
    material && unambiguous
}

/// 97.5% quantile of Student's t with `dof` degrees of freedom.
fn t_quantile(dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof).expect("valid dof").inverse_cdf(0.975)
}

/// Simulate one run to completion.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let m = config.system.num_aps;
    let mut state = SystemState::new(config.system.clone(), config.root_seed)?;
    let mut balancer = LoadBalancer::new(config.root_seed);
    let mut rec = SlotRecord::new(m);
    let mut oracle = OracleQueue::new(m);

    let stride = (config.horizon / TREND_SAMPLES).max(1);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(TREND_SAMPLES as usize + 2);

    let measured = config.horizon - config.warmup;
    let batch_len = measured / config.batch_count;
    let mut batch_means: Vec<f64> = Vec::with_capacity(config.batch_count as usize);
    let mut batch_acc: u128 = 0;
    let mut batch_fill: u64 = 0;

    let mut boundary_count: u64 = 0;
    let mut sum_w: u128 = 0;
    let mut sum_perp: f64 = 0.0;
    let mut sum_unused: u64 = 0;
    let mut sum_flows: u128 = 0;
    let mut arrivals: u64 = 0;
    let mut delivered: u64 = 0;
    let mut departures: u64 = 0;
    let mut delay_sum: u128 = 0;
    let mut delays = config.collect_delays.then(Vec::new);
    let mut oracle_violations: u64 = 0;
    let mut dynamics_violations: u64 = 0;
    let mut guard_tripped = false;
    let mut slots_completed = config.horizon;

    for t in 0..config.horizon {
        let total = state.total_workload();
        if oracle.level > total {
            oracle_violations += 1;
        }
        if t % stride == 0 {
            samples.push((t as f64, total as f64));
        }
        if t >= config.warmup {
            boundary_count += 1;
            sum_w += total as u128;
            sum_perp += transverse_workload_sq(state.workloads());
            if batch_len > 0 && batch_means.len() < config.batch_count as usize {
                batch_acc += total as u128;
                batch_fill += 1;
                if batch_fill == batch_len {
                    batch_means.push(batch_acc as f64 / batch_len as f64);
                    batch_acc = 0;
                    batch_fill = 0;
                }
            }
        }

        state.step(&mut balancer, &mut rec);
        oracle.step(rec.nu_total());

        if config.check_invariants {
            for ap in 0..m {
                let balanced =
                    rec.post_workloads[ap] == rec.pre_workloads[ap] + rec.nu[ap] - rec.mu[ap];
                let cached = state.recompute_workload(ap) == state.workload(ap);
                let served_ok = rec.mu[ap] <= 1 && rec.mu[ap] >= rec.peak_drawn[ap] as u64;
                if !(balanced && cached && served_ok) {
                    dynamics_violations += 1;
                }
            }
        }

        if t >= config.warmup {
            arrivals += rec.arrivals as u64;
            delivered += rec.delivered_packets;
            sum_unused += m as u64 - rec.mu_total();
            sum_flows += rec.flows_in_service as u128;
            for d in &rec.departures {
                departures += 1;
                delay_sum += d.delay() as u128;
                if let Some(v) = delays.as_mut() {
                    v.push(d.delay());
                }
            }
        }

        if state.total_workload() > config.guard {
            guard_tripped = true;
            slots_completed = t + 1;
            break;
        }
    }

    let mean = |sum: f64| if boundary_count > 0 { sum / boundary_count as f64 } else { f64::NAN };
    let mean_total_workload = mean(sum_w as f64);
    let mean_w_perp_sq = mean(sum_perp);
    let mean_unused = mean(sum_unused as f64);
    let mean_flows_in_service = mean(sum_flows as f64);
    let mean_delay =
        if departures > 0 { delay_sum as f64 / departures as f64 } else { f64::NAN };

    let ci_halfwidth = if batch_means.len() >= 2 {
        let k = batch_means.len() as f64;
        let bm = batch_means.iter().sum::<f64>() / k;
        let var = batch_means.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (k - 1.0);
        t_quantile(k - 1.0) * (var / k).sqrt()
    } else {
        f64::NAN
    };

    let stability = if guard_tripped || looks_divergent(&samples) {
        StabilityFlag::SuspectedUnstable
    } else {
        StabilityFlag::Stable
    };

    Ok(RunOutput {
        summary: RunSummary {
            mean_total_workload,
            ci_halfwidth,
            mean_delay,
            departures,
            mean_w_perp_sq,
            mean_unused,
            stability,
        },
        slots_completed,
        arrivals,
        delivered_packets: delivered,
        mean_flows_in_service,
        oracle_violations,
        dynamics_violations,
        final_total_workload: state.total_workload(),
        final_oracle_level: oracle.level,
        delays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArrivalLaw, ChannelLaw, FlowSizeLaw};
    use crate::policies::PolicyKind;

    fn reference_system(num_aps: usize, lambda: f64, policy: PolicyKind) -> SystemConfig {
        SystemConfig {
            num_aps,
            arrivals: ArrivalLaw::bernoulli(lambda).unwrap(),
            sizes: FlowSizeLaw::two_point(20.0, 5.0).unwrap(),
            channels: ChannelLaw::shared(vec![0, 1, 5, 10], vec![0.1, 0.2, 0.5, 0.2], num_aps)
                .unwrap(),
            policy,
        }
    }

    fn quick(system: SystemConfig, seed: u64, horizon: u64) -> RunConfig {
        let mut c = RunConfig::new(system, seed);
        c.horizon = horizon;
        c.warmup = horizon / 10;
        c
    }

    #[test]
    fn empty_system_stays_empty() {
        let mut cfg = quick(reference_system(1, 0.0, PolicyKind::Jlw), 7, 10_000);
        cfg.check_invariants = true;
        let out = run(&cfg).unwrap();
        assert_eq!(out.summary.mean_total_workload, 0.0);
        assert_eq!(out.summary.departures, 0);
        assert!(out.summary.mean_delay.is_nan());
        assert_eq!(out.summary.mean_unused, 1.0);
        assert_eq!(out.summary.stability, StabilityFlag::Stable);
        assert_eq!(out.oracle_violations, 0);
        assert_eq!(out.dynamics_violations, 0);
    }

    #[test]
    fn default_horizon_scales_with_gap() {
        assert_eq!(default_horizon(0.01), 10_000_000);
        assert_eq!(default_horizon(0.05), 10_000_000);
        assert_eq!(default_horizon(0.2), 1_000_000);
        let cfg = RunConfig::new(reference_system(5, 0.9, PolicyKind::Jlw), 1);
        // Load gap 5 - 4.5 = 0.5, so the short default applies.
        assert_eq!(cfg.horizon, 1_000_000);
        assert_eq!(cfg.warmup, 100_000);
        assert_eq!(cfg.batch_count, 20);
        assert_eq!(cfg.guard, DEFAULT_GUARD);
    }

    #[test]
    fn config_validation() {
        let sys = reference_system(1, 0.5, PolicyKind::Rlb);
        let mut c = RunConfig::new(sys.clone(), 1);
        c.horizon = 0;
        assert_eq!(run(&c).unwrap_err().field, "horizon");
        let mut c = RunConfig::new(sys.clone(), 1);
        c.warmup = c.horizon;
        assert_eq!(run(&c).unwrap_err().field, "warmup");
        let mut c = RunConfig::new(sys.clone(), 1);
        c.batch_count = 0;
        assert_eq!(run(&c).unwrap_err().field, "batch_count");
        let mut c = RunConfig::new(sys.clone(), 1);
        c.batch_count = 7; // does not divide the 9_000_000-slot measured span
        assert_eq!(run(&c).unwrap_err().field, "batch_count");
        c.align_warmup();
        assert_eq!((c.horizon - c.warmup) % 7, 0);
        let mut c = RunConfig::new(sys, 1);
        c.guard = 0;
        assert_eq!(run(&c).unwrap_err().field, "guard");
    }

    #[test]
    fn runs_replay_deterministically() {
        let cfg = quick(reference_system(3, 0.9, PolicyKind::Bcf), 99, 50_000);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.root_seed = 100;
        assert_ne!(run(&other).unwrap(), a);
    }

    #[test]
    fn moderate_load_is_stable_with_sane_interval() {
        let mut cfg = quick(reference_system(5, 0.9, PolicyKind::Jlw), 4, 200_000);
        cfg.check_invariants = true;
        let out = run(&cfg).unwrap();
        assert_eq!(out.summary.stability, StabilityFlag::Stable);
        assert!(out.summary.mean_total_workload.is_finite());
        assert!(out.summary.mean_total_workload > 0.0);
        assert!(out.summary.ci_halfwidth > 0.0);
        assert!(out.summary.ci_halfwidth < out.summary.mean_total_workload);
        assert!(out.summary.departures > 0);
        assert!(out.summary.mean_delay >= 1.0);
        assert_eq!(out.oracle_violations, 0);
        assert_eq!(out.dynamics_violations, 0);
        assert_eq!(out.slots_completed, 200_000);
        // Unused service capacity per slot is below M and positive at rho < M.
        assert!(out.summary.mean_unused > 0.0 && out.summary.mean_unused < 5.0);
    }

    #[test]
    fn interval_is_consistent_across_seeds() {
        // Two independent seeds should produce overlapping estimates at the
        // generous 4-sigma level. Offered load 1.5 on two APs.
        let base = reference_system(2, 0.3, PolicyKind::Rlb);
        let a = run(&quick(base.clone(), 11, 400_000)).unwrap().summary;
        let b = run(&quick(base, 12, 400_000)).unwrap().summary;
        let gap = (a.mean_total_workload - b.mean_total_workload).abs();
        assert!(
            gap < 4.0 * (a.ci_halfwidth + b.ci_halfwidth),
            "means {} vs {} with halfwidths {} and {}",
            a.mean_total_workload,
            b.mean_total_workload,
            a.ci_halfwidth,
            b.ci_halfwidth
        );
    }

    #[test]
    fn overload_is_flagged_by_trend() {
        // Offered load 4.5 on one AP: workload climbs ~3.5 per slot, far
        // beyond any stable plateau, but below the guard at this horizon.
        let cfg = quick(reference_system(1, 0.9, PolicyKind::Rlb), 5, 100_000);
        let out = run(&cfg).unwrap();
        assert_eq!(out.summary.stability, StabilityFlag::SuspectedUnstable);
        assert_eq!(out.slots_completed, 100_000, "guard must not have tripped");
    }

    #[test]
    fn guard_trips_early_on_runaway_workload() {
        let mut cfg = quick(reference_system(1, 0.9, PolicyKind::Rlb), 5, 1_000_000);
        cfg.guard = 1_000;
        let out = run(&cfg).unwrap();
        assert_eq!(out.summary.stability, StabilityFlag::SuspectedUnstable);
        assert!(out.slots_completed < 10_000);
        assert!(out.final_total_workload > 1_000);
    }

    #[test]
    fn oracle_never_exceeds_system_workload() {
        for policy in PolicyKind::ALL {
            for seed in [1, 2, 3] {
                let cfg = quick(reference_system(3, 0.95, policy), seed, 60_000);
                let out = run(&cfg).unwrap();
                assert_eq!(out.oracle_violations, 0, "{policy} seed {seed}");
                assert!(out.final_oracle_level <= out.final_total_workload);
            }
        }
    }

    #[test]
    fn flow_count_matches_departure_rate_times_delay() {
        // Time-average flows in service equals throughput times mean delay
        // (arrival slot included), up to boundary noise. The system must be
        // stable for the identity to settle: offered load 1.5 on two APs.
        let cfg = quick(reference_system(2, 0.3, PolicyKind::Jlw), 23, 400_000);
        let out = run(&cfg).unwrap();
        let measured_slots = 400_000.0 * 0.9;
        let rate = out.summary.departures as f64 / measured_slots;
        let predicted = rate * out.summary.mean_delay;
        let rel = (out.mean_flows_in_service - predicted).abs() / predicted;
        assert!(rel < 0.02, "{} vs {predicted}", out.mean_flows_in_service);
    }

    #[test]
    fn delay_matches_birth_death_chain() {
        // Single AP, unit flows, on/off channel with on-probability 1/2 and
        // Bernoulli(0.3) arrivals: the flow count is a birth-death chain
        // with up-rate lambda * (1 - p_on(n+1)) and down-rate
        // (1 - lambda) * p_on(n), p_on(n) = 1 - 2^{-n}. Solve its stationary
        // law by detailed balance and compare mean workload and delay.
        let (lambda, p) = (0.3f64, 0.5f64);
        let mut pi = vec![1.0f64];
        for n in 0..200usize {
            let p_on = 1.0 - (1.0 - p).powi(n as i32 + 1);
            let ratio = lambda * (1.0 - p_on) / ((1.0 - lambda) * p_on);
            let next = pi[n] * ratio;
            if next < 1e-300 {
                break;
            }
            pi.push(next);
        }
        let z: f64 = pi.iter().sum();
        let mean_n: f64 = pi.iter().enumerate().map(|(n, &w)| n as f64 * w).sum::<f64>() / z;
        let expect_delay = mean_n / lambda + 1.0;

        let sys = SystemConfig {
            num_aps: 1,
            arrivals: ArrivalLaw::bernoulli(lambda).unwrap(),
            sizes: FlowSizeLaw::bounded_iid(vec![1], vec![1.0]).unwrap(),
            channels: ChannelLaw::shared(vec![0, 1], vec![0.5, 0.5], 1).unwrap(),
            policy: PolicyKind::Rlb,
        };
        let out = run(&quick(sys, 17, 500_000)).unwrap();
        let w_rel = (out.summary.mean_total_workload - mean_n).abs() / mean_n;
        let d_rel = (out.summary.mean_delay - expect_delay).abs() / expect_delay;
        assert!(w_rel < 0.02, "workload {} vs {mean_n}", out.summary.mean_total_workload);
        assert!(d_rel < 0.02, "delay {} vs {expect_delay}", out.summary.mean_delay);
    }

    #[test]
    fn always_on_channel_gives_unit_delay() {
        // Unit flows on a channel that essentially never fades: every flow
        // departs in its arrival slot.
        let sys = SystemConfig {
            num_aps: 1,
            arrivals: ArrivalLaw::bernoulli(0.6).unwrap(),
            sizes: FlowSizeLaw::bounded_iid(vec![1], vec![1.0]).unwrap(),
            channels: ChannelLaw::shared(vec![0, 1], vec![1e-12, 1.0 - 1e-12], 1).unwrap(),
            policy: PolicyKind::Jlw,
        };
        let out = run(&quick(sys, 29, 100_000)).unwrap();
        assert_eq!(out.summary.mean_delay, 1.0);
        assert_eq!(out.summary.mean_total_workload, 0.0);
        assert!(out.summary.departures > 50_000);
    }

    #[test]
    fn delay_samples_round_trip() {
        let mut cfg = quick(reference_system(2, 0.3, PolicyKind::Rlb), 3, 20_000);
        cfg.collect_delays = true;
        let out = run(&cfg).unwrap();
        let delays = out.delays.as_ref().unwrap();
        assert_eq!(delays.len() as u64, out.summary.departures);
        let mean = delays.iter().sum::<u64>() as f64 / delays.len() as f64;
        assert!((mean - out.summary.mean_delay).abs() < 1e-9);
        assert!(delays.iter().all(|&d| d >= 1));
    }
}
