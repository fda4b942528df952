//! Routing policies and the per-AP scheduler.
//!
//! Three ways to pick an AP for arriving flows: follow the best current
//! channel draw (`Bcf`), pick uniformly at random (`Rlb`), or send the whole
//! slot's batch to the least-loaded AP (`Jlw`). All ties break uniformly at
//! random from a dedicated tie-break stream owned by [`LoadBalancer`].

use crate::error::ConfigError;
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

/// Routing policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Best channel first: join the AP whose routing-time rate draw is largest.
    Bcf,
    /// Random load balancing: each flow joins a uniformly random AP.
    Rlb,
    /// Join the least workload: the batch joins the AP with smallest workload.
    Jlw,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Bcf, PolicyKind::Rlb, PolicyKind::Jlw];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Bcf => "bcf",
            PolicyKind::Rlb => "rlb",
            PolicyKind::Jlw => "jlw",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bcf" => Ok(PolicyKind::Bcf),
            "rlb" => Ok(PolicyKind::Rlb),
            "jlw" => Ok(PolicyKind::Jlw),
            other => Err(ConfigError::new(
                "policy",
                format!("unknown policy {other:?}, expected one of bcf, rlb, jlw"),
            )),
        }
    }
}

/// Holds the tie-break stream for routing decisions so routing randomness
/// never interleaves with arrival, size, or channel streams.
pub struct LoadBalancer {
    rng: ChaCha8Rng,
}

impl LoadBalancer {
    pub fn new(root_seed: u64) -> Self {
        Self { rng: rng::stream(root_seed, "ties", 0) }
    }
}

/// Index of a maximal entry, ties uniform.
fn argmax_uniform<T: Ord + Copy>(values: &[T], rng: &mut ChaCha8Rng) -> usize {
    let best = *values.iter().max().expect("non-empty");
    pick_uniform(values, best, rng)
}

/// Index of a minimal entry, ties uniform.
fn argmin_uniform<T: Ord + Copy>(values: &[T], rng: &mut ChaCha8Rng) -> usize {
    let best = *values.iter().min().expect("non-empty");
    pick_uniform(values, best, rng)
}

fn pick_uniform<T: Ord + Copy>(values: &[T], target: T, rng: &mut ChaCha8Rng) -> usize {
    let count = values.iter().filter(|&&v| v == target).count();
    let choice = if count == 1 { 0 } else { rng.gen_range(0..count) };
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == target)
        .nth(choice)
        .map(|(i, _)| i)
        .unwrap()
}

/// Route one flow given its routing-time rate draw at every AP: join the AP
/// with the largest draw, ties uniform.
pub fn route_bcf(rate_draws: &[u32], balancer: &mut LoadBalancer) -> usize {
    argmax_uniform(rate_draws, &mut balancer.rng)
}

/// Route one flow to a uniformly random AP.
pub fn route_rlb(num_aps: usize, balancer: &mut LoadBalancer) -> usize {
    debug_assert!(num_aps > 0);
    if num_aps == 1 {
        0
    } else {
        balancer.rng.gen_range(0..num_aps)
    }
}

/// Route a batch to the AP with the smallest pre-arrival workload, ties
/// uniform. Called once per slot; the whole batch shares the destination.
pub fn route_jlw(workloads: &[u64], balancer: &mut LoadBalancer) -> usize {
    argmin_uniform(workloads, &mut balancer.rng)
}

/// The scheduler's pick for one AP-slot: which flow to serve, the rate it
/// drew, and how much of its residual actually leaves this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerDecision {
    pub flow_index: usize,
    pub rate: u32,
    /// `min(rate, residual)` of the served flow.
    pub delivered: u64,
}

/// Serve the flow with the largest drawn rate, ties uniform. `None` iff the
/// AP is empty. When every flow drew the outage rate a flow is still selected
/// but `delivered` is 0 (no progress this slot).
pub fn schedule_max_rate(
    residuals: &[u64],
    rate_draws: &[u32],
    rng: &mut ChaCha8Rng,
) -> Option<SchedulerDecision> {
    debug_assert_eq!(residuals.len(), rate_draws.len());
    let &best = rate_draws.iter().max()?;
    let flow_index = pick_uniform(rate_draws, best, rng);
    let delivered = u64::from(best).min(residuals[flow_index]);
    Some(SchedulerDecision { flow_index, rate: best, delivered })
}
