//! Closed-form performance predictions and the total-workload lower-bound
//! oracle.
//!
//! Conventions: `V` is a flow's workload (slots at peak rate), `w = E[V]`,
//! `nu` is the total workload arriving in a slot, and `sigma2` is the
//! variance of `nu` evaluated at the capacity point `lambda = M / w`. The
//! heavy-traffic statements concern `eps * E[total workload]` as the load gap
//! `eps = M - lambda * w` shrinks.

use crate::error::{ConfigError, Result};

/// Largest total offered load (workload per slot) any policy can stabilize:
/// one unit of service per AP per slot.
pub fn capacity_threshold(num_aps: usize) -> f64 {
    num_aps as f64
}

fn check_prob_pair(p1: f64, p2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(ConfigError::new("p1", format!("must lie in [0, 1], got {p1}")));
    }
    if !(0.0..=1.0).contains(&p2) {
        return Err(ConfigError::new("p2", format!("must lie in [0, 1], got {p2}")));
    }
    if p1 < p2 {
        return Err(ConfigError::new("p1", format!("expected p1 >= p2, got p1 = {p1} < p2 = {p2}")));
    }
    Ok(())
}

/// Probability that a flow joins the first of two on/off APs under
/// best-channel routing, when the APs are on with probability `p1` and `p2`
/// and `p1 >= p2`: `(1 + p1 - p2) / 2`.
pub fn bcf_join_prob(p1: f64, p2: f64) -> Result<f64> {
    check_prob_pair(p1, p2)?;
    Ok((1.0 + p1 - p2) / 2.0)
}

/// Fraction of the two-AP capacity that best-channel routing gives up by
/// overloading the better AP: `(p1 - p2) / (1 + p1 - p2)`.
pub fn bcf_throughput_loss(p1: f64, p2: f64) -> Result<f64> {
    check_prob_pair(p1, p2)?;
    Ok((p1 - p2) / (1.0 + p1 - p2))
}

/// Largest total load best-channel routing can stabilize on two on/off APs:
/// `2 / (1 + p1 - p2)`, against a capacity of 2.
pub fn bcf_supportable_load(p1: f64, p2: f64) -> Result<f64> {
    check_prob_pair(p1, p2)?;
    Ok(2.0 / (1.0 + p1 - p2))
}

fn check_two_point(w: f64, beta: f64) -> Result<()> {
    // Mirror the size-law domain so analytics and simulation agree on
    // admissible parameters.
    crate::model::FlowSizeLaw::two_point(beta, w).map(|_| ())
}

/// Variance of a single flow's workload under the two-point size law:
/// `(w - 1) * beta - w * (w - 1)`.
pub fn flow_size_variance(w: f64, beta: f64) -> Result<f64> {
    check_two_point(w, beta)?;
    Ok((w - 1.0) * beta - w * (w - 1.0))
}

/// Second moment of a single flow's workload under the two-point size law.
pub fn flow_size_second_moment(w: f64, beta: f64) -> Result<f64> {
    check_two_point(w, beta)?;
    Ok(1.0 + (beta + 1.0) * (w - 1.0))
}

/// Variance of the total workload arriving per slot when one flow arrives
/// with probability `lambda` and sizes follow the two-point law:
/// `lambda * E[V^2] - (lambda * w)^2`.
pub fn arrival_workload_variance(lambda: f64, w: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ConfigError::new("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    let second = flow_size_second_moment(w, beta)?;
    Ok(lambda * second - (lambda * w).powi(2))
}

/// Heavy-traffic limit of `eps * E[total workload]` under random routing:
/// `(sigma2 + M * (M - 1)) / 2`.
pub fn rlb_heavy_traffic_limit(sigma2: f64, num_aps: usize) -> f64 {
    let m = num_aps as f64;
    (sigma2 + m * (m - 1.0)) / 2.0
}

/// Per-AP version of the random-routing limit: `(sigma2 / M + M - 1) / 2`.
/// Summing over APs recovers [`rlb_heavy_traffic_limit`].
pub fn rlb_heavy_traffic_limit_per_ap(sigma2: f64, num_aps: usize) -> f64 {
    let m = num_aps as f64;
    (sigma2 / m + m - 1.0) / 2.0
}

/// Heavy-traffic limit of `eps * E[total workload]` under least-workload
/// batch routing: `sigma2 / 2`.
pub fn jlw_heavy_traffic_limit(sigma2: f64) -> f64 {
    sigma2 / 2.0
}

/// Heavy-traffic lower bound on `eps * E[total workload]` for *any* routing
/// policy: `sigma2 / 2`. Least-workload routing meets it.
pub fn heavy_traffic_lower_bound(sigma2: f64) -> f64 {
    sigma2 / 2.0
}

/// Squared distance of the workload vector from its balanced projection:
/// `sum_m (W_m - W_total / M)^2`.
pub fn transverse_workload_sq(workloads: &[u64]) -> f64 {
    let m = workloads.len() as f64;
    let mean = workloads.iter().sum::<u64>() as f64 / m;
    workloads.iter().map(|&w| (w as f64 - mean).powi(2)).sum()
}

/// Single-queue comparison system: pooled arrivals, `M` units of service per
/// slot, no routing losses. Its level is a path-wise lower bound on the total
/// workload of any policy fed the same arrival sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleQueue {
    pub level: u64,
    service_per_slot: u64,
}

impl OracleQueue {
    pub fn new(num_aps: usize) -> Self {
        Self { level: 0, service_per_slot: num_aps as u64 }
    }

    /// One slot: add the arriving workload, drain up to `M` units.
    pub fn step(&mut self, nu_total: u64) {
        self.level = (self.level + nu_total).saturating_sub(self.service_per_slot);
    }
}

/// A heavy-traffic operating point of the reference system: `M` APs, two-point
/// sizes with mean workload `w` and shape `beta`, Bernoulli arrivals pinned so
/// the load gap is exactly `eps`.
#[derive(Debug, Clone, Copy)]
pub struct HeavyTrafficSpec {
    pub num_aps: usize,
    pub w: f64,
    pub beta: f64,
    pub eps: f64,
}

impl HeavyTrafficSpec {
    pub fn new(num_aps: usize, w: f64, beta: f64, eps: f64) -> Result<Self> {
        check_two_point(w, beta)?;
        if num_aps == 0 {
            return Err(ConfigError::new("num_aps", "need at least one AP"));
        }
        let m = num_aps as f64;
        if !(eps > 0.0 && eps < m) {
            return Err(ConfigError::new("eps", format!("must lie in (0, M), got {eps}")));
        }
        let s = Self { num_aps, w, beta, eps };
        let lambda = s.lambda();
        if lambda > 1.0 {
            return Err(ConfigError::new(
                "eps",
                format!("per-slot arrival probability (M - eps) / w = {lambda} exceeds 1"),
            ));
        }
        Ok(s)
    }

    /// Arrival probability that realizes the load gap: `(M - eps) / w`.
    pub fn lambda(&self) -> f64 {
        (self.num_aps as f64 - self.eps) / self.w
    }

    /// Arrival-workload variance at the capacity point `lambda = M / w`; the
    /// `sigma2` entering every heavy-traffic limit.
    pub fn sigma2(&self) -> f64 {
        let lambda0 = self.num_aps as f64 / self.w;
        lambda0 * (1.0 + (self.beta + 1.0) * (self.w - 1.0)) - (self.num_aps as f64).powi(2)
    }

    /// Predicted `eps * E[total workload]` under random routing as `eps -> 0`.
    pub fn rlb_limit(&self) -> f64 {
        rlb_heavy_traffic_limit(self.sigma2(), self.num_aps)
    }

    /// Predicted `eps * E[total workload]` under least-workload routing.
    pub fn jlw_limit(&self) -> f64 {
        jlw_heavy_traffic_limit(self.sigma2())
    }
}
