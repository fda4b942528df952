//! System model: channel, arrival, and flow-size laws, plus the slotted
//! state update.
//!
//! Time is slotted. Each access point (AP) holds a set of flows; a flow's
//! workload is `ceil(residual / c_max)`, the number of slots needed to drain
//! it at the peak channel rate. Per slot: a batch of flows arrives and is
//! routed, then each AP serves the flow with the highest drawn channel rate
//! (ties uniform), delivering `min(rate, residual)` packets. An AP's workload
//! decreases by at most one per slot, and decreases for sure whenever some
//! flow at the AP draws the peak rate.

use crate::error::{ConfigError, Result};
use crate::policies::{route_bcf, route_jlw, route_rlb, LoadBalancer, PolicyKind};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Floating-point slack for "probabilities sum to one" checks.
const PROB_SUM_TOL: f64 = 1e-12;

/// Discrete per-flow channel law, possibly different per AP but over a shared
/// rate support. `rates[0]` must be 0 (outage) and the top rate is `c_max`.
#[derive(Debug, Clone)]
pub struct ChannelLaw {
    rates: Vec<u32>,
    probs: Vec<Vec<f64>>,
    /// Per-AP cumulative sums of `probs`, with the last entry pinned to 1.0.
    cum: Vec<Vec<f64>>,
}

impl ChannelLaw {
    /// Per-AP probability rows over a common `rates` support.
    pub fn new(rates: Vec<u32>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if rates.len() < 2 {
            return Err(ConfigError::new("channel.rates", "need at least an outage rate and one positive rate"));
        }
        if rates[0] != 0 {
            return Err(ConfigError::new("channel.rates", "lowest rate must be 0"));
        }
        if !rates.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new("channel.rates", "rates must be strictly increasing"));
        }
        if probs.is_empty() {
            return Err(ConfigError::new("channel.probs", "need at least one AP"));
        }
        let k = rates.len();
        let mut cum = Vec::with_capacity(probs.len());
        for (m, row) in probs.iter().enumerate() {
            let field = || format!("channel.probs[{m}]");
            if row.len() != k {
                return Err(ConfigError::new(field(), format!("expected {k} probabilities, got {}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(ConfigError::new(field(), "probabilities must lie in [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(ConfigError::new(field(), format!("probabilities sum to {sum}, not 1")));
            }
            if row[0] <= 0.0 {
                return Err(ConfigError::new(field(), "outage probability must be positive"));
            }
            if row[k - 1] <= 0.0 {
                return Err(ConfigError::new(field(), "peak-rate probability must be positive"));
            }
            let mut c = Vec::with_capacity(k);
            let mut acc = 0.0;
            for p in row {
                acc += p;
                c.push(acc);
            }
            c[k - 1] = 1.0;
            cum.push(c);
        }
        Ok(Self { rates, probs, cum })
    }

    /// One probability row shared by `num_aps` identical APs.
    pub fn shared(rates: Vec<u32>, probs: Vec<f64>, num_aps: usize) -> Result<Self> {
        Self::new(rates, vec![probs; num_aps])
    }

    pub fn num_aps(&self) -> usize {
        self.probs.len()
    }

    pub fn rates(&self) -> &[u32] {
        &self.rates
    }

    pub fn probs(&self, ap: usize) -> &[f64] {
        &self.probs[ap]
    }

    /// Peak rate; one unit of workload is one slot of service at this rate.
    pub fn c_max(&self) -> u32 {
        *self.rates.last().unwrap()
    }

    /// Probability that a single draw at `ap` hits the peak rate.
    pub fn peak_prob(&self, ap: usize) -> f64 {
        *self.probs[ap].last().unwrap()
    }

    /// Draw one rate index for a flow at `ap`.
    pub fn sample_index(&self, ap: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.index_for(ap, u)
    }

    /// Draw one rate for a flow at `ap`.
    pub fn sample_rate(&self, ap: usize, rng: &mut ChaCha8Rng) -> u32 {
        self.rates[self.sample_index(ap, rng)]
    }

    /// Rate index of the *largest* of `n` independent draws at `ap`, using a
    /// single uniform: the maximum's CDF is `cum[k]^n`, so `u^(1/n)` fed to
    /// the single-draw inverse CDF is an exact sample. Consumes one draw
    /// regardless of `n`, which keeps heavy-traffic runs O(1) per AP-slot.
    pub fn sample_max_index(&self, ap: usize, n: usize, rng: &mut ChaCha8Rng) -> usize {
        debug_assert!(n >= 1);
        let u: f64 = rng.gen();
        let v = if n == 1 { u } else { u.powf(1.0 / n as f64) };
        self.index_for(ap, v)
    }

    fn index_for(&self, ap: usize, v: f64) -> usize {
        let cum = &self.cum[ap];
        // Last entry is exactly 1.0 and v < 1, so the scan always terminates.
        cum.iter().position(|&c| v < c).unwrap_or(cum.len() - 1)
    }
}

/// Law of the number of flows arriving in one slot, i.i.d. across slots.
#[derive(Debug, Clone)]
pub enum ArrivalLaw {
    /// One flow with probability `lambda`, none otherwise.
    Bernoulli { lambda: f64 },
    /// Arbitrary bounded integer law given by `(count, probability)` atoms.
    BoundedIid { support: Vec<u32>, probs: Vec<f64>, cum: Vec<f64> },
}

impl ArrivalLaw {
    pub fn bernoulli(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(ConfigError::new("arrivals.lambda", format!("must lie in [0, 1], got {lambda}")));
        }
        Ok(Self::Bernoulli { lambda })
    }

    pub fn bounded_iid(support: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        let cum = validate_atoms("arrivals", &support, &probs, false)?;
        Ok(Self::BoundedIid { support, probs, cum })
    }

    /// Mean arrivals per slot.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Bernoulli { lambda } => *lambda,
            Self::BoundedIid { support, probs, .. } => {
                support.iter().zip(probs).map(|(&a, p)| a as f64 * p).sum()
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        match self {
            Self::Bernoulli { lambda } => {
                let u: f64 = rng.gen();
                (u < *lambda) as u32
            }
            Self::BoundedIid { support, cum, .. } => {
                let u: f64 = rng.gen();
                let k = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1);
                support[k]
            }
        }
    }
}

/// Law of a single flow's size in packets, i.i.d. across flows.
#[derive(Debug, Clone)]
pub enum FlowSizeLaw {
    /// Size `10 * beta` with probability `(w - 1) / (beta - 1)`, else 10.
    /// With peak rate 10 this makes the mean per-flow workload exactly `w`.
    TwoPoint { beta: f64, w: f64, large: u32 },
    /// Arbitrary bounded positive integer law.
    BoundedIid { support: Vec<u32>, probs: Vec<f64>, cum: Vec<f64> },
}

/// Base size of the small flow in the two-point law.
pub const TWO_POINT_BASE: u32 = 10;

impl FlowSizeLaw {
    pub fn two_point(beta: f64, w: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 2.0 {
            return Err(ConfigError::new("sizes.beta", format!("must be at least 2, got {beta}")));
        }
        if !w.is_finite() || w <= 1.0 || w > beta {
            return Err(ConfigError::new("sizes.w", format!("must lie in (1, beta], got {w}")));
        }
        let large_f = TWO_POINT_BASE as f64 * beta;
        let large = large_f.round();
        if (large_f - large).abs() > 1e-9 || large > u32::MAX as f64 {
            return Err(ConfigError::new("sizes.beta", format!("10 * beta must be an integer flow size, got {large_f}")));
        }
        Ok(Self::TwoPoint { beta, w, large: large as u32 })
    }

    pub fn bounded_iid(support: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        let cum = validate_atoms("sizes", &support, &probs, true)?;
        Ok(Self::BoundedIid { support, probs, cum })
    }

    /// Probability of the large atom in the two-point law.
    pub fn large_prob(&self) -> Option<f64> {
        match self {
            Self::TwoPoint { beta, w, .. } => Some((w - 1.0) / (beta - 1.0)),
            Self::BoundedIid { .. } => None,
        }
    }

    /// The size atoms and their probabilities.
    pub fn pmf(&self) -> Vec<(u32, f64)> {
        match self {
            Self::TwoPoint { large, .. } => {
                let q = self.large_prob().unwrap();
                vec![(TWO_POINT_BASE, 1.0 - q), (*large, q)]
            }
            Self::BoundedIid { support, probs, .. } => {
                support.iter().copied().zip(probs.iter().copied()).collect()
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        match self {
            Self::TwoPoint { large, .. } => {
                let q = self.large_prob().unwrap();
                let u: f64 = rng.gen();
                if u < q {
                    *large
                } else {
                    TWO_POINT_BASE
                }
            }
            Self::BoundedIid { support, cum, .. } => {
                let u: f64 = rng.gen();
                let k = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1);
                support[k]
            }
        }
    }

    /// Mean per-flow workload `E[ceil(size / c_max)]`.
    pub fn mean_workload(&self, c_max: u32) -> f64 {
        self.pmf().iter().map(|&(s, p)| workload_of(s, c_max) as f64 * p).sum()
    }

    /// Second moment of the per-flow workload.
    pub fn workload_second_moment(&self, c_max: u32) -> f64 {
        self.pmf().iter().map(|&(s, p)| (workload_of(s, c_max) as f64).powi(2) * p).sum()
    }
}

fn validate_atoms(field: &str, support: &[u32], probs: &[f64], positive: bool) -> Result<Vec<f64>> {
    if support.is_empty() || support.len() != probs.len() {
        return Err(ConfigError::new(
            format!("{field}.support"),
            "support and probabilities must be non-empty and equal-length",
        ));
    }
    if !support.windows(2).all(|w| w[0] < w[1]) {
        return Err(ConfigError::new(format!("{field}.support"), "support must be strictly increasing"));
    }
    if positive && support[0] == 0 {
        return Err(ConfigError::new(format!("{field}.support"), "values must be positive"));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(ConfigError::new(format!("{field}.probs"), "probabilities must lie in [0, 1]"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(ConfigError::new(format!("{field}.probs"), format!("probabilities sum to {sum}, not 1")));
    }
    let mut cum = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cum.push(acc);
    }
    *cum.last_mut().unwrap() = 1.0;
    Ok(cum)
}

/// Workload of a flow with `residual` packets left: slots to drain at peak rate.
pub fn workload_of(residual: u32, c_max: u32) -> u64 {
    debug_assert!(c_max > 0);
    ((residual as u64) + (c_max as u64) - 1) / c_max as u64
}

/// True iff some flow's drawn rate hit the peak; service then removes one
/// unit of workload for sure.
pub fn peak_drawn(rates: &[u32], c_max: u32) -> bool {
    rates.iter().any(|&r| r == c_max)
}

/// A flow in service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub id: u64,
    pub size: u32,
    pub residual: u32,
    pub arrival_slot: u64,
}

/// A completed flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Departure {
    pub flow_id: u64,
    pub ap: usize,
    pub size: u32,
    pub arrival_slot: u64,
    pub departure_slot: u64,
}

impl Departure {
    /// Slots spent in the system, counting the arrival slot itself.
    pub fn delay(&self) -> u64 {
        self.departure_slot - self.arrival_slot + 1
    }
}

/// Full system parameterization: topology, laws, and routing policy.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub arrivals: ArrivalLaw,
    pub sizes: FlowSizeLaw,
    pub channels: ChannelLaw,
    pub policy: PolicyKind,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_aps == 0 {
            return Err(ConfigError::new("num_aps", "need at least one AP"));
        }
        if self.channels.num_aps() != self.num_aps {
            return Err(ConfigError::new(
                "channel.probs",
                format!("{} probability rows for {} APs", self.channels.num_aps(), self.num_aps),
            ));
        }
        Ok(())
    }

    /// Offered workload per slot, `lambda * E[flow workload]`.
    pub fn offered_load(&self) -> f64 {
        self.arrivals.mean() * self.sizes.mean_workload(self.channels.c_max())
    }
}

/// Everything that happened in one slot, written by [`SystemState::step`].
/// Buffers are reused across slots; call sites keep one record alive.
#[derive(Debug, Clone, Default)]
pub struct SlotRecord {
    pub slot: u64,
    /// Number of flows that arrived.
    pub arrivals: u32,
    /// Per-AP workload before arrivals.
    pub pre_workloads: Vec<u64>,
    /// Per-AP workload after arrivals and service.
    pub post_workloads: Vec<u64>,
    /// Per-AP workload brought by this slot's arrivals.
    pub nu: Vec<u64>,
    /// Per-AP workload served, measured as `pre + nu - post`; always 0 or 1.
    pub mu: Vec<u64>,
    /// Per-AP: some flow (post-arrival) drew the peak rate this slot.
    pub peak_drawn: Vec<bool>,
    /// Flows present after arrivals, before service.
    pub flows_in_service: u64,
    /// Packets delivered across all APs.
    pub delivered_packets: u64,
    pub departures: Vec<Departure>,
}

impl SlotRecord {
    pub fn new(num_aps: usize) -> Self {
        let mut r = Self::default();
        r.resize(num_aps);
        r
    }

    fn resize(&mut self, num_aps: usize) {
        self.pre_workloads.resize(num_aps, 0);
        self.post_workloads.resize(num_aps, 0);
        self.nu.resize(num_aps, 0);
        self.mu.resize(num_aps, 0);
        self.peak_drawn.resize(num_aps, false);
    }

    fn reset(&mut self, num_aps: usize) {
        self.resize(num_aps);
        self.nu.iter_mut().for_each(|x| *x = 0);
        self.mu.iter_mut().for_each(|x| *x = 0);
        self.peak_drawn.iter_mut().for_each(|x| *x = false);
        self.arrivals = 0;
        self.flows_in_service = 0;
        self.delivered_packets = 0;
        self.departures.clear();
    }

    /// Total workload brought by this slot's arrivals.
    pub fn nu_total(&self) -> u64 {
        self.nu.iter().sum()
    }

    /// Total workload served this slot.
    pub fn mu_total(&self) -> u64 {
        self.mu.iter().sum()
    }
}

/// Named random streams of one run. Routing draws for the channel-aware
/// policy come from the same per-AP streams as service draws.
struct Streams {
    arrivals: ChaCha8Rng,
    sizes: ChaCha8Rng,
    channels: Vec<ChaCha8Rng>,
}

impl Streams {
    fn new(root_seed: u64, num_aps: usize) -> Self {
        Self {
            arrivals: rng::stream(root_seed, "arrivals", 0),
            sizes: rng::stream(root_seed, "sizes", 0),
            channels: (0..num_aps).map(|m| rng::stream(root_seed, "channels", m as u64)).collect(),
        }
    }
}

/// Live simulation state: per-AP flow sets plus cached workloads.
pub struct SystemState {
    config: SystemConfig,
    streams: Streams,
    aps: Vec<Vec<Flow>>,
    workloads: Vec<u64>,
    next_flow_id: u64,
    pub slot: u64,
}

impl SystemState {
    pub fn new(config: SystemConfig, root_seed: u64) -> Result<Self> {
        config.validate()?;
        let m = config.num_aps;
        Ok(Self {
            streams: Streams::new(root_seed, m),
            config,
            aps: vec![Vec::new(); m],
            workloads: vec![0; m],
            next_flow_id: 0,
            slot: 0,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn num_aps(&self) -> usize {
        self.config.num_aps
    }

    pub fn flows(&self, ap: usize) -> &[Flow] {
        &self.aps[ap]
    }

    pub fn num_flows(&self) -> u64 {
        self.aps.iter().map(|a| a.len() as u64).sum()
    }

    /// Cached workload of one AP.
    pub fn workload(&self, ap: usize) -> u64 {
        self.workloads[ap]
    }

    pub fn workloads(&self) -> &[u64] {
        &self.workloads
    }

    pub fn total_workload(&self) -> u64 {
        self.workloads.iter().sum()
    }

    /// Recompute one AP's workload from flow residuals; must always agree
    /// with the cache.
    pub fn recompute_workload(&self, ap: usize) -> u64 {
        let c = self.config.channels.c_max();
        self.aps[ap].iter().map(|f| workload_of(f.residual, c)).sum()
    }

    /// Seed the state with pre-existing flows (test and scenario setup).
    /// Flow ids continue from the current counter.
    pub fn inject_flow(&mut self, ap: usize, size: u32) -> u64 {
        let id = self.next_flow_id;
        self.next_flow_id += 1;
        let v = workload_of(size, self.config.channels.c_max());
        self.aps[ap].push(Flow { id, size, residual: size, arrival_slot: self.slot });
        self.workloads[ap] += v;
        id
    }

    /// Advance one slot: arrivals are routed, then every AP serves its
    /// highest-rate flow. Events land in `rec`.
    pub fn step(&mut self, balancer: &mut LoadBalancer, rec: &mut SlotRecord) {
        let m = self.config.num_aps;
        rec.reset(m);
        rec.slot = self.slot;
        rec.pre_workloads.copy_from_slice(&self.workloads);

        // Arrivals. The whole batch sees the same pre-arrival workloads; the
        // workload-aware policy routes the batch as one unit.
        let arrivals = self.config.arrivals.sample(&mut self.streams.arrivals);
        rec.arrivals = arrivals;
        let batch_dest = if arrivals > 0 && self.config.policy == PolicyKind::Jlw && m > 1 {
            route_jlw(&self.workloads, balancer)
        } else {
            0
        };
        let c_max = self.config.channels.c_max();
        for _ in 0..arrivals {
            let size = self.config.sizes.sample(&mut self.streams.sizes);
            // With one AP every policy degenerates to the same routing and
            // consumes no draws, so single-AP runs agree bit-for-bit.
            let dest = if m == 1 {
                0
            } else {
                match self.config.policy {
                    PolicyKind::Bcf => {
                        let law = &self.config.channels;
                        let best = (0..m)
                            .map(|ap| law.sample_rate(ap, &mut self.streams.channels[ap]))
                            .collect::<Vec<_>>();
                        route_bcf(&best, balancer)
                    }
                    PolicyKind::Rlb => route_rlb(m, balancer),
                    PolicyKind::Jlw => batch_dest,
                }
            };
            let id = self.next_flow_id;
            self.next_flow_id += 1;
            let v = workload_of(size, c_max);
            self.aps[dest].push(Flow { id, size, residual: size, arrival_slot: self.slot });
            self.workloads[dest] += v;
            rec.nu[dest] += v;
        }
        rec.flows_in_service = self.num_flows();

        // Service: per AP, the winner of the rate draws gets the slot.
        let peak_index = self.config.channels.rates().len() - 1;
        for ap in 0..m {
            let n = self.aps[ap].len();
            if n == 0 {
                continue;
            }
            let k = self.config.channels.sample_max_index(ap, n, &mut self.streams.channels[ap]);
            rec.peak_drawn[ap] = k == peak_index;
            let rate = self.config.channels.rates()[k];
            if rate == 0 {
                continue;
            }
            // Conditionally on the winning rate, every flow is equally likely
            // to be the winner (the draws are exchangeable and ties break
            // uniformly), so the served flow is uniform over the AP.
            let idx = self.streams.channels[ap].gen_range(0..n);
            self.serve(ap, idx, rate, rec);
        }

        for ap in 0..m {
            rec.post_workloads[ap] = self.workloads[ap];
            let served = rec.pre_workloads[ap] + rec.nu[ap] - self.workloads[ap];
            debug_assert!(served <= 1, "AP workload fell by more than one in a slot");
            debug_assert!(served >= rec.peak_drawn[ap] as u64, "peak draw must guarantee service");
            rec.mu[ap] = served;
        }
        self.slot += 1;
    }

    /// Reference slot update that draws one rate per flow and delegates the
    /// winner choice to the scheduling primitive. Same law as [`step`] but
    /// O(flows) draws per slot; kept for cross-validation.
    pub fn step_per_flow(&mut self, balancer: &mut LoadBalancer, rec: &mut SlotRecord) {
        let m = self.config.num_aps;
        rec.reset(m);
        rec.slot = self.slot;
        rec.pre_workloads.copy_from_slice(&self.workloads);

        let arrivals = self.config.arrivals.sample(&mut self.streams.arrivals);
        rec.arrivals = arrivals;
        let batch_dest = if arrivals > 0 && self.config.policy == PolicyKind::Jlw && m > 1 {
            route_jlw(&self.workloads, balancer)
        } else {
            0
        };
        let c_max = self.config.channels.c_max();
        for _ in 0..arrivals {
            let size = self.config.sizes.sample(&mut self.streams.sizes);
            let dest = if m == 1 {
                0
            } else {
                match self.config.policy {
                    PolicyKind::Bcf => {
                        let law = &self.config.channels;
                        let best = (0..m)
                            .map(|ap| law.sample_rate(ap, &mut self.streams.channels[ap]))
                            .collect::<Vec<_>>();
                        route_bcf(&best, balancer)
                    }
                    PolicyKind::Rlb => route_rlb(m, balancer),
                    PolicyKind::Jlw => batch_dest,
                }
            };
            let id = self.next_flow_id;
            self.next_flow_id += 1;
            let v = workload_of(size, c_max);
            self.aps[dest].push(Flow { id, size, residual: size, arrival_slot: self.slot });
            self.workloads[dest] += v;
            rec.nu[dest] += v;
        }
        rec.flows_in_service = self.num_flows();

        let mut drawn = Vec::new();
        let mut residuals = Vec::new();
        for ap in 0..m {
            let n = self.aps[ap].len();
            if n == 0 {
                continue;
            }
            drawn.clear();
            drawn.extend(
                (0..n).map(|_| self.config.channels.sample_rate(ap, &mut self.streams.channels[ap])),
            );
            residuals.clear();
            residuals.extend(self.aps[ap].iter().map(|f| u64::from(f.residual)));
            rec.peak_drawn[ap] = peak_drawn(&drawn, c_max);
            if let Some(d) = crate::policies::schedule_max_rate(
                &residuals,
                &drawn,
                &mut self.streams.channels[ap],
            ) {
                if d.delivered > 0 {
                    self.serve(ap, d.flow_index, d.rate, rec);
                }
            }
        }

        for ap in 0..m {
            rec.post_workloads[ap] = self.workloads[ap];
            let served = rec.pre_workloads[ap] + rec.nu[ap] - self.workloads[ap];
            debug_assert!(served <= 1);
            debug_assert!(served >= rec.peak_drawn[ap] as u64);
            rec.mu[ap] = served;
        }
        self.slot += 1;
    }

    /// Deliver `min(rate, residual)` packets to flow `idx` at `ap`.
    fn serve(&mut self, ap: usize, idx: usize, rate: u32, rec: &mut SlotRecord) {
        let c_max = self.config.channels.c_max();
        let flow = &mut self.aps[ap][idx];
        let delivered = rate.min(flow.residual);
        rec.delivered_packets += delivered as u64;
        let before = workload_of(flow.residual, c_max);
        flow.residual -= delivered;
        if flow.residual == 0 {
            let flow = self.aps[ap].swap_remove(idx);
            self.workloads[ap] -= before;
            rec.departures.push(Departure {
                flow_id: flow.id,
                ap,
                size: flow.size,
                arrival_slot: flow.arrival_slot,
                departure_slot: self.slot,
            });
        } else {
            self.workloads[ap] -= before - workload_of(flow.residual, c_max);
        }
    }
}
