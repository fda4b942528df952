//! Flow-level simulator and analytics for load balancing over wireless
//! access points with fading channels.
//!
//! Flows arrive in slotted time, are routed once to an access point, and are
//! served there by a max-rate scheduler; each AP completes at most one unit
//! of workload per slot. The crate provides the model ([`model`]), the
//! routing policies ([`policies`]), a deterministic seeded run engine
//! ([`engine`]), and closed-form performance predictions ([`analysis`]),
//! including the heavy-traffic workload limits the simulator is checked
//! against.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod model;
pub mod policies;
pub mod rng;

pub use analysis::{HeavyTrafficSpec, OracleQueue};
pub use engine::{run, RunConfig, RunOutput, RunSummary, StabilityFlag};
pub use error::ConfigError;
pub use model::{
    ArrivalLaw, ChannelLaw, Departure, Flow, FlowSizeLaw, SlotRecord, SystemConfig, SystemState,
};
pub use policies::{LoadBalancer, PolicyKind, SchedulerDecision};
