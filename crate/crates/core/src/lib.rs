//! Simulation and runtime monitoring of partially synchronous distributed
//! systems.
//!
//! Processes carry hybrid logical clocks and report variable-value intervals
//! and message events to a monitor. The monitor encodes each window of
//! reports as linear integer constraints whose models are exactly the
//! consistent snapshots violating (satisfying) a monitored predicate, and
//! asks an external SMT solver for a verdict. A brute-force oracle decides
//! small instances independently for accuracy testing.

pub mod hlc;
pub mod monitor;
pub mod oracle;
pub mod predicate;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod smt;
pub mod smtlite;
#[cfg(test)]
pub(crate) mod testutil;
pub mod trace;

/// Simulated clock ticks. One tick defaults to 0.01 ms of modeled time.
pub type Ticks = u64;
