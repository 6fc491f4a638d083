//! Discrete-tick simulation of n partially synchronous processes.
//!
//! Global time advances one tick at a time; each process reads a local clock
//! offset from global time by a fixed amount in [0, epsilon], so pairwise
//! skew never exceeds epsilon. Messages are delivered a configurable number
//! of ticks after sending. Each process performs at most one event per tick,
//! which keeps per-process event sequences strictly increasing in pt.
//!
//! Two workloads: a synthetic one where the variable flips with probability
//! beta per eligible tick, and a time-division exclusive-access protocol with
//! an optional overrun fault.

use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hlc::{advance_local, advance_receive, HlcTimestamp};
use crate::trace::{Domain, Event, EventKind, MessageRecord, MsgId, ProcessId, Trace, Value};
use crate::Ticks;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Process count.
    pub n: u32,
    /// Real milliseconds per simulated tick; used when converting
    /// millisecond-denominated settings, never inside the simulation itself.
    pub tick_ms: f64,
    /// Maximum clock skew, in ticks.
    pub epsilon: Ticks,
    /// Message delay bounds, in ticks. Equal bounds mean a fixed delay.
    pub delta_min: Ticks,
    pub delta_max: Ticks,
    /// Per-tick probability that a process sends a message.
    pub mfr: f64,
    /// Global ticks to simulate.
    pub duration: Ticks,
    pub seed: u64,
    pub workload: Workload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Workload {
    Synthetic {
        /// Per-tick probability of changing the variable once eligible.
        beta: f64,
        /// Minimum ticks a value is held before becoming eligible to change.
        interval: Ticks,
        domain: Domain,
    },
    #[serde(rename = "exclusive")]
    ExclusiveAccess {
        /// Length of each process's slot, in local ticks.
        slot: Ticks,
        /// Ticks at the end of the slot the process must leave free.
        guard: Ticks,
        /// Extra hold when the overrun fault fires.
        overrun: Ticks,
        overrun_prob: f64,
    },
}

impl ScenarioConfig {
    /// Reference synthetic scenario: 10 processes, 0.01 ms ticks, epsilon
    /// 10 ms, delta 1 ms, 1000 msgs/s, beta 1%, hold 0.1 ms, 1 s run.
    pub fn synthetic_defaults(seed: u64) -> Self {
        ScenarioConfig {
            n: 10,
            tick_ms: 0.01,
            epsilon: 1000,
            delta_min: 100,
            delta_max: 100,
            mfr: 0.01,
            duration: 100_000,
            seed,
            workload: Workload::Synthetic {
                beta: 0.01,
                interval: 10,
                domain: Domain::Bool,
            },
        }
    }

    /// Reference exclusive-access scenario: 100 ms slots, 10 ms guard,
    /// 1 ms overrun with 10% probability.
    pub fn exclusive_defaults(seed: u64) -> Self {
        ScenarioConfig {
            n: 10,
            tick_ms: 0.01,
            epsilon: 1000,
            delta_min: 100,
            delta_max: 100,
            mfr: 0.01,
            duration: 100_000,
            seed,
            workload: Workload::ExclusiveAccess {
                slot: 10_000,
                guard: 1_000,
                overrun: 100,
                overrun_prob: 0.1,
            },
        }
    }

    pub fn domain(&self) -> Domain {
        match self.workload {
            Workload::Synthetic { domain, .. } => domain,
            Workload::ExclusiveAccess { .. } => Domain::Bool,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &'static str, p: f64| {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                Err(SimError::ProbabilityRange {
                    field: name,
                    value: p,
                })
            } else {
                Ok(())
            }
        };
        let positive = |name: &'static str, v: Ticks| {
            if v == 0 {
                Err(SimError::ZeroField { field: name })
            } else {
                Ok(())
            }
        };
        if self.n == 0 {
            return Err(SimError::ZeroField { field: "n" });
        }
        prob("mfr", self.mfr)?;
        positive("epsilon", self.epsilon)?;
        positive("delta_min", self.delta_min)?;
        positive("duration", self.duration)?;
        if self.delta_min > self.delta_max {
            return Err(SimError::DeltaRange {
                min: self.delta_min,
                max: self.delta_max,
            });
        }
        match &self.workload {
            Workload::Synthetic { beta, interval, .. } => {
                prob("beta", *beta)?;
                positive("interval", *interval)?;
            }
            Workload::ExclusiveAccess {
                slot,
                guard,
                overrun_prob,
                ..
            } => {
                prob("overrun_prob", *overrun_prob)?;
                positive("slot", *slot)?;
                if guard >= slot {
                    return Err(SimError::GuardTooLarge {
                        guard: *guard,
                        slot: *slot,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("{field} must be within [0, 1], got {value}")]
    ProbabilityRange { field: &'static str, value: f64 },
    #[error("{field} must be positive")]
    ZeroField { field: &'static str },
    #[error("delta_min {min} exceeds delta_max {max}")]
    DeltaRange { min: Ticks, max: Ticks },
    #[error("guard {guard} must be smaller than slot {slot}")]
    GuardTooLarge { guard: Ticks, slot: Ticks },
    #[error("simulated trace violates invariants: {0}")]
    BrokenTrace(#[from] crate::trace::TraceError),
}

/// Sample the exclusive-access overrun fault: with probability
/// `overrun_prob` the access interval end extends by `overrun` ticks.
pub fn sample_overrun<R: Rng>(overrun: Ticks, overrun_prob: f64, rng: &mut R) -> Ticks {
    if overrun_prob > 0.0 && rng.random_bool(overrun_prob) {
        overrun
    } else {
        0
    }
}

struct ProcState {
    offset: Ticks,
    hlc: HlcTimestamp,
    value: Value,
    /// Synthetic workload: local tick before which the value may not change.
    hold_until: Ticks,
    /// Exclusive access: absolute local tick at which the current access ends.
    access_until: Ticks,
    ready: VecDeque<Flight>,
}

struct Flight {
    arrive: Ticks,
    seq: u64,
    from: ProcessId,
    to: ProcessId,
    msg: MsgId,
    payload: HlcTimestamp,
}

impl PartialEq for Flight {
    fn eq(&self, other: &Self) -> bool {
        (self.arrive, self.seq) == (other.arrive, other.seq)
    }
}
impl Eq for Flight {}
impl PartialOrd for Flight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Flight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert for earliest-first.
        (other.arrive, other.seq).cmp(&(self.arrive, self.seq))
    }
}

/// Run the scenario to completion. Deterministic: the same config and seed
/// produce a bit-identical trace.
pub fn run(config: &ScenarioConfig) -> Result<Trace, SimError> {
    config.validate()?;
    let n = config.n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states: Vec<ProcState> = (0..n)
        .map(|_| ProcState {
            offset: rng.random_range(0..=config.epsilon),
            hlc: HlcTimestamp::ZERO,
            value: Value::initial(config.domain()),
            hold_until: 0,
            access_until: 0,
            ready: VecDeque::new(),
        })
        .collect();
    let mut events: Vec<Vec<Event>> = vec![Vec::new(); n];
    let mut messages: Vec<MessageRecord> = Vec::new();
    let mut inflight: BinaryHeap<Flight> = BinaryHeap::new();
    let mut next_msg = 0u64;
    let mut next_seq = 0u64;

    for now in 0..config.duration {
        // Move arrived messages into per-receiver ready queues, oldest first.
        while inflight.peek().is_some_and(|f| f.arrive <= now) {
            let flight = inflight.pop().unwrap();
            states[flight.to.idx()].ready.push_back(flight);
        }
        for i in 0..n {
            let proc = ProcessId::from_idx(i);
            let local = now + states[i].offset;
            let mut acted = false;

            // Scheduled workload transitions take priority: delaying an
            // exclusive-access release would eat into the guard band.
            if let Workload::ExclusiveAccess {
                slot,
                guard,
                overrun,
                overrun_prob,
            } = config.workload
            {
                let cycle = slot * config.n as u64;
                let phase = local % cycle;
                let nominal = i as u64 * slot;
                let state = &mut states[i];
                if state.value.raw() == 0 {
                    if phase >= nominal && phase < nominal + slot - guard {
                        let extension = sample_overrun(overrun, overrun_prob, &mut rng);
                        state.access_until = local - phase + nominal + slot - guard + extension;
                        record_change(state, &mut events[i], proc, local, true);
                        acted = true;
                    }
                } else if local >= state.access_until {
                    record_change(state, &mut events[i], proc, local, false);
                    acted = true;
                }
            }

            // Deliver at most one pending message.
            if !acted {
                if let Some(flight) = states[i].ready.pop_front() {
                    let state = &mut states[i];
                    state.hlc = advance_receive(state.hlc, flight.payload, local);
                    events[i].push(Event {
                        proc,
                        kind: EventKind::Receive { msg: flight.msg },
                        pt: local,
                        hlc: state.hlc,
                    });
                    messages.push(MessageRecord {
                        id: flight.msg,
                        from: flight.from,
                        sent: flight.payload,
                        to: flight.to,
                        recv: state.hlc,
                    });
                    acted = true;
                }
            }

            // Synthetic workload: random flip once the hold expires.
            if !acted {
                if let Workload::Synthetic { beta, interval, .. } = config.workload {
                    if local >= states[i].hold_until && beta > 0.0 && rng.random_bool(beta) {
                        let next = states[i].value.flipped().raw() != 0;
                        record_change(&mut states[i], &mut events[i], proc, local, next);
                        states[i].hold_until = local + interval;
                        acted = true;
                    }
                }
            }

            // Random send to another process. Sends whose delivery cannot
            // complete inside the run are not injected.
            if !acted && config.n >= 2 && config.mfr > 0.0 && rng.random_bool(config.mfr) {
                let mut dest = rng.random_range(0..n - 1);
                if dest >= i {
                    dest += 1;
                }
                let delay = if config.delta_min == config.delta_max {
                    config.delta_min
                } else {
                    rng.random_range(config.delta_min..=config.delta_max)
                };
                if now + delay < config.duration {
                    let state = &mut states[i];
                    state.hlc = advance_local(state.hlc, local);
                    let msg = MsgId(next_msg);
                    next_msg += 1;
                    events[i].push(Event {
                        proc,
                        kind: EventKind::Send { msg },
                        pt: local,
                        hlc: state.hlc,
                    });
                    inflight.push(Flight {
                        arrive: now + delay,
                        seq: next_seq,
                        from: proc,
                        to: ProcessId::from_idx(dest),
                        msg,
                        payload: state.hlc,
                    });
                    next_seq += 1;
                }
            }
        }
    }

    // Same-tick contention can defer a delivery past the end of the run;
    // drop the matching send event so every send in the trace has a receive.
    let mut undelivered: Vec<MsgId> = inflight.drain().map(|f| f.msg).collect();
    for state in &mut states {
        undelivered.extend(state.ready.drain(..).map(|f| f.msg));
    }
    if !undelivered.is_empty() {
        for list in &mut events {
            list.retain(|e| match e.kind {
                EventKind::Send { msg } => !undelivered.contains(&msg),
                _ => true,
            });
        }
    }

    let trace = Trace {
        n: config.n,
        epsilon: config.epsilon,
        duration: config.duration,
        domain: config.domain(),
        offsets: states.iter().map(|s| s.offset).collect(),
        events,
        messages,
    };
    trace.validate()?;
    Ok(trace)
}

fn record_change(
    state: &mut ProcState,
    events: &mut Vec<Event>,
    proc: ProcessId,
    local: Ticks,
    new_bit: bool,
) {
    let old = state.value;
    let new = Value::from_bit(
        match old {
            Value::Bool(_) => Domain::Bool,
            Value::Int(_) => Domain::Int,
        },
        new_bit,
    );
    state.hlc = advance_local(state.hlc, local);
    state.value = new;
    events.push(Event {
        proc,
        kind: EventKind::VarChange { old, new },
        pt: local,
        hlc: state.hlc,
    });
}
