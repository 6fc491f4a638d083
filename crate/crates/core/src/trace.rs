//! Events, traces, snapshots, and the happened-before relation.
//!
//! A trace records what actually happened in a run: per-process event
//! sequences plus the inter-process messages. Snapshots assign one timestamp
//! and one variable value per process; consistency of a snapshot is what the
//! SMT encoding enforces and what the brute-force oracle enumerates.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hlc::HlcTimestamp;
use crate::Ticks;

/// 1-based process identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    /// Zero-based index into per-process vectors.
    pub fn idx(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_idx(idx: usize) -> Self {
        ProcessId(idx as u32 + 1)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Variable domain for a run: booleans or integers restricted to {0, 1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    #[default]
    Bool,
    Int,
}

/// A process variable value. Both domains carry one bit of information;
/// the distinction only affects how trace files spell the value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(u8),
}

impl Value {
    pub fn initial(domain: Domain) -> Self {
        match domain {
            Domain::Bool => Value::Bool(false),
            Domain::Int => Value::Int(0),
        }
    }

    pub fn from_bit(domain: Domain, bit: bool) -> Self {
        match domain {
            Domain::Bool => Value::Bool(bit),
            Domain::Int => Value::Int(bit as u8),
        }
    }

    pub fn raw(self) -> u64 {
        match self {
            Value::Bool(b) => b as u64,
            Value::Int(i) => i as u64,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Value::Bool(b) => Value::Bool(!b),
            Value::Int(i) => Value::Int(if i == 0 { 1 } else { 0 }),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.raw() == other.raw()
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

/// Identifier linking a send event to its receive event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MsgId(pub u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    VarChange { old: Value, new: Value },
    Send { msg: MsgId },
    Receive { msg: MsgId },
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub proc: ProcessId,
    pub kind: EventKind,
    /// Local physical clock tick at which the event occurred.
    pub pt: Ticks,
    pub hlc: HlcTimestamp,
}

/// One inter-process message with the HLC stamps of its endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: MsgId,
    pub from: ProcessId,
    pub sent: HlcTimestamp,
    pub to: ProcessId,
    pub recv: HlcTimestamp,
}

impl MessageRecord {
    /// The monitor-observable view of this message.
    pub fn as_report(&self) -> crate::report::MsgReport {
        crate::report::MsgReport {
            from: self.from,
            sent: self.sent,
            to: self.to,
            recv: self.recv,
        }
    }
}

/// A complete simulated run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub n: u32,
    pub epsilon: Ticks,
    /// Global ticks simulated; local clocks run ahead by per-process offsets.
    pub duration: Ticks,
    pub domain: Domain,
    /// Fixed clock offset per process: local pt = global tick + offset.
    pub offsets: Vec<Ticks>,
    /// Per-process event sequences, chronological.
    pub events: Vec<Vec<Event>>,
    pub messages: Vec<MessageRecord>,
}

/// Position of an event inside a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventId {
    pub proc: ProcessId,
    pub index: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("event {0:?} is not in the trace")]
    EventNotInTrace(EventId),
    #[error("process {0} out of range 1..={1}")]
    ProcessOutOfRange(u32, u32),
    #[error("{proc} events not strictly increasing in pt at index {index}")]
    NonMonotonicPt { proc: ProcessId, index: usize },
    #[error("{proc} events not strictly increasing in HLC at index {index}")]
    NonMonotonicHlc { proc: ProcessId, index: usize },
    #[error("{proc} event at pt={pt} has l={l} lagging the local clock")]
    ClockLag {
        proc: ProcessId,
        pt: Ticks,
        l: Ticks,
    },
    #[error("{proc} event at pt={pt} has l={l}, beyond the drift bound epsilon={epsilon}")]
    DriftBound {
        proc: ProcessId,
        pt: Ticks,
        l: Ticks,
        epsilon: Ticks,
    },
    #[error("receive of message {0:?} has no matching send")]
    UnmatchedReceive(MsgId),
    #[error("message {0:?} receive stamp does not exceed its send stamp")]
    MessageOrder(MsgId),
    #[error("snapshot has {got} entries, expected one per process ({expected})")]
    SnapshotArity { got: usize, expected: usize },
}

impl Trace {
    /// Exclusive upper bound of the HLC l axis for this trace: every stamp
    /// generated in the run is strictly below it.
    pub fn horizon(&self) -> HlcTimestamp {
        HlcTimestamp::new(self.duration + self.epsilon, 0)
    }

    pub fn event(&self, id: EventId) -> Result<&Event, TraceError> {
        let list = self
            .events
            .get(id.proc.idx())
            .ok_or(TraceError::EventNotInTrace(id))?;
        list.get(id.index).ok_or(TraceError::EventNotInTrace(id))
    }

    pub fn event_ids(&self) -> impl Iterator<Item = EventId> + '_ {
        self.events.iter().enumerate().flat_map(|(p, list)| {
            (0..list.len()).map(move |index| EventId {
                proc: ProcessId::from_idx(p),
                index,
            })
        })
    }

    pub fn event_count(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    /// Check the structural invariants: per-process monotonicity, clock
    /// bounds, and send/receive matching.
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.events.len() != self.n as usize {
            return Err(TraceError::ProcessOutOfRange(
                self.events.len() as u32,
                self.n,
            ));
        }
        let mut sends: HashMap<MsgId, &Event> = HashMap::new();
        for list in &self.events {
            for ev in list {
                if let EventKind::Send { msg } = ev.kind {
                    sends.insert(msg, ev);
                }
            }
        }
        for (p, list) in self.events.iter().enumerate() {
            let proc = ProcessId::from_idx(p);
            for (index, ev) in list.iter().enumerate() {
                if index > 0 {
                    let prev = &list[index - 1];
                    if ev.pt <= prev.pt {
                        return Err(TraceError::NonMonotonicPt { proc, index });
                    }
                    if ev.hlc <= prev.hlc {
                        return Err(TraceError::NonMonotonicHlc { proc, index });
                    }
                }
                if ev.hlc.l < ev.pt {
                    return Err(TraceError::ClockLag {
                        proc,
                        pt: ev.pt,
                        l: ev.hlc.l,
                    });
                }
                if ev.hlc.l - ev.pt > self.epsilon {
                    return Err(TraceError::DriftBound {
                        proc,
                        pt: ev.pt,
                        l: ev.hlc.l,
                        epsilon: self.epsilon,
                    });
                }
                if let EventKind::Receive { msg } = ev.kind {
                    let send = sends.get(&msg).ok_or(TraceError::UnmatchedReceive(msg))?;
                    if send.hlc >= ev.hlc {
                        return Err(TraceError::MessageOrder(msg));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Precomputed happened-before reachability for one trace.
///
/// Events are ordered by HLC stamp, which is a topological order for all
/// four Def-1 edge kinds (each strictly increases the HLC), and strict
/// reachability is accumulated as bitsets in reverse order.
pub struct HbClosure {
    positions: HashMap<EventId, usize>,
    reach: Vec<Vec<u64>>,
}

impl HbClosure {
    pub fn build(trace: &Trace) -> Result<Self, TraceError> {
        trace.validate()?;
        let mut order: Vec<(EventId, &Event)> = Vec::with_capacity(trace.event_count());
        for id in trace.event_ids() {
            order.push((id, trace.event(id)?));
        }
        order.sort_by_key(|(id, ev)| (ev.hlc, id.proc, id.index));
        let positions: HashMap<EventId, usize> = order
            .iter()
            .enumerate()
            .map(|(pos, (id, _))| (*id, pos))
            .collect();

        let mut recv_pos: HashMap<MsgId, usize> = HashMap::new();
        for (pos, (_, ev)) in order.iter().enumerate() {
            if let EventKind::Receive { msg } = ev.kind {
                recv_pos.insert(msg, pos);
            }
        }

        let total = order.len();
        let words = total.div_ceil(64);
        let mut reach = vec![vec![0u64; words]; total];
        for pos in (0..total).rev() {
            let (id, ev) = order[pos];
            let mut mask = vec![0u64; words];
            let absorb = |succ: usize, mask: &mut Vec<u64>| {
                mask[succ / 64] |= 1 << (succ % 64);
                // Successors were already processed (they sit later in order).
                let succ_mask = &reach[succ];
                for (w, s) in mask.iter_mut().zip(succ_mask) {
                    *w |= s;
                }
            };
            // Local order: the next event at the same process.
            let next_local = EventId {
                proc: id.proc,
                index: id.index + 1,
            };
            if let Some(&succ) = positions.get(&next_local) {
                absorb(succ, &mut mask);
            }
            // Communication: a send reaches its receive.
            if let EventKind::Send { msg } = ev.kind {
                if let Some(&succ) = recv_pos.get(&msg) {
                    absorb(succ, &mut mask);
                }
            }
            // Clock synchronization: anything more than epsilon later on the
            // physical clocks.
            for (succ, (_, other)) in order.iter().enumerate() {
                if other.pt > ev.pt && other.pt - ev.pt > trace.epsilon {
                    absorb(succ, &mut mask);
                }
            }
            reach[pos] = mask;
        }
        Ok(HbClosure { positions, reach })
    }

    pub fn happened_before(&self, a: EventId, b: EventId) -> Result<bool, TraceError> {
        let pa = *self
            .positions
            .get(&a)
            .ok_or(TraceError::EventNotInTrace(a))?;
        let pb = *self
            .positions
            .get(&b)
            .ok_or(TraceError::EventNotInTrace(b))?;
        Ok(self.reach[pa][pb / 64] & (1 << (pb % 64)) != 0)
    }

    pub fn possibly_concurrent(&self, a: EventId, b: EventId) -> Result<bool, TraceError> {
        Ok(!self.happened_before(a, b)? && !self.happened_before(b, a)?)
    }
}

/// Def-1 happened-before: local order, send-to-receive, the epsilon
/// clock-synchronization rule, and transitive closure of the three.
pub fn happened_before(trace: &Trace, a: EventId, b: EventId) -> Result<bool, TraceError> {
    trace.event(a)?;
    trace.event(b)?;
    HbClosure::build(trace)?.happened_before(a, b)
}

/// One timestamp and value per process: a candidate snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnapshotAssignment {
    pub entries: Vec<SnapshotEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub proc: ProcessId,
    pub at: HlcTimestamp,
    pub value: Value,
}

impl SnapshotAssignment {
    pub fn values(&self) -> Vec<Value> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn stamp(&self, proc: ProcessId) -> HlcTimestamp {
        self.entries[proc.idx()].at
    }

    pub fn max_l(&self) -> Ticks {
        self.entries.iter().map(|e| e.at.l).max().unwrap_or(0)
    }
}

/// Whether the snapshot is consistent: pairwise clock-synchronization
/// (`|l_i - l_j| <= epsilon`) plus every communication constraint: if a
/// process's snapshot point is at or past a receive, the sender's point must
/// be strictly past the matching send.
pub fn is_consistent(s: &SnapshotAssignment, trace: &Trace) -> Result<bool, TraceError> {
    if s.entries.len() != trace.n as usize {
        return Err(TraceError::SnapshotArity {
            got: s.entries.len(),
            expected: trace.n as usize,
        });
    }
    let msgs: Vec<crate::report::MsgReport> = trace
        .messages
        .iter()
        .map(MessageRecord::as_report)
        .collect();
    Ok(consistent_with(
        &s.entries.iter().map(|e| e.at).collect::<Vec<_>>(),
        trace.epsilon,
        &msgs,
    ))
}

/// Consistency over raw per-process stamps; shared by the snapshot check,
/// the oracle enumeration, and model-soundness tests.
pub fn consistent_with(
    stamps: &[HlcTimestamp],
    epsilon: Ticks,
    messages: &[crate::report::MsgReport],
) -> bool {
    for i in 0..stamps.len() {
        for j in (i + 1)..stamps.len() {
            if stamps[i].l.abs_diff(stamps[j].l) > epsilon {
                return false;
            }
        }
    }
    for m in messages {
        let receiver = stamps[m.to.idx()];
        let sender = stamps[m.from.idx()];
        if receiver >= m.recv && sender <= m.sent {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::token_trace;

    fn ts(l: Ticks, c: u32) -> HlcTimestamp {
        HlcTimestamp::new(l, c)
    }

    fn event_at(trace: &Trace, proc: u32, l: Ticks) -> EventId {
        let p = ProcessId(proc);
        let index = trace.events[p.idx()]
            .iter()
            .position(|e| e.hlc.l == l)
            .unwrap();
        EventId { proc: p, index }
    }

    #[test]
    fn message_forces_happened_before() {
        // With the token message, the release at ⟨50,0⟩ happened before the
        // acquire at ⟨55,0⟩ regardless of epsilon.
        for epsilon in [1, 10, 1000] {
            let trace = token_trace(true, epsilon);
            let a = event_at(&trace, 1, 50);
            let b = event_at(&trace, 2, 55);
            assert!(happened_before(&trace, a, b).unwrap(), "epsilon={epsilon}");
            assert!(!happened_before(&trace, b, a).unwrap());
        }
    }

    #[test]
    fn without_message_events_are_possibly_concurrent() {
        let trace = token_trace(false, 10);
        let a = event_at(&trace, 1, 50);
        let b = event_at(&trace, 2, 55);
        assert!(!happened_before(&trace, a, b).unwrap());
        assert!(!happened_before(&trace, b, a).unwrap());
    }

    #[test]
    fn clock_synchronization_clause() {
        // pt gap 15 > epsilon 10 forces ordering even with no messages.
        let trace = Trace {
            n: 2,
            epsilon: 10,
            duration: 30,
            domain: Domain::Bool,
            offsets: vec![0, 0],
            events: vec![
                vec![Event {
                    proc: ProcessId(1),
                    kind: EventKind::Local,
                    pt: 10,
                    hlc: ts(10, 0),
                }],
                vec![Event {
                    proc: ProcessId(2),
                    kind: EventKind::Local,
                    pt: 25,
                    hlc: ts(25, 0),
                }],
            ],
            messages: vec![],
        };
        let a = EventId {
            proc: ProcessId(1),
            index: 0,
        };
        let b = EventId {
            proc: ProcessId(2),
            index: 0,
        };
        assert!(happened_before(&trace, a, b).unwrap());
        assert!(!happened_before(&trace, b, a).unwrap());
        // Boundary: a gap of exactly epsilon stays possibly concurrent.
        let mut boundary = trace.clone();
        boundary.events[1][0].pt = 20;
        boundary.events[1][0].hlc = ts(20, 0);
        assert!(!happened_before(&boundary, a, b).unwrap());
    }

    #[test]
    fn missing_event_is_an_error() {
        let trace = token_trace(false, 10);
        let bogus = EventId {
            proc: ProcessId(1),
            index: 99,
        };
        let ok = EventId {
            proc: ProcessId(2),
            index: 0,
        };
        assert_eq!(
            happened_before(&trace, bogus, ok).unwrap_err(),
            TraceError::EventNotInTrace(bogus)
        );
    }

    #[test]
    fn snapshot_consistency_fig1() {
        let trace = token_trace(false, 10);
        let snap = |l1, l2| SnapshotAssignment {
            entries: vec![
                SnapshotEntry {
                    proc: ProcessId(1),
                    at: ts(l1, 0),
                    value: Value::Bool(true),
                },
                SnapshotEntry {
                    proc: ProcessId(2),
                    at: ts(l2, 0),
                    value: Value::Bool(true),
                },
            ],
        };
        // Both in their token intervals, skew 10 allows |49-55| = 6.
        assert!(is_consistent(&snap(49, 55), &trace).unwrap());
        // Skew 4 does not.
        let tight = token_trace(false, 4);
        assert!(!is_consistent(&snap(50, 55), &tight).unwrap());
        // Zero stamps are trivially consistent when nothing was received.
        assert!(is_consistent(&snap(0, 0), &trace).unwrap());
    }

    #[test]
    fn snapshot_consistency_respects_messages() {
        let trace = token_trace(true, 10);
        let snap = |at1: HlcTimestamp, at2: HlcTimestamp| SnapshotAssignment {
            entries: vec![
                SnapshotEntry {
                    proc: ProcessId(1),
                    at: at1,
                    value: Value::Bool(true),
                },
                SnapshotEntry {
                    proc: ProcessId(2),
                    at: at2,
                    value: Value::Bool(true),
                },
            ],
        };
        // Receiver at/after the receive forces the sender strictly past the send.
        assert!(!is_consistent(&snap(ts(49, 0), ts(55, 0)), &trace).unwrap());
        assert!(is_consistent(&snap(ts(52, 0), ts(55, 0)), &trace).unwrap());
        // Receiver before the receive leaves the sender free.
        assert!(is_consistent(&snap(ts(49, 0), ts(53, 0)), &trace).unwrap());
        // Exactly at the send stamp is still "not yet sent".
        assert!(!is_consistent(&snap(ts(51, 0), ts(54, 0)), &trace).unwrap());
    }

    #[test]
    fn snapshot_arity_checked() {
        let trace = token_trace(false, 10);
        let s = SnapshotAssignment {
            entries: vec![SnapshotEntry {
                proc: ProcessId(1),
                at: ts(0, 0),
                value: Value::Bool(false),
            }],
        };
        assert!(matches!(
            is_consistent(&s, &trace),
            Err(TraceError::SnapshotArity { .. })
        ));
    }

    #[test]
    fn validate_catches_broken_invariants() {
        let mut trace = token_trace(true, 10);
        assert!(trace.validate().is_ok());
        trace.events[0][1].pt = 45;
        assert!(matches!(
            trace.validate(),
            Err(TraceError::NonMonotonicPt { .. })
        ));

        let mut trace = token_trace(true, 10);
        trace.events[1].retain(|e| !matches!(e.kind, EventKind::Receive { .. }));
        trace.events[1].push(Event {
            proc: ProcessId(2),
            kind: EventKind::Receive { msg: MsgId(7) },
            pt: 61,
            hlc: ts(61, 0),
        });
        assert!(matches!(
            trace.validate(),
            Err(TraceError::UnmatchedReceive(MsgId(7)))
        ));
    }

    #[test]
    fn hb_is_irreflexive_and_transitive_on_token_trace() {
        let trace = token_trace(true, 10);
        let closure = HbClosure::build(&trace).unwrap();
        let ids: Vec<EventId> = trace.event_ids().collect();
        for &a in &ids {
            assert!(!closure.happened_before(a, a).unwrap());
            for &b in &ids {
                for &c in &ids {
                    if closure.happened_before(a, b).unwrap()
                        && closure.happened_before(b, c).unwrap()
                    {
                        assert!(closure.happened_before(a, c).unwrap());
                    }
                }
            }
        }
    }
}
