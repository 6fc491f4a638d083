//! Shared fixtures for unit tests.

use crate::hlc::HlcTimestamp;
use crate::trace::{Domain, Event, EventKind, MessageRecord, MsgId, ProcessId, Trace, Value};
use crate::Ticks;

fn ts(l: Ticks, c: u32) -> HlcTimestamp {
    HlcTimestamp::new(l, c)
}

/// The two-process token run of the motivating example: P1 holds the token
/// during [45,50), P2 during [55,60). `with_message` adds the token-passing
/// message sent at ⟨51,0⟩ and received at ⟨54,0⟩.
pub(crate) fn token_trace(with_message: bool, epsilon: Ticks) -> Trace {
    let var = |proc, pt, old: bool, new: bool| Event {
        proc: ProcessId(proc),
        kind: EventKind::VarChange {
            old: Value::Bool(old),
            new: Value::Bool(new),
        },
        pt,
        hlc: ts(pt, 0),
    };
    let mut p1 = vec![var(1, 45, false, true), var(1, 50, true, false)];
    let mut p2 = vec![var(2, 55, false, true), var(2, 60, true, false)];
    let mut messages = Vec::new();
    if with_message {
        p1.push(Event {
            proc: ProcessId(1),
            kind: EventKind::Send { msg: MsgId(0) },
            pt: 51,
            hlc: ts(51, 0),
        });
        p1.sort_by_key(|e| e.pt);
        p2.push(Event {
            proc: ProcessId(2),
            kind: EventKind::Receive { msg: MsgId(0) },
            pt: 54,
            hlc: ts(54, 0),
        });
        p2.sort_by_key(|e| e.pt);
        messages.push(MessageRecord {
            id: MsgId(0),
            from: ProcessId(1),
            sent: ts(51, 0),
            to: ProcessId(2),
            recv: ts(54, 0),
        });
    }
    Trace {
        n: 2,
        epsilon,
        duration: 60,
        domain: Domain::Bool,
        offsets: vec![0, 0],
        events: vec![p1, p2],
        messages,
    }
}
