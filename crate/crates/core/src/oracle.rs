//! Brute-force ground truth for small instances.
//!
//! The oracle enumerates candidate snapshots directly from the definitions:
//! one timestamp per process inside the reported value intervals, pairwise
//! clock-synchronized, message constraints honored, predicate satisfied. It
//! shares nothing with the constraint encoding or the solver, which is the
//! point: on instances small enough to enumerate, the two must agree.
//!
//! Also hosts the satisfiability-reduction instance generator: n silent
//! processes whose variables each flip true once inside the skew window, so
//! valid snapshots correspond exactly to satisfying assignments of a CNF
//! formula over the variables.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hlc::{advance_local, HlcTimestamp};
use crate::predicate::{eval_predicate, CnfFormula, Predicate, PredicateError};
use crate::report::{trace_to_reports, ReportError, WindowData};
use crate::trace::{
    consistent_with, Domain, Event, EventKind, ProcessId, SnapshotAssignment, SnapshotEntry, Trace,
    TraceError, Value,
};
use crate::Ticks;

/// Guard rails against combinatorial blowup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_processes: u32,
    /// Upper bound on the trace's l-axis horizon (ticks to enumerate).
    pub max_ticks: Ticks,
    pub max_events_per_process: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_processes: 4,
            max_ticks: 40,
            max_events_per_process: 6,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("{what} = {got} exceeds oracle limit {limit}")]
    LimitsExceeded {
        what: &'static str,
        got: u64,
        limit: u64,
    },
    #[error("satisfiability instances need a non-empty formula")]
    EmptyFormula,
    #[error("epsilon {epsilon} too small to place {n} distinct events inside (0, epsilon)")]
    EpsilonTooSmall { n: u32, epsilon: Ticks },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

/// Exhaustively search a trace for a valid snapshot.
pub fn find_valid_snapshot(
    trace: &Trace,
    predicate: &Predicate,
    epsilon: Ticks,
    limits: &OracleLimits,
) -> Result<Option<SnapshotAssignment>, OracleError> {
    let check = |what: &'static str, got: u64, limit: u64| {
        if got > limit {
            Err(OracleError::LimitsExceeded { what, got, limit })
        } else {
            Ok(())
        }
    };
    check("processes", trace.n as u64, limits.max_processes as u64)?;
    check("horizon ticks", trace.horizon().l, limits.max_ticks)?;
    for events in &trace.events {
        check(
            "events per process",
            events.len() as u64,
            limits.max_events_per_process as u64,
        )?;
    }
    trace.validate()?;
    let window = WindowData::from_reports(&trace_to_reports(trace)?)?;
    find_valid_snapshot_in_window(&window, predicate, epsilon)
}

/// One enumerable snapshot point: a stamp plus everything the checks can
/// observe about it.
#[derive(Clone, Copy)]
struct Candidate {
    stamp: HlcTimestamp,
    value: Value,
    /// Index of the value interval containing the stamp.
    interval: usize,
    /// Per message touching this process: relation bits of the stamp to the
    /// message endpoints (receiver side: stamp >= recv; sender side:
    /// stamp > sent).
    msg_sig: u64,
}

/// The same search over a monitor-side window.
///
/// Candidate stamps take every l inside the window span and every c up to
/// the observed maximum plus one; any stamp with a larger counter at the
/// same l sits in the same order class relative to every reported stamp, so
/// the enumeration is exhaustive over behavior classes. Within one anchor
/// block (all l in [anchor, anchor+epsilon], someone exactly at the anchor)
/// the checks depend only on (interval, message signature, at-anchor), so
/// candidates are deduplicated per class before the product search.
pub fn find_valid_snapshot_in_window(
    window: &WindowData,
    predicate: &Predicate,
    epsilon: Ticks,
) -> Result<Option<SnapshotAssignment>, OracleError> {
    let n = window.n as usize;
    if window.start >= window.horizon {
        return Ok(None);
    }
    let ws = window.start.l;
    // The horizon l itself is enumerable when the horizon carries a nonzero
    // counter (stamps ⟨horizon.l, c < horizon.c⟩ are still covered).
    let hi_l = if window.horizon.c > 0 {
        window.horizon.l
    } else {
        window.horizon.l - 1
    };
    if window.msgs.len() > 32 {
        return Err(OracleError::LimitsExceeded {
            what: "messages",
            got: window.msgs.len() as u64,
            limit: 32,
        });
    }
    let c_hi = window.c_max() + 1;

    // Per-process candidates, ascending.
    let mut candidates: Vec<Vec<Candidate>> = Vec::with_capacity(n);
    for p in 0..n {
        let mut list = Vec::new();
        for l in ws..=hi_l {
            for c in 0..=c_hi {
                let stamp = HlcTimestamp::new(l, c);
                if stamp < window.start || stamp >= window.horizon {
                    continue;
                }
                let Some(interval) = window.vars[p].iter().position(|v| v.contains(stamp)) else {
                    continue;
                };
                let mut msg_sig = 0u64;
                for (bit, m) in window.msgs.iter().enumerate() {
                    let hit = (m.to.idx() == p && stamp >= m.recv)
                        || (m.from.idx() == p && stamp > m.sent);
                    if hit {
                        msg_sig |= 1 << bit;
                    }
                }
                list.push(Candidate {
                    stamp,
                    value: window.vars[p][interval].old,
                    interval,
                    msg_sig,
                });
            }
        }
        candidates.push(list);
    }

    // Anchor on the minimum l of the snapshot: all points then live in
    // [anchor, anchor + epsilon], making the pairwise skew bound free.
    let mut block: Vec<Vec<Candidate>> = vec![Vec::new(); n];
    let mut chosen: Vec<Candidate> = Vec::with_capacity(n);
    for anchor in ws..=hi_l {
        let hi = anchor.saturating_add(epsilon);
        for (p, cands) in candidates.iter().enumerate() {
            block[p].clear();
            let mut seen: Vec<(usize, u64, bool)> = Vec::new();
            for cand in cands {
                if cand.stamp.l < anchor || cand.stamp.l > hi {
                    continue;
                }
                let key = (cand.interval, cand.msg_sig, cand.stamp.l == anchor);
                if !seen.contains(&key) {
                    seen.push(key);
                    block[p].push(*cand);
                }
            }
        }
        chosen.clear();
        if search(window, predicate, &block, anchor, false, &mut chosen)? {
            let entries = chosen
                .iter()
                .enumerate()
                .map(|(p, cand)| SnapshotEntry {
                    proc: ProcessId::from_idx(p),
                    at: cand.stamp,
                    value: cand.value,
                })
                .collect();
            let witness = SnapshotAssignment { entries };
            // Witnesses must hold up under the shared definition checks.
            let stamps: Vec<HlcTimestamp> = chosen.iter().map(|c| c.stamp).collect();
            assert!(
                consistent_with(&stamps, epsilon, &window.msgs),
                "oracle witness failed consistency self-check"
            );
            assert!(
                eval_predicate(predicate, &witness.values())?,
                "oracle witness failed predicate self-check"
            );
            return Ok(Some(witness));
        }
    }
    Ok(None)
}

fn search(
    window: &WindowData,
    predicate: &Predicate,
    block: &[Vec<Candidate>],
    anchor: Ticks,
    anchor_used: bool,
    chosen: &mut Vec<Candidate>,
) -> Result<bool, OracleError> {
    let proc = chosen.len();
    if proc == block.len() {
        if !anchor_used {
            return Ok(false);
        }
        let values: Vec<Value> = chosen.iter().map(|c| c.value).collect();
        return Ok(eval_predicate(predicate, &values)?);
    }
    for cand in &block[proc] {
        // Message constraints against already-assigned processes.
        let ok = window.msgs.iter().all(|m| {
            let (s, r) = (m.from.idx(), m.to.idx());
            let sender = if s == proc {
                Some(cand.stamp)
            } else if s < proc {
                Some(chosen[s].stamp)
            } else {
                None
            };
            let receiver = if r == proc {
                Some(cand.stamp)
            } else if r < proc {
                Some(chosen[r].stamp)
            } else {
                None
            };
            match (sender, receiver) {
                (Some(sv), Some(rv)) => !(rv >= m.recv && sv <= m.sent),
                _ => true,
            }
        });
        if !ok {
            continue;
        }
        let used = anchor_used || cand.stamp.l == anchor;
        // The anchor must be claimed by someone.
        if !used && proc + 1 == block.len() {
            continue;
        }
        chosen.push(*cand);
        if search(window, predicate, block, anchor, used, chosen)? {
            return Ok(true);
        }
        chosen.pop();
    }
    Ok(false)
}

/// Build the reduction instance: one process per CNF variable, all starting
/// false, each flipping true exactly once at a distinct tick inside
/// (0, epsilon). With no messages, every combination of "before/after the
/// flip" is a consistent snapshot, so a valid snapshot exists iff the
/// formula is satisfiable.
pub fn gen_satisfiability_instance(
    formula: &CnfFormula,
    epsilon: Ticks,
    seed: u64,
) -> Result<(Trace, Predicate), OracleError> {
    if formula.clauses.is_empty() {
        return Err(OracleError::EmptyFormula);
    }
    formula.validate()?;
    let n = formula.num_vars;
    if epsilon < n as u64 + 2 {
        return Err(OracleError::EpsilonTooSmall { n, epsilon });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ticks: Vec<u64> = sample(&mut rng, (epsilon - 1) as usize, n as usize)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    ticks.sort_unstable();
    let events: Vec<Vec<Event>> = ticks
        .iter()
        .enumerate()
        .map(|(p, &tick)| {
            vec![Event {
                proc: ProcessId::from_idx(p),
                kind: EventKind::VarChange {
                    old: Value::Bool(false),
                    new: Value::Bool(true),
                },
                pt: tick,
                hlc: advance_local(HlcTimestamp::ZERO, tick),
            }]
        })
        .collect();
    let trace = Trace {
        n,
        epsilon,
        duration: epsilon,
        domain: Domain::Bool,
        offsets: vec![0; n as usize],
        events,
        messages: Vec::new(),
    };
    trace.validate()?;
    Ok((trace, Predicate::Cnf(formula.clone())))
}
