//! Instrumentation reports: what processes tell the monitor.
//!
//! A variable report carries the previous value and the half-open HLC
//! interval over which it held; a message report carries both endpoints of
//! one inter-process message, reported by the receiver. Reports from one
//! process arrive in FIFO order; nothing is assumed across processes.
//!
//! Trace files are JSONL with one report per line:
//!
//! ```text
//! {"type":"var","proc":1,"old":false,"interval":["0.0","45.0"]}
//! {"type":"msg","from":1,"sent":"51.0","to":2,"recv":"54.0"}
//! ```

use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hlc::HlcTimestamp;
use crate::trace::{EventKind, ProcessId, Trace, Value};

/// Value interval report: `old` held over `interval` = `[from, to)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarReport {
    pub proc: ProcessId,
    pub old: Value,
    pub interval: (HlcTimestamp, HlcTimestamp),
}

impl VarReport {
    pub fn from(&self) -> HlcTimestamp {
        self.interval.0
    }

    pub fn to(&self) -> HlcTimestamp {
        self.interval.1
    }

    pub fn contains(&self, stamp: HlcTimestamp) -> bool {
        self.interval.0 <= stamp && stamp < self.interval.1
    }
}

/// Message event report: sender stamp piggybacked in the message, receiver
/// reports all four fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsgReport {
    pub from: ProcessId,
    pub sent: HlcTimestamp,
    pub to: ProcessId,
    pub recv: HlcTimestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ReportMessage {
    Var(VarReport),
    Msg(MsgReport),
}

impl ReportMessage {
    /// The process whose FIFO channel carries this report.
    pub fn origin(&self) -> ProcessId {
        match self {
            ReportMessage::Var(v) => v.proc,
            ReportMessage::Msg(m) => m.to,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("empty or inverted interval [{from}, {to}) for {proc}")]
    EmptyInterval {
        proc: ProcessId,
        from: HlcTimestamp,
        to: HlcTimestamp,
    },
    #[error("message receive stamp {recv} does not follow send stamp {sent}")]
    MessageOrder {
        sent: HlcTimestamp,
        recv: HlcTimestamp,
    },
    #[error("no reports in stream")]
    Empty,
    #[error("{proc} intervals do not tile the window: expected {expected}, found {found}")]
    TilingGap {
        proc: ProcessId,
        expected: HlcTimestamp,
        found: HlcTimestamp,
    },
    #[error("{proc} reported no intervals")]
    MissingProcess { proc: ProcessId },
    #[error("process id 0 is invalid (ids are 1-based)")]
    ZeroProcess,
    #[error("trace file line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Variable-change report: `old_value` held over `[prev_hlc, new_hlc)`.
pub fn report_var_change(
    proc: ProcessId,
    old_value: Value,
    prev_hlc: HlcTimestamp,
    new_hlc: HlcTimestamp,
) -> Result<VarReport, ReportError> {
    if prev_hlc >= new_hlc {
        return Err(ReportError::EmptyInterval {
            proc,
            from: prev_hlc,
            to: new_hlc,
        });
    }
    Ok(VarReport {
        proc,
        old: old_value,
        interval: (prev_hlc, new_hlc),
    })
}

/// Message report; the receive stamp must strictly follow the send stamp.
pub fn report_message(
    sender: ProcessId,
    send_hlc: HlcTimestamp,
    receiver: ProcessId,
    recv_hlc: HlcTimestamp,
) -> Result<MsgReport, ReportError> {
    if send_hlc >= recv_hlc {
        return Err(ReportError::MessageOrder {
            sent: send_hlc,
            recv: recv_hlc,
        });
    }
    Ok(MsgReport {
        from: sender,
        sent: send_hlc,
        to: receiver,
        recv: recv_hlc,
    })
}

/// Closing reports for the monitoring window: each process's value since its
/// last change holds until `horizon_hlc`. Processes whose last change is at
/// the horizon produce nothing (the interval would be empty).
pub fn finalize_open_intervals(trace: &Trace, horizon_hlc: HlcTimestamp) -> Vec<VarReport> {
    let mut out = Vec::new();
    for (idx, events) in trace.events.iter().enumerate() {
        let proc = ProcessId::from_idx(idx);
        let mut value = Value::initial(trace.domain);
        let mut last = HlcTimestamp::ZERO;
        for ev in events {
            if let EventKind::VarChange { new, .. } = ev.kind {
                value = new;
                last = ev.hlc;
            }
        }
        if last < horizon_hlc {
            out.push(VarReport {
                proc,
                old: value,
                interval: (last, horizon_hlc),
            });
        }
    }
    out
}

/// Full report stream for a trace, in a canonical deterministic order:
/// reports sorted by the HLC stamp of the emitting event, with the closing
/// reports appended at the horizon.
pub fn trace_to_reports(trace: &Trace) -> Result<Vec<ReportMessage>, ReportError> {
    let mut keyed: Vec<(HlcTimestamp, u32, ReportMessage)> = Vec::new();
    for (idx, events) in trace.events.iter().enumerate() {
        let proc = ProcessId::from_idx(idx);
        let mut prev = HlcTimestamp::ZERO;
        for ev in events {
            if let EventKind::VarChange { old, .. } = ev.kind {
                let rep = report_var_change(proc, old, prev, ev.hlc)?;
                keyed.push((ev.hlc, proc.0, ReportMessage::Var(rep)));
                prev = ev.hlc;
            }
        }
    }
    for m in &trace.messages {
        let rep = report_message(m.from, m.sent, m.to, m.recv)?;
        keyed.push((m.recv, m.to.0, ReportMessage::Msg(rep)));
    }
    keyed.sort_by_key(|(stamp, proc, rep)| {
        (*stamp, *proc, matches!(rep, ReportMessage::Msg(_)) as u8)
    });
    let mut out: Vec<ReportMessage> = keyed.into_iter().map(|(_, _, r)| r).collect();
    let horizon = trace.horizon();
    out.extend(
        finalize_open_intervals(trace, horizon)
            .into_iter()
            .map(ReportMessage::Var),
    );
    Ok(out)
}

/// Re-interleave a report stream across processes while preserving each
/// process's FIFO order. Used to exercise arrival-order independence.
pub fn shuffle_arrival(reports: &[ReportMessage], seed: u64) -> Vec<ReportMessage> {
    let mut queues: Vec<(ProcessId, std::collections::VecDeque<ReportMessage>)> = Vec::new();
    for rep in reports {
        let origin = rep.origin();
        match queues.iter_mut().find(|(p, _)| *p == origin) {
            Some((_, q)) => q.push_back(rep.clone()),
            None => {
                let mut q = std::collections::VecDeque::new();
                q.push_back(rep.clone());
                queues.push((origin, q));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(reports.len());
    while !queues.is_empty() {
        let pick = rng.random_range(0..queues.len());
        if let Some(rep) = queues[pick].1.pop_front() {
            out.push(rep);
        }
        if queues[pick].1.is_empty() {
            queues.remove(pick);
        }
    }
    out
}

pub fn write_reports<W: Write>(mut w: W, reports: &[ReportMessage]) -> Result<(), ReportError> {
    for rep in reports {
        serde_json::to_writer(&mut w, rep)
            .map_err(|source| ReportError::Parse { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_reports<R: BufRead>(r: R) -> Result<Vec<ReportMessage>, ReportError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rep = serde_json::from_str(&line).map_err(|source| ReportError::Parse {
            line: i + 1,
            source,
        })?;
        out.push(rep);
    }
    Ok(out)
}

/// Monitor-side view of one window: per-process value intervals tiling
/// `[start, horizon)` plus the messages that can constrain points inside it.
/// This is what the encoder and the brute-force oracle both consume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowData {
    pub n: u32,
    pub start: HlcTimestamp,
    pub horizon: HlcTimestamp,
    /// Per process, sorted by interval start.
    pub vars: Vec<Vec<VarReport>>,
    pub msgs: Vec<MsgReport>,
}

impl WindowData {
    /// Assemble the full-stream window from reports in any arrival order
    /// (per-process FIFO assumed but not required here; intervals are keyed
    /// by their stamps, not by arrival position).
    pub fn from_reports(reports: &[ReportMessage]) -> Result<Self, ReportError> {
        let mut n = 0u32;
        for rep in reports {
            let p = match rep {
                ReportMessage::Var(v) => v.proc.0,
                ReportMessage::Msg(m) => m.from.0.max(m.to.0),
            };
            if p == 0 {
                return Err(ReportError::ZeroProcess);
            }
            n = n.max(p);
        }
        if n == 0 {
            return Err(ReportError::Empty);
        }
        let mut vars: Vec<Vec<VarReport>> = vec![Vec::new(); n as usize];
        let mut msgs = Vec::new();
        for rep in reports {
            match rep {
                ReportMessage::Var(v) => {
                    if v.from() >= v.to() {
                        return Err(ReportError::EmptyInterval {
                            proc: v.proc,
                            from: v.from(),
                            to: v.to(),
                        });
                    }
                    vars[v.proc.idx()].push(v.clone());
                }
                ReportMessage::Msg(m) => {
                    if m.sent >= m.recv {
                        return Err(ReportError::MessageOrder {
                            sent: m.sent,
                            recv: m.recv,
                        });
                    }
                    msgs.push(m.clone());
                }
            }
        }
        for list in &mut vars {
            list.sort_by_key(|v| v.interval.0);
        }
        msgs.sort_by_key(|m| (m.sent, m.from, m.to, m.recv));
        let start = vars
            .iter()
            .filter_map(|l| l.first().map(|v| v.from()))
            .min()
            .ok_or(ReportError::Empty)?;
        let horizon = vars
            .iter()
            .filter_map(|l| l.last().map(|v| v.to()))
            .max()
            .ok_or(ReportError::Empty)?;
        let window = WindowData {
            n,
            start,
            horizon,
            vars,
            msgs,
        };
        window.check_tiling()?;
        Ok(window)
    }

    /// Verify the per-process intervals abut exactly and cover the whole
    /// window span: no gaps, no overlap.
    pub fn check_tiling(&self) -> Result<(), ReportError> {
        for (idx, list) in self.vars.iter().enumerate() {
            let proc = ProcessId::from_idx(idx);
            let mut cursor = self.start;
            if list.is_empty() {
                return Err(ReportError::MissingProcess { proc });
            }
            for v in list {
                if v.from() != cursor {
                    return Err(ReportError::TilingGap {
                        proc,
                        expected: cursor,
                        found: v.from(),
                    });
                }
                cursor = v.to();
            }
            if cursor != self.horizon {
                return Err(ReportError::TilingGap {
                    proc,
                    expected: self.horizon,
                    found: cursor,
                });
            }
        }
        Ok(())
    }

    /// The reported value of `proc` at `stamp`, if the stamp lies inside the
    /// window's covered span.
    pub fn value_at(&self, proc: ProcessId, stamp: HlcTimestamp) -> Option<Value> {
        self.vars[proc.idx()]
            .iter()
            .find(|v| v.contains(stamp))
            .map(|v| v.old)
    }

    /// Largest causality counter appearing in any stamp of the window.
    pub fn c_max(&self) -> u32 {
        let var_cs = self
            .vars
            .iter()
            .flatten()
            .flat_map(|v| [v.interval.0.c, v.interval.1.c]);
        let msg_cs = self.msgs.iter().flat_map(|m| [m.sent.c, m.recv.c]);
        var_cs.chain(msg_cs).max().unwrap_or(0)
    }

    /// Restrict the window to `[ws, we)`: variable intervals are clipped (a
    /// boundary-spanning interval lands in both neighbouring windows) and
    /// messages are kept when they can constrain a point inside the span.
    pub fn clip(&self, ws: HlcTimestamp, we: HlcTimestamp) -> WindowData {
        let start = self.start.max(ws);
        let horizon = self.horizon.min(we);
        let vars = self
            .vars
            .iter()
            .map(|list| {
                list.iter()
                    .filter_map(|v| {
                        let from = v.from().max(start);
                        let to = v.to().min(horizon);
                        (from < to).then_some(VarReport {
                            proc: v.proc,
                            old: v.old,
                            interval: (from, to),
                        })
                    })
                    .collect()
            })
            .collect();
        let msgs = self
            .msgs
            .iter()
            .filter(|m| m.sent < horizon && m.recv >= start)
            .cloned()
            .collect();
        WindowData {
            n: self.n,
            start,
            horizon,
            vars,
            msgs,
        }
    }
}
