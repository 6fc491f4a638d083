//! Shared fixtures: solver resolution, the figure-1 token scenario, and a
//! generator of oracle-tractable random instances.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]

use hlcmon::hlc::HlcTimestamp;
use hlcmon::predicate::Predicate;
use hlcmon::report::{MsgReport, ReportMessage, VarReport, WindowData};
use hlcmon::sim::{self, ScenarioConfig, Workload};
use hlcmon::smt::SolverConfig;
use hlcmon::trace::{Domain, ProcessId, Trace, Value};

/// The solver under test: honors `HLCMON_SOLVER`, prefers a real `z3` on
/// PATH, and otherwise uses the bundled solver binary built by this
/// workspace.
pub fn test_solver() -> SolverConfig {
    SolverConfig::resolve().unwrap_or_else(|_| {
        SolverConfig::new(vec![env!("CARGO_BIN_EXE_hlcmon-solver").to_string()])
    })
}

pub fn ts(l: u64, c: u32) -> HlcTimestamp {
    HlcTimestamp::new(l, c)
}

fn var(proc: u32, old: bool, from: HlcTimestamp, to: HlcTimestamp) -> ReportMessage {
    ReportMessage::Var(VarReport {
        proc: ProcessId(proc),
        old: Value::Bool(old),
        interval: (from, to),
    })
}

/// The instrumentation stream of the two-process token example: four
/// variable events, P1 holding the token over [45,50) and P2 over [55,60),
/// with the window closed at ⟨60,0⟩. `with_message` adds the token handoff
/// message sent at ⟨51,0⟩ and received at ⟨54,0⟩.
pub fn fig1_reports(with_message: bool) -> Vec<ReportMessage> {
    let mut reports = vec![
        var(1, false, ts(0, 0), ts(45, 0)),
        var(1, true, ts(45, 0), ts(50, 0)),
        var(1, false, ts(50, 0), ts(60, 0)),
        var(2, false, ts(0, 0), ts(55, 0)),
        var(2, true, ts(55, 0), ts(60, 0)),
    ];
    if with_message {
        reports.push(ReportMessage::Msg(MsgReport {
            from: ProcessId(1),
            sent: ts(51, 0),
            to: ProcessId(2),
            recv: ts(54, 0),
        }));
    }
    reports
}

pub fn fig1_window(with_message: bool) -> WindowData {
    WindowData::from_reports(&fig1_reports(with_message)).unwrap()
}

/// Random scenarios small enough for the brute-force oracle: at most 4
/// processes, horizon at most 40 ticks, at most 6 events per process, and
/// causality counters no larger than 2 so the encoder's c' bound covers
/// every behavior class the oracle enumerates.
pub fn tractable_instances(count: usize) -> Vec<(Trace, ScenarioConfig)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0u64;
    while out.len() < count {
        seed += 1;
        let n = 2 + (seed % 3) as u32;
        let epsilon = 5 + seed % 8;
        let duration = (12 + seed % 17).min(40 - epsilon);
        let config = ScenarioConfig {
            n,
            tick_ms: 0.01,
            epsilon,
            delta_min: 1 + seed % 3,
            delta_max: 1 + seed % 3 + (seed % 2) * 2,
            mfr: 0.02 + (seed % 5) as f64 * 0.01,
            duration,
            seed: seed.wrapping_mul(0x9e3779b97f4a7c15),
            workload: Workload::Synthetic {
                beta: 0.08 + (seed % 4) as f64 * 0.03,
                interval: 2 + seed % 3,
                domain: if seed.is_multiple_of(2) {
                    Domain::Bool
                } else {
                    Domain::Int
                },
            },
        };
        let trace = sim::run(&config).expect("tractable config must simulate");
        let small = trace.events.iter().all(|e| e.len() <= 6)
            && trace.messages.len() <= 5
            && trace.events.iter().flatten().all(|e| e.hlc.c <= 2);
        if small {
            out.push((trace, config));
        }
    }
    out
}

/// The six named predicate forms, parameterized within range for n
/// processes.
pub fn predicate_form(index: usize, n: u32) -> Predicate {
    let k = (index as u32 % n) + 1;
    match index % 6 {
        0 => Predicate::Conjunction,
        1 => Predicate::ExactlyK(k),
        2 => Predicate::AtLeastK(k),
        3 => Predicate::SumEq(k),
        4 => Predicate::SumGeq(k),
        _ => Predicate::PairwiseConflict,
    }
}
