//! Windowed monitoring driver, parameter sweeps, and capacity estimates.
//!
//! The report stream is cut into overlapping windows on the HLC l axis; each
//! window is encoded and handed to the solver, and one report per window
//! records the verdict, witness, timings, and detection latency. Overlap of
//! at least epsilon guarantees a snapshot near a boundary is wholly inside
//! some window.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::hlc::HlcTimestamp;
use crate::predicate::Predicate;
use crate::report::{trace_to_reports, ReportError, ReportMessage, WindowData};
use crate::sim::{self, ScenarioConfig, SimError, Workload};
use crate::smt::{self, EncodeError, EncoderConfig, SolverConfig, Verdict};
use crate::trace::SnapshotAssignment;
use crate::Ticks;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorWindowing {
    /// Simulated ticks per solver invocation.
    pub period: Ticks,
    /// Ticks carried across window boundaries; raised to epsilon if smaller.
    pub overlap: Ticks,
}

impl MonitorWindowing {
    /// One-second windows with the minimum safe overlap.
    pub fn for_epsilon(epsilon: Ticks) -> Self {
        MonitorWindowing {
            period: 100_000,
            overlap: epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum WindowVerdict {
    Sat { witness: SnapshotAssignment },
    Unsat,
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub window: usize,
    /// Covered l span, half-open.
    pub start: Ticks,
    pub end: Ticks,
    pub var_reports: usize,
    pub msg_reports: usize,
    #[serde(flatten)]
    pub verdict: WindowVerdict,
    pub encode_s: f64,
    pub solver_s: f64,
    /// Sat windows: ticks between the witness's latest point (when the
    /// snapshot has fully occurred) and the verdict at window end.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_ticks: Option<Ticks>,
}

impl MonitorReport {
    pub fn is_sat(&self) -> bool {
        matches!(self.verdict, WindowVerdict::Sat { .. })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("writing dumped script: {0}")]
    Dump(#[from] std::io::Error),
}

/// Cut the full stream into overlapping windows.
pub fn windows_of(
    full: &WindowData,
    windowing: &MonitorWindowing,
    epsilon: Ticks,
) -> Vec<WindowData> {
    let overlap = windowing.overlap.max(epsilon);
    // A horizon with a nonzero counter still covers stamps at its own l.
    let horizon = full.horizon.l + (full.horizon.c > 0) as u64;
    let mut out = Vec::new();
    let mut k = 0u64;
    while k * windowing.period < horizon {
        let ws = (k * windowing.period)
            .saturating_sub(overlap)
            .max(full.start.l);
        let we = (k + 1) * windowing.period;
        let we_stamp = if we >= horizon {
            full.horizon
        } else {
            HlcTimestamp::new(we, 0)
        };
        out.push(full.clip(HlcTimestamp::new(ws, 0), we_stamp));
        k += 1;
    }
    out
}

/// Encode and check every window; solver failures are recorded in that
/// window's report and the run continues.
pub fn monitor_windows(
    full: &WindowData,
    windowing: &MonitorWindowing,
    predicate: &Predicate,
    encoder: &EncoderConfig,
    solver: &SolverConfig,
    dump_dir: Option<&Path>,
) -> Result<Vec<MonitorReport>, MonitorError> {
    let mut out = Vec::new();
    for (index, window) in windows_of(full, windowing, encoder.epsilon)
        .iter()
        .enumerate()
    {
        let encode_started = Instant::now();
        let script = smt::build_script(window, predicate, encoder)?;
        let encode_s = encode_started.elapsed().as_secs_f64();
        if let Some(dir) = dump_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("window_{index:04}.smt2")), script.render())?;
        }
        let var_reports = window.vars.iter().map(Vec::len).sum();
        let msg_reports = window.msgs.len();
        let (verdict, solver_s, latency_ticks) = match smt::check(&script, solver) {
            Ok(checked) => {
                let solver_s = checked.solver_time.as_secs_f64();
                match checked.verdict {
                    Verdict::Sat(witness) => {
                        let latency = script.window_end.saturating_sub(witness.max_l());
                        (WindowVerdict::Sat { witness }, solver_s, Some(latency))
                    }
                    Verdict::Unsat => (WindowVerdict::Unsat, solver_s, None),
                }
            }
            Err(e) => (
                WindowVerdict::Error {
                    message: e.to_string(),
                },
                0.0,
                None,
            ),
        };
        out.push(MonitorReport {
            window: index,
            start: script.window_start,
            end: script.window_end,
            var_reports,
            msg_reports,
            verdict,
            encode_s,
            solver_s,
            latency_ticks,
        });
    }
    Ok(out)
}

/// Simulate a scenario and monitor the resulting report stream. The
/// scenario's epsilon is authoritative for the encoder.
pub fn monitor_run(
    config: &ScenarioConfig,
    windowing: &MonitorWindowing,
    predicate: &Predicate,
    encoder: &EncoderConfig,
    solver: &SolverConfig,
    dump_dir: Option<&Path>,
) -> Result<Vec<MonitorReport>, MonitorError> {
    let trace = sim::run(config)?;
    let reports = trace_to_reports(&trace)?;
    monitor_reports(
        &reports,
        config.epsilon,
        windowing,
        predicate,
        encoder,
        solver,
        dump_dir,
    )
}

/// Monitor an already-collected report stream.
pub fn monitor_reports(
    reports: &[ReportMessage],
    epsilon: Ticks,
    windowing: &MonitorWindowing,
    predicate: &Predicate,
    encoder: &EncoderConfig,
    solver: &SolverConfig,
    dump_dir: Option<&Path>,
) -> Result<Vec<MonitorReport>, MonitorError> {
    let full = WindowData::from_reports(reports)?;
    let mut encoder = encoder.clone();
    encoder.epsilon = epsilon;
    monitor_windows(&full, windowing, predicate, &encoder, solver, dump_dir)
}

// ---------------------------------------------------------------------------
// Parameter sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Mfr,
    Delta,
    Beta,
    Interval,
    Epsilon,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mfr" => Ok(SweepAxis::Mfr),
            "delta" => Ok(SweepAxis::Delta),
            "beta" => Ok(SweepAxis::Beta),
            "interval" => Ok(SweepAxis::Interval),
            "epsilon" => Ok(SweepAxis::Epsilon),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

impl SweepAxis {
    pub fn apply(self, value: f64, config: &mut ScenarioConfig) -> Result<(), String> {
        match self {
            SweepAxis::Mfr => config.mfr = value,
            SweepAxis::Delta => {
                config.delta_min = value as Ticks;
                config.delta_max = value as Ticks;
            }
            SweepAxis::Epsilon => config.epsilon = value as Ticks,
            SweepAxis::Beta => match &mut config.workload {
                Workload::Synthetic { beta, .. } => *beta = value,
                _ => return Err("beta sweep needs the synthetic workload".to_string()),
            },
            SweepAxis::Interval => match &mut config.workload {
                Workload::Synthetic { interval, .. } => *interval = value as Ticks,
                _ => return Err("interval sweep needs the synthetic workload".to_string()),
            },
        }
        Ok(())
    }
}

/// Aggregated results for one sweep value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: usize,
    pub windows: usize,
    pub sat: usize,
    pub unsat: usize,
    pub errors: usize,
    pub mean_solver_s: f64,
    pub mean_encode_s: f64,
}

/// Run the monitor once per (value, seed) pair. Per-point failures are
/// counted and the sweep continues.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &ScenarioConfig,
    seeds: &[u64],
    windowing: &MonitorWindowing,
    predicate: &Predicate,
    encoder: &EncoderConfig,
    solver: &SolverConfig,
) -> Vec<SweepPoint> {
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        let mut point = SweepPoint {
            value,
            runs: 0,
            windows: 0,
            sat: 0,
            unsat: 0,
            errors: 0,
            mean_solver_s: 0.0,
            mean_encode_s: 0.0,
        };
        let mut solver_total = 0.0;
        let mut encode_total = 0.0;
        for &seed in seeds {
            let mut config = base.clone();
            config.seed = seed;
            if let Err(_e) = axis.apply(value, &mut config) {
                point.errors += 1;
                continue;
            }
            match monitor_run(&config, windowing, predicate, encoder, solver, None) {
                Ok(reports) => {
                    point.runs += 1;
                    for rep in &reports {
                        point.windows += 1;
                        solver_total += rep.solver_s;
                        encode_total += rep.encode_s;
                        match rep.verdict {
                            WindowVerdict::Sat { .. } => point.sat += 1,
                            WindowVerdict::Unsat => point.unsat += 1,
                            WindowVerdict::Error { .. } => point.errors += 1,
                        }
                    }
                }
                Err(_) => point.errors += 1,
            }
        }
        if point.windows > 0 {
            point.mean_solver_s = solver_total / point.windows as f64;
            point.mean_encode_s = encode_total / point.windows as f64;
        }
        out.push(point);
    }
    out
}

/// One CSV row per sweep value, with a verdict histogram.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("value,runs,windows,sat,unsat,errors,mean_solver_s,mean_encode_s\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6}\n",
            p.value, p.runs, p.windows, p.sat, p.unsat, p.errors, p.mean_solver_s, p.mean_encode_s
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Capacity estimation

/// Standalone and combined monitor provisioning for the observed solver
/// load, per the interpretation used in the experiments: with c seconds of
/// solving per simulated second, a standalone deployment needs ceil(c)
/// machines, and a combined deployment spends c*(100/n)% of each process's
/// machine on monitoring.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    /// Solver seconds per simulated second.
    pub solver_seconds_per_second: f64,
    pub standalone_monitors: u32,
    pub combined_overhead_fraction: f64,
}

pub fn capacity_estimate(
    reports: &[MonitorReport],
    simulated_seconds: f64,
    n: u32,
) -> CapacityEstimate {
    let total: f64 = reports.iter().map(|r| r.solver_s).sum();
    let c = if simulated_seconds > 0.0 {
        total / simulated_seconds
    } else {
        0.0
    };
    let per_process = c * 100.0 / n as f64;
    CapacityEstimate {
        solver_seconds_per_second: c,
        standalone_monitors: (c.ceil() as u32).max(1),
        combined_overhead_fraction: per_process / (100.0 + per_process),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::VarReport;
    use crate::trace::{ProcessId, Value};

    fn report(window: usize, solver_s: f64) -> MonitorReport {
        MonitorReport {
            window,
            start: 0,
            end: 0,
            var_reports: 0,
            msg_reports: 0,
            verdict: WindowVerdict::Unsat,
            encode_s: 0.0,
            solver_s,
            latency_ticks: None,
        }
    }

    #[test]
    fn capacity_matches_the_worked_interpretations() {
        // c = 2 s/s: two standalone machines.
        let est = capacity_estimate(&[report(0, 2.0)], 1.0, 10);
        assert_eq!(est.standalone_monitors, 2);
        // c = 0.5: one machine suffices.
        let est = capacity_estimate(&[report(0, 0.5)], 1.0, 10);
        assert_eq!(est.standalone_monitors, 1);
        // c = 3, n = 10: combined overhead 30/130.
        let est = capacity_estimate(&[report(0, 3.0)], 1.0, 10);
        assert!((est.combined_overhead_fraction - 30.0 / 130.0).abs() < 1e-12);
    }

    #[test]
    fn windows_tile_with_overlap() {
        let reports: Vec<ReportMessage> = (1..=2)
            .map(|p| {
                ReportMessage::Var(VarReport {
                    proc: ProcessId(p),
                    old: Value::Bool(false),
                    interval: (HlcTimestamp::ZERO, HlcTimestamp::new(250, 0)),
                })
            })
            .collect();
        let full = WindowData::from_reports(&reports).unwrap();
        let windowing = MonitorWindowing {
            period: 100,
            overlap: 20,
        };
        let windows = windows_of(&full, &windowing, 20);
        let spans: Vec<(u64, u64)> = windows.iter().map(|w| (w.start.l, w.horizon.l)).collect();
        assert_eq!(spans, vec![(0, 100), (80, 200), (180, 250)]);
        for w in &windows {
            w.check_tiling().unwrap();
        }
        // Overlap below epsilon is raised to epsilon.
        let raised = windows_of(
            &full,
            &MonitorWindowing {
                period: 100,
                overlap: 1,
            },
            30,
        );
        assert_eq!(raised[1].start.l, 70);
    }

    #[test]
    fn last_window_keeps_a_sub_tick_horizon() {
        // Coverage ends at ⟨120,2⟩; the final window must carry the exact
        // horizon so the stamps at l = 120 are not stranded.
        let reports = vec![
            ReportMessage::Var(VarReport {
                proc: ProcessId(1),
                old: Value::Bool(false),
                interval: (HlcTimestamp::ZERO, HlcTimestamp::new(120, 0)),
            }),
            ReportMessage::Var(VarReport {
                proc: ProcessId(1),
                old: Value::Bool(true),
                interval: (HlcTimestamp::new(120, 0), HlcTimestamp::new(120, 2)),
            }),
        ];
        let full = WindowData::from_reports(&reports).unwrap();
        let windows = windows_of(
            &full,
            &MonitorWindowing {
                period: 100,
                overlap: 10,
            },
            10,
        );
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[1].horizon, HlcTimestamp::new(120, 2));
        windows[1].check_tiling().unwrap();
        assert_eq!(
            windows[1].value_at(ProcessId(1), HlcTimestamp::new(120, 1)),
            Some(Value::Bool(true))
        );
    }

    #[test]
    fn sweep_axes_apply_to_the_right_fields() {
        let mut cfg = ScenarioConfig::synthetic_defaults(0);
        SweepAxis::Mfr.apply(0.1, &mut cfg).unwrap();
        assert_eq!(cfg.mfr, 0.1);
        SweepAxis::Delta.apply(250.0, &mut cfg).unwrap();
        assert_eq!((cfg.delta_min, cfg.delta_max), (250, 250));
        SweepAxis::Epsilon.apply(500.0, &mut cfg).unwrap();
        assert_eq!(cfg.epsilon, 500);
        SweepAxis::Beta.apply(0.2, &mut cfg).unwrap();
        let mut excl = ScenarioConfig::exclusive_defaults(0);
        assert!(SweepAxis::Beta.apply(0.2, &mut excl).is_err());
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let points = vec![
            SweepPoint {
                value: 0.01,
                runs: 2,
                windows: 4,
                sat: 1,
                unsat: 3,
                errors: 0,
                mean_solver_s: 0.5,
                mean_encode_s: 0.001,
            };
            3
        ];
        let csv = sweep_csv(&points);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("value,runs,windows,sat,unsat,errors,"));
    }
}
