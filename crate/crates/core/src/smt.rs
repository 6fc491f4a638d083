//! Constraint generation and solver invocation.
//!
//! One window of reports becomes a QF_LIA script over per-process variables
//! `v_i`, `l_i`, `c_i` (or `v_i`, `nl_i` with the combining optimization,
//! where `nl = c'*l + c`). Static clock-synchronization constraints bound the
//! pairwise spread of the `l_i`; each message report adds one implication;
//! each value-interval report pins `v_i` inside its interval; one final
//! assertion states the monitored predicate. A satisfying model is exactly a
//! valid snapshot.
//!
//! The solver runs as an external process reading SMT-LIB2 from a file
//! argument and printing `sat`/`unsat` plus a `(define-fun ...)` model.

use std::io::Read;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use crate::hlc::HlcTimestamp;
use crate::predicate::Predicate;
use crate::report::{MsgReport, VarReport, WindowData};
use crate::trace::{ProcessId, SnapshotAssignment, SnapshotEntry, Value};
use crate::Ticks;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub epsilon: Ticks,
    /// Fold each (l, c) pair into a single nl variable.
    pub combine: bool,
    /// Requested c'. The effective value for a window is raised to
    /// c_max + 1 when the observed counters would not fit.
    pub c_prime: u64,
}

impl EncoderConfig {
    pub fn new(epsilon: Ticks) -> Self {
        EncoderConfig {
            epsilon,
            combine: false,
            c_prime: 4,
        }
    }

    pub fn combined(epsilon: Ticks) -> Self {
        EncoderConfig {
            epsilon,
            combine: true,
            c_prime: 4,
        }
    }

    fn pack(&self, stamp: HlcTimestamp) -> u128 {
        self.c_prime as u128 * stamp.l as u128 + stamp.c as u128
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("stamp {stamp} has c >= c' = {c_prime}; combined encoding cannot represent it")]
    CounterExceedsCPrime { stamp: HlcTimestamp, c_prime: u64 },
    #[error("predicate parameter out of range: {0}")]
    BadPredicate(String),
    #[error("window covers no span (start {start} >= horizon {horizon})")]
    EmptyWindow {
        start: HlcTimestamp,
        horizon: HlcTimestamp,
    },
}

/// Pairwise clock-synchronization assertions, one per process pair.
pub fn encode_clock_sync(n: u32, epsilon: Ticks, config: &EncoderConfig) -> Vec<String> {
    let mut out = Vec::new();
    let bound: u128 = if config.combine {
        config.c_prime as u128 * epsilon as u128
    } else {
        epsilon as u128
    };
    for i in 1..=n {
        for j in (i + 1)..=n {
            let (a, b) = if config.combine {
                (format!("nl_{i}"), format!("nl_{j}"))
            } else {
                (format!("l_{i}"), format!("l_{j}"))
            };
            out.push(format!(
                "(assert (and (<= (- {a} {b}) {bound}) (<= (- {b} {a}) {bound})))"
            ));
        }
    }
    out
}

fn check_counters(config: &EncoderConfig, stamps: &[HlcTimestamp]) -> Result<(), EncodeError> {
    if config.combine {
        if let Some(bad) = stamps.iter().find(|s| s.c as u64 >= config.c_prime) {
            return Err(EncodeError::CounterExceedsCPrime {
                stamp: *bad,
                c_prime: config.c_prime,
            });
        }
    }
    Ok(())
}

/// `⟨l,c⟩ >= ⟨L,C⟩` expanded into linear arithmetic.
fn lex_geq(l: &str, c: &str, stamp: HlcTimestamp) -> String {
    format!(
        "(or (> {l} {L}) (and (= {l} {L}) (>= {c} {C})))",
        L = stamp.l,
        C = stamp.c
    )
}

fn lex_gt(l: &str, c: &str, stamp: HlcTimestamp) -> String {
    format!(
        "(or (> {l} {L}) (and (= {l} {L}) (> {c} {C})))",
        L = stamp.l,
        C = stamp.c
    )
}

fn lex_lt(l: &str, c: &str, stamp: HlcTimestamp) -> String {
    format!(
        "(or (< {l} {L}) (and (= {l} {L}) (< {c} {C})))",
        L = stamp.l,
        C = stamp.c
    )
}

/// Communication constraint for one message: if the receiver's snapshot
/// point is at or past the receive, the sender's point is strictly past the
/// send.
pub fn encode_communication(
    msg: &MsgReport,
    config: &EncoderConfig,
) -> Result<String, EncodeError> {
    check_counters(config, &[msg.sent, msg.recv])?;
    if config.combine {
        Ok(format!(
            "(assert (=> (>= nl_{j} {recv}) (> nl_{i} {sent})))",
            j = msg.to.0,
            i = msg.from.0,
            recv = config.pack(msg.recv),
            sent = config.pack(msg.sent),
        ))
    } else {
        let (lj, cj) = (format!("l_{}", msg.to.0), format!("c_{}", msg.to.0));
        let (li, ci) = (format!("l_{}", msg.from.0), format!("c_{}", msg.from.0));
        Ok(format!(
            "(assert (=> {} {}))",
            lex_geq(&lj, &cj, msg.recv),
            lex_gt(&li, &ci, msg.sent),
        ))
    }
}

/// Variable-event constraint: inside the reported interval, `v_i` equals the
/// reported value.
pub fn encode_var_event(rep: &VarReport, config: &EncoderConfig) -> Result<String, EncodeError> {
    check_counters(config, &[rep.from(), rep.to()])?;
    let val = rep.old.raw();
    let i = rep.proc.0;
    if config.combine {
        Ok(format!(
            "(assert (=> (and (>= nl_{i} {from}) (< nl_{i} {to})) (= v_{i} {val})))",
            from = config.pack(rep.from()),
            to = config.pack(rep.to()),
        ))
    } else {
        let (l, c) = (format!("l_{i}"), format!("c_{i}"));
        Ok(format!(
            "(assert (=> (and {} {}) (= v_{i} {val})))",
            lex_geq(&l, &c, rep.from()),
            lex_lt(&l, &c, rep.to()),
        ))
    }
}

fn sum_expr(n: u32) -> String {
    if n == 1 {
        "v_1".to_string()
    } else {
        let terms: Vec<String> = (1..=n).map(|i| format!("v_{i}")).collect();
        format!("(+ {})", terms.join(" "))
    }
}

fn and_wrap(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or_wrap(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "false".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

/// The monitored predicate over the 0/1 variables.
pub fn encode_predicate(p: &Predicate, n: u32) -> String {
    let body = match p {
        Predicate::Conjunction => and_wrap((1..=n).map(|i| format!("(= v_{i} 1)")).collect()),
        Predicate::ExactlyK(k) | Predicate::SumEq(k) => format!("(= {} {k})", sum_expr(n)),
        Predicate::AtLeastK(k) | Predicate::SumGeq(k) => format!("(>= {} {k})", sum_expr(n)),
        Predicate::PairwiseConflict => {
            let mut pairs = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    pairs.push(format!("(and (= v_{i} 1) (= v_{j} 1))"));
                }
            }
            or_wrap(pairs)
        }
        Predicate::Cnf(f) => {
            let clauses: Vec<String> = f
                .clauses
                .iter()
                .map(|clause| {
                    or_wrap(
                        clause
                            .iter()
                            .map(|&lit| {
                                let v = lit.unsigned_abs();
                                if lit > 0 {
                                    format!("(= v_{v} 1)")
                                } else {
                                    format!("(= v_{v} 0)")
                                }
                            })
                            .collect(),
                    )
                })
                .collect();
            and_wrap(clauses)
        }
    };
    format!("(assert {body})")
}

/// A fully assembled script for one window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintScript {
    pub n: u32,
    pub combine: bool,
    pub c_prime: u64,
    /// Covered l span: snapshot points are confined to
    /// `[window_start, window_end - 1]`.
    pub window_start: Ticks,
    pub window_end: Ticks,
    pub declarations: Vec<String>,
    pub bounds: Vec<String>,
    pub clock_sync: Vec<String>,
    pub communication: Vec<String>,
    pub var_events: Vec<String>,
    pub predicate: String,
}

impl ConstraintScript {
    pub fn assertion_count(&self) -> usize {
        self.bounds.len()
            + self.clock_sync.len()
            + self.communication.len()
            + self.var_events.len()
            + 1
    }

    /// Render the SMT-LIB2 text. Construction order is deterministic, so the
    /// same window and config always produce byte-identical output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("(set-option :produce-models true)\n");
        out.push_str("(set-logic QF_LIA)\n");
        for decl in &self.declarations {
            out.push_str(decl);
            out.push('\n');
        }
        for group in [
            &self.bounds,
            &self.clock_sync,
            &self.communication,
            &self.var_events,
        ] {
            for assertion in group {
                out.push_str(assertion);
                out.push('\n');
            }
        }
        out.push_str(&self.predicate);
        out.push('\n');
        out.push_str("(check-sat)\n(get-model)\n");
        out
    }
}

/// Build the complete constraint set for one window. The effective c' is
/// raised above the window's observed c_max instead of failing the run.
pub fn build_script(
    window: &WindowData,
    predicate: &Predicate,
    config: &EncoderConfig,
) -> Result<ConstraintScript, EncodeError> {
    if window.start >= window.horizon {
        return Err(EncodeError::EmptyWindow {
            start: window.start,
            horizon: window.horizon,
        });
    }
    let n = window.n;
    validate_predicate(predicate, n)?;
    let mut effective = config.clone();
    effective.c_prime = effective.c_prime.max(window.c_max() as u64 + 1);

    let mut declarations = Vec::new();
    for i in 1..=n {
        declarations.push(format!("(declare-const v_{i} Int)"));
    }
    for i in 1..=n {
        if effective.combine {
            declarations.push(format!("(declare-const nl_{i} Int)"));
        } else {
            declarations.push(format!("(declare-const l_{i} Int)"));
            declarations.push(format!("(declare-const c_{i} Int)"));
        }
    }

    // Snapshot points are confined to the window's covered span
    // [start, horizon); reports tile it, so every admissible point has a
    // pinned value. Boundary stamps with nonzero counters need the exact
    // lexicographic bound, not just the l box.
    let ws = window.start.l;
    let we = window.horizon.l;
    let hi_l = if window.horizon.c > 0 { we } else { we - 1 };
    let mut bounds = Vec::new();
    for i in 1..=n {
        bounds.push(format!("(assert (and (>= v_{i} 0) (<= v_{i} 1)))"));
    }
    for i in 1..=n {
        if effective.combine {
            let lo = effective.pack(window.start);
            let hi = effective.pack(window.horizon) - 1;
            bounds.push(format!("(assert (and (>= nl_{i} {lo}) (<= nl_{i} {hi})))"));
        } else {
            bounds.push(format!("(assert (and (>= l_{i} {ws}) (<= l_{i} {hi_l})))"));
            bounds.push(format!(
                "(assert (and (>= c_{i} 0) (< c_{i} {})))",
                effective.c_prime
            ));
            let (l, c) = (format!("l_{i}"), format!("c_{i}"));
            if window.start.c > 0 {
                bounds.push(format!("(assert {})", lex_geq(&l, &c, window.start)));
            }
            if window.horizon.c > 0 {
                bounds.push(format!("(assert {})", lex_lt(&l, &c, window.horizon)));
            }
        }
    }

    let clock_sync = encode_clock_sync(n, config.epsilon, &effective);
    let mut communication = Vec::new();
    for msg in &window.msgs {
        communication.push(encode_communication(msg, &effective)?);
    }
    let mut var_events = Vec::new();
    for list in &window.vars {
        for rep in list {
            var_events.push(encode_var_event(rep, &effective)?);
        }
    }
    let predicate = encode_predicate(predicate, n);
    Ok(ConstraintScript {
        n,
        combine: effective.combine,
        c_prime: effective.c_prime,
        window_start: ws,
        window_end: we,
        declarations,
        bounds,
        clock_sync,
        communication,
        var_events,
        predicate,
    })
}

fn validate_predicate(p: &Predicate, n: u32) -> Result<(), EncodeError> {
    let check = |k: u32| {
        if k > n {
            Err(EncodeError::BadPredicate(format!("k={k} exceeds n={n}")))
        } else {
            Ok(())
        }
    };
    match p {
        Predicate::ExactlyK(k)
        | Predicate::AtLeastK(k)
        | Predicate::SumEq(k)
        | Predicate::SumGeq(k) => check(*k),
        Predicate::Cnf(f) => {
            f.validate()
                .map_err(|e| EncodeError::BadPredicate(e.to_string()))?;
            check(f.num_vars)
        }
        Predicate::Conjunction | Predicate::PairwiseConflict => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Solver invocation

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Program and leading arguments; the script path is appended.
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn new(command: Vec<String>) -> Self {
        SolverConfig {
            command,
            timeout: Self::DEFAULT_TIMEOUT,
        }
    }

    /// Locate a usable solver: `HLCMON_SOLVER` (a command line), then `z3`
    /// on PATH, then the bundled `hlcmon-solver` next to the current
    /// executable or on PATH.
    pub fn resolve() -> Result<Self, SolverError> {
        if let Ok(spec) = std::env::var("HLCMON_SOLVER") {
            let command: Vec<String> = spec.split_whitespace().map(str::to_string).collect();
            if !command.is_empty() {
                return Ok(SolverConfig::new(command));
            }
        }
        if let Some(z3) = find_in_path("z3") {
            return Ok(SolverConfig::new(vec![z3.to_string_lossy().into_owned()]));
        }
        if let Ok(exe) = std::env::current_exe() {
            let sibling = exe.with_file_name("hlcmon-solver");
            if sibling.is_file() {
                return Ok(SolverConfig::new(vec![sibling
                    .to_string_lossy()
                    .into_owned()]));
            }
        }
        if let Some(bundled) = find_in_path("hlcmon-solver") {
            return Ok(SolverConfig::new(vec![bundled
                .to_string_lossy()
                .into_owned()]));
        }
        Err(SolverError::NoSolver)
    }
}

fn find_in_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|candidate| {
            candidate.is_file() && {
                use std::os::unix::fs::PermissionsExt;
                candidate
                    .metadata()
                    .map(|m| m.permissions().mode() & 0o111 != 0)
                    .unwrap_or(false)
            }
        })
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("no SMT solver found: set HLCMON_SOLVER, install z3, or keep hlcmon-solver alongside the binary")]
    NoSolver,
    #[error("failed to launch solver {command:?}: {source}")]
    Launch {
        command: String,
        source: std::io::Error,
    },
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("solver exited with {status}: {stderr}")]
    Crashed { status: String, stderr: String },
    #[error("unrecognized solver output {first_line:?} (stderr: {stderr})")]
    BadOutput { first_line: String, stderr: String },
    #[error("could not parse model: {0}")]
    ModelParse(String),
    #[error("solver io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(SnapshotAssignment),
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }
}

#[derive(Clone, Debug)]
pub struct Checked {
    pub verdict: Verdict,
    /// Wall time of the solver subprocess alone.
    pub solver_time: Duration,
}

/// Run the external solver on the rendered script. Timeouts and crashes are
/// reported as errors, never as a verdict.
pub fn check(script: &ConstraintScript, solver: &SolverConfig) -> Result<Checked, SolverError> {
    let text = script.render();
    let mut file = tempfile::Builder::new()
        .prefix("hlcmon-window-")
        .suffix(".smt2")
        .tempfile()?;
    file.write_all(text.as_bytes())?;
    file.flush()?;

    let program = solver.command.first().ok_or(SolverError::NoSolver)?;
    let started = Instant::now();
    let mut child = Command::new(program)
        .args(&solver.command[1..])
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SolverError::Launch {
            command: program.clone(),
            source,
        })?;

    let status = match child.wait_timeout(solver.timeout)? {
        Some(status) => status,
        None => {
            child.kill().ok();
            child.wait().ok();
            return Err(SolverError::Timeout(solver.timeout));
        }
    };
    let solver_time = started.elapsed();

    let mut stdout = String::new();
    if let Some(mut pipe) = child.stdout.take() {
        pipe.read_to_string(&mut stdout)?;
    }
    let mut stderr = String::new();
    if let Some(mut pipe) = child.stderr.take() {
        pipe.read_to_string(&mut stderr)?;
    }

    let first = stdout
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string();
    match first.as_str() {
        "sat" => {
            let model = parse_model(&stdout, script)?;
            Ok(Checked {
                verdict: Verdict::Sat(model),
                solver_time,
            })
        }
        "unsat" => Ok(Checked {
            verdict: Verdict::Unsat,
            solver_time,
        }),
        _ if !status.success() => Err(SolverError::Crashed {
            status: status.to_string(),
            stderr: if stderr.is_empty() { first } else { stderr },
        }),
        _ => Err(SolverError::BadOutput {
            first_line: first,
            stderr,
        }),
    }
}

/// Parse `(define-fun name () Int value)` entries from solver output and
/// decode them into per-process stamps and values.
pub fn parse_model(
    output: &str,
    script: &ConstraintScript,
) -> Result<SnapshotAssignment, SolverError> {
    use crate::smtlite::sexpr::{parse_all, SExpr};
    let body_start = output.find('\n').map(|i| i + 1).unwrap_or(0);
    let forms =
        parse_all(&output[body_start..]).map_err(|e| SolverError::ModelParse(e.to_string()))?;
    let mut values: std::collections::HashMap<String, i128> = std::collections::HashMap::new();
    for form in &forms {
        let items = match form.list() {
            Some(items) => items,
            None => continue,
        };
        for item in items {
            let parts = match item.list() {
                Some(parts) => parts,
                None => continue,
            };
            if parts.first().and_then(|p| p.atom()) != Some("define-fun") {
                continue;
            }
            let name = parts.get(1).and_then(|p| p.atom());
            let value = parts.get(4).and_then(|v| match v {
                SExpr::Atom(a) => a.parse::<i128>().ok(),
                SExpr::List(neg) => match neg.as_slice() {
                    [SExpr::Atom(minus), SExpr::Atom(n)] if minus == "-" => {
                        n.parse::<i128>().ok().map(|v| -v)
                    }
                    _ => None,
                },
            });
            if let (Some(name), Some(v)) = (name, value) {
                values.insert(name.to_string(), v);
            }
        }
    }

    let lookup = |name: &str| -> Result<i128, SolverError> {
        values
            .get(name)
            .copied()
            .ok_or_else(|| SolverError::ModelParse(format!("model is missing {name}")))
    };
    let mut entries = Vec::with_capacity(script.n as usize);
    for i in 1..=script.n {
        let v = lookup(&format!("v_{i}"))?;
        let (l, c) = if script.combine {
            let nl = lookup(&format!("nl_{i}"))?;
            if nl < 0 {
                return Err(SolverError::ModelParse(format!("negative nl_{i} = {nl}")));
            }
            (nl / script.c_prime as i128, nl % script.c_prime as i128)
        } else {
            (lookup(&format!("l_{i}"))?, lookup(&format!("c_{i}"))?)
        };
        if l < 0 || c < 0 || !(0..=1).contains(&v) {
            return Err(SolverError::ModelParse(format!(
                "out-of-domain model values for process {i}: l={l} c={c} v={v}"
            )));
        }
        entries.push(SnapshotEntry {
            proc: ProcessId(i),
            at: HlcTimestamp::new(l as u64, c as u32),
            value: Value::Int(v as u8),
        });
    }
    Ok(SnapshotAssignment { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::CnfFormula;
    use crate::report::{trace_to_reports, WindowData};
    use crate::testutil::token_trace;

    fn ts(l: u64, c: u32) -> HlcTimestamp {
        HlcTimestamp::new(l, c)
    }

    #[test]
    fn clock_sync_schema() {
        let cfg = EncoderConfig::new(1000);
        let plain = encode_clock_sync(2, 1000, &cfg);
        assert_eq!(
            plain,
            vec!["(assert (and (<= (- l_1 l_2) 1000) (<= (- l_2 l_1) 1000)))".to_string()]
        );
        let combined = encode_clock_sync(2, 1000, &EncoderConfig::combined(1000));
        assert_eq!(
            combined,
            vec!["(assert (and (<= (- nl_1 nl_2) 4000) (<= (- nl_2 nl_1) 4000)))".to_string()]
        );
        assert!(encode_clock_sync(1, 1000, &cfg).is_empty());
        // C(n,2) assertions.
        assert_eq!(encode_clock_sync(5, 10, &cfg).len(), 10);
    }

    #[test]
    fn communication_schema() {
        let msg = MsgReport {
            from: ProcessId(1),
            sent: ts(51, 0),
            to: ProcessId(2),
            recv: ts(54, 0),
        };
        let plain = encode_communication(&msg, &EncoderConfig::new(10)).unwrap();
        assert_eq!(
            plain,
            "(assert (=> (or (> l_2 54) (and (= l_2 54) (>= c_2 0))) \
             (or (> l_1 51) (and (= l_1 51) (> c_1 0)))))"
        );
        let combined = encode_communication(&msg, &EncoderConfig::combined(10)).unwrap();
        assert_eq!(combined, "(assert (=> (>= nl_2 216) (> nl_1 204)))");
    }

    #[test]
    fn var_event_schema() {
        let rep = VarReport {
            proc: ProcessId(1),
            old: Value::Bool(true),
            interval: (ts(45, 0), ts(50, 0)),
        };
        let plain = encode_var_event(&rep, &EncoderConfig::new(10)).unwrap();
        assert_eq!(
            plain,
            "(assert (=> (and (or (> l_1 45) (and (= l_1 45) (>= c_1 0))) \
             (or (< l_1 50) (and (= l_1 50) (< c_1 0)))) (= v_1 1)))"
        );
        let combined = encode_var_event(&rep, &EncoderConfig::combined(10)).unwrap();
        assert_eq!(
            combined,
            "(assert (=> (and (>= nl_1 180) (< nl_1 200)) (= v_1 1)))"
        );
    }

    #[test]
    fn counters_beyond_c_prime_are_fatal_for_direct_encoding() {
        let msg = MsgReport {
            from: ProcessId(1),
            sent: ts(51, 4),
            to: ProcessId(2),
            recv: ts(54, 5),
        };
        let err = encode_communication(&msg, &EncoderConfig::combined(10)).unwrap_err();
        assert_eq!(
            err,
            EncodeError::CounterExceedsCPrime {
                stamp: ts(51, 4),
                c_prime: 4
            }
        );
        let rep = VarReport {
            proc: ProcessId(1),
            old: Value::Bool(false),
            interval: (ts(0, 0), ts(5, 7)),
        };
        assert!(encode_var_event(&rep, &EncoderConfig::combined(10)).is_err());
    }

    #[test]
    fn predicate_schemas() {
        assert_eq!(
            encode_predicate(&Predicate::Conjunction, 3),
            "(assert (and (= v_1 1) (= v_2 1) (= v_3 1)))"
        );
        assert_eq!(
            encode_predicate(&Predicate::SumGeq(10), 10),
            "(assert (>= (+ v_1 v_2 v_3 v_4 v_5 v_6 v_7 v_8 v_9 v_10) 10))"
        );
        assert_eq!(
            encode_predicate(&Predicate::PairwiseConflict, 2),
            "(assert (and (= v_1 1) (= v_2 1)))"
        );
        assert_eq!(
            encode_predicate(&Predicate::ExactlyK(1), 2),
            "(assert (= (+ v_1 v_2) 1))"
        );
        assert_eq!(
            encode_predicate(&Predicate::Conjunction, 1),
            "(assert (= v_1 1))"
        );
        let cnf = Predicate::Cnf(CnfFormula::new(2, vec![vec![1, -2], vec![2]]));
        assert_eq!(
            encode_predicate(&cnf, 2),
            "(assert (and (or (= v_1 1) (= v_2 0)) (= v_2 1)))"
        );
    }

    #[test]
    fn script_is_deterministic_and_complete() {
        let trace = token_trace(true, 10);
        let reports = trace_to_reports(&trace).unwrap();
        let window = WindowData::from_reports(&reports).unwrap();
        let cfg = EncoderConfig::new(10);
        let script = build_script(&window, &Predicate::PairwiseConflict, &cfg).unwrap();
        // 6 var reports (incl. the two closing ones), 1 message, 1 clock pair.
        assert_eq!(script.var_events.len(), 6);
        assert_eq!(script.communication.len(), 1);
        assert_eq!(script.clock_sync.len(), 1);
        assert_eq!(script.declarations.len(), 6);
        let a = script.render();
        let b = build_script(&window, &Predicate::PairwiseConflict, &cfg)
            .unwrap()
            .render();
        assert_eq!(a, b);
        // Same window contents from a different arrival order: same bytes.
        let shuffled = crate::report::shuffle_arrival(&reports, 99);
        let window2 = WindowData::from_reports(&shuffled).unwrap();
        let c = build_script(&window2, &Predicate::PairwiseConflict, &cfg)
            .unwrap()
            .render();
        assert_eq!(a, c);
    }

    #[test]
    fn effective_c_prime_rises_above_observed_counters() {
        let reports = vec![
            crate::report::ReportMessage::Var(VarReport {
                proc: ProcessId(1),
                old: Value::Bool(false),
                interval: (ts(0, 0), ts(5, 6)),
            }),
            crate::report::ReportMessage::Var(VarReport {
                proc: ProcessId(1),
                old: Value::Bool(true),
                interval: (ts(5, 6), ts(9, 0)),
            }),
        ];
        let window = WindowData::from_reports(&reports).unwrap();
        let script = build_script(
            &window,
            &Predicate::Conjunction,
            &EncoderConfig::combined(4),
        )
        .unwrap();
        assert_eq!(script.c_prime, 7);
    }

    #[test]
    fn model_parse_handles_z3_and_bundled_shapes() {
        let trace = token_trace(false, 10);
        let reports = trace_to_reports(&trace).unwrap();
        let window = WindowData::from_reports(&reports).unwrap();
        let script = build_script(
            &window,
            &Predicate::PairwiseConflict,
            &EncoderConfig::new(10),
        )
        .unwrap();
        let bare = "sat\n(\n  (define-fun v_1 () Int 1)\n  (define-fun v_2 () Int 1)\n\
                    (define-fun l_1 () Int 49)\n  (define-fun c_1 () Int 0)\n\
                    (define-fun l_2 () Int 55)\n  (define-fun c_2 () Int 0)\n)\n";
        let model = parse_model(bare, &script).unwrap();
        assert_eq!(model.entries[0].at, ts(49, 0));
        assert_eq!(model.entries[1].at, ts(55, 0));
        let wrapped = bare.replace("sat\n(", "sat\n(model ");
        let model2 = parse_model(&wrapped, &script).unwrap();
        assert_eq!(model, model2);
        let missing = "sat\n((define-fun v_1 () Int 1))\n";
        assert!(matches!(
            parse_model(missing, &script),
            Err(SolverError::ModelParse(_))
        ));
    }

    #[test]
    fn combined_model_decodes_nl() {
        let trace = token_trace(false, 10);
        let reports = trace_to_reports(&trace).unwrap();
        let window = WindowData::from_reports(&reports).unwrap();
        let script = build_script(
            &window,
            &Predicate::PairwiseConflict,
            &EncoderConfig::combined(10),
        )
        .unwrap();
        let out = "sat\n(\n(define-fun v_1 () Int 1)\n(define-fun v_2 () Int 1)\n\
                   (define-fun nl_1 () Int 197)\n(define-fun nl_2 () Int 220)\n)\n";
        let model = parse_model(out, &script).unwrap();
        assert_eq!(model.entries[0].at, ts(49, 1));
        assert_eq!(model.entries[1].at, ts(55, 0));
    }

    #[test]
    fn bad_predicates_rejected_at_build() {
        let trace = token_trace(false, 10);
        let reports = trace_to_reports(&trace).unwrap();
        let window = WindowData::from_reports(&reports).unwrap();
        let err = build_script(&window, &Predicate::ExactlyK(5), &EncoderConfig::new(10));
        assert!(matches!(err, Err(EncodeError::BadPredicate(_))));
    }
}
