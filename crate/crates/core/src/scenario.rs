//! Flat key=value scenario files.
//!
//! ```text
//! # token ring, faulty
//! n = 10
//! epsilon = 1000
//! workload = exclusive
//! slot = 10000
//! guard = 1000
//! overrun = 100
//! overrun_prob = 1.0
//! ```
//!
//! Unknown keys are errors; CLI flags override file values.

use crate::sim::{ScenarioConfig, Workload};
use crate::trace::Domain;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioParseError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{key} only applies to the {workload} workload")]
    WrongWorkload { key: String, workload: &'static str },
}

/// Parse a scenario file on top of `base`. Set `workload` before
/// workload-specific keys when switching workload kinds.
pub fn parse_scenario(
    text: &str,
    base: &ScenarioConfig,
) -> Result<ScenarioConfig, ScenarioParseError> {
    let mut cfg = base.clone();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| ScenarioParseError::Syntax {
                line,
                text: raw.to_string(),
            })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, key, value).map_err(|kind| kind.at(line, key, value))?;
    }
    Ok(cfg)
}

enum KeyError {
    Bad,
    Unknown,
    WrongWorkload(&'static str),
}

impl KeyError {
    fn at(self, line: usize, key: &str, value: &str) -> ScenarioParseError {
        match self {
            KeyError::Bad => ScenarioParseError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            },
            KeyError::Unknown => ScenarioParseError::UnknownKey {
                line,
                key: key.to_string(),
            },
            KeyError::WrongWorkload(w) => ScenarioParseError::WrongWorkload {
                key: key.to_string(),
                workload: w,
            },
        }
    }
}

fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), KeyError> {
    fn num<T: std::str::FromStr>(value: &str) -> Result<T, KeyError> {
        value.parse().map_err(|_| KeyError::Bad)
    }
    match key {
        "n" => cfg.n = num(value)?,
        "tick_ms" => cfg.tick_ms = num(value)?,
        "epsilon" => cfg.epsilon = num(value)?,
        "delta" => {
            let d = num(value)?;
            cfg.delta_min = d;
            cfg.delta_max = d;
        }
        "delta_min" => cfg.delta_min = num(value)?,
        "delta_max" => cfg.delta_max = num(value)?,
        "mfr" => cfg.mfr = num(value)?,
        "duration" => cfg.duration = num(value)?,
        "seed" => cfg.seed = num(value)?,
        "workload" => {
            cfg.workload = match value {
                "synthetic" => Workload::Synthetic {
                    beta: 0.01,
                    interval: 10,
                    domain: Domain::Bool,
                },
                "exclusive" => Workload::ExclusiveAccess {
                    slot: 10_000,
                    guard: 1_000,
                    overrun: 100,
                    overrun_prob: 0.1,
                },
                _ => return Err(KeyError::Bad),
            }
        }
        "beta" => match &mut cfg.workload {
            Workload::Synthetic { beta, .. } => *beta = num(value)?,
            _ => return Err(KeyError::WrongWorkload("synthetic")),
        },
        "interval" => match &mut cfg.workload {
            Workload::Synthetic { interval, .. } => *interval = num(value)?,
            _ => return Err(KeyError::WrongWorkload("synthetic")),
        },
        "domain" => match &mut cfg.workload {
            Workload::Synthetic { domain, .. } => {
                *domain = match value {
                    "bool" => Domain::Bool,
                    "int" => Domain::Int,
                    _ => return Err(KeyError::Bad),
                }
            }
            _ => return Err(KeyError::WrongWorkload("synthetic")),
        },
        "slot" => match &mut cfg.workload {
            Workload::ExclusiveAccess { slot, .. } => *slot = num(value)?,
            _ => return Err(KeyError::WrongWorkload("exclusive")),
        },
        "guard" => match &mut cfg.workload {
            Workload::ExclusiveAccess { guard, .. } => *guard = num(value)?,
            _ => return Err(KeyError::WrongWorkload("exclusive")),
        },
        "overrun" => match &mut cfg.workload {
            Workload::ExclusiveAccess { overrun, .. } => *overrun = num(value)?,
            _ => return Err(KeyError::WrongWorkload("exclusive")),
        },
        "overrun_prob" => match &mut cfg.workload {
            Workload::ExclusiveAccess { overrun_prob, .. } => *overrun_prob = num(value)?,
            _ => return Err(KeyError::WrongWorkload("exclusive")),
        },
        _ => return Err(KeyError::Unknown),
    }
    Ok(())
}
