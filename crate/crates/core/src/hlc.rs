//! Hybrid Logical Clock timestamps.
//!
//! An HLC timestamp pairs `l`, the largest physical clock value the process
//! has seen, with `c`, a causality counter that breaks ties when `l` alone
//! cannot order two events. Comparison is lexicographic on `(l, c)`, which
//! gives the guarantee the monitor relies on: if one event happened before
//! another, its timestamp is strictly smaller.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Ticks;

/// Hybrid logical clock value `⟨l, c⟩`.
///
/// `l` never lags the local physical clock and exceeds it only through
/// messages from clocks at most epsilon ahead. `c` stays tiny in practice;
/// overflowing it is treated as a fatal error rather than wrapped.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(into = "String", try_from = "String")]
pub struct HlcTimestamp {
    pub l: Ticks,
    pub c: u32,
}

impl HlcTimestamp {
    pub const ZERO: HlcTimestamp = HlcTimestamp { l: 0, c: 0 };

    pub fn new(l: Ticks, c: u32) -> Self {
        HlcTimestamp { l, c }
    }
}

/// Timestamp for a local or send event at physical tick `pt`.
///
/// `l` tracks the maximum of the previous `l` and the local clock; `c`
/// increments only when `l` did not advance.
pub fn advance_local(current: HlcTimestamp, pt: Ticks) -> HlcTimestamp {
    if pt > current.l {
        HlcTimestamp { l: pt, c: 0 }
    } else {
        HlcTimestamp {
            l: current.l,
            c: current
                .c
                .checked_add(1)
                .expect("HLC causality counter overflow"),
        }
    }
}

/// Timestamp for a receive event: merges the local clock state with the
/// timestamp carried by the message, keeping the result above both.
pub fn advance_receive(current: HlcTimestamp, msg: HlcTimestamp, pt: Ticks) -> HlcTimestamp {
    let l = current.l.max(msg.l).max(pt);
    let bump = |c: u32| c.checked_add(1).expect("HLC causality counter overflow");
    let c = if l == current.l && l == msg.l {
        bump(current.c.max(msg.c))
    } else if l == current.l {
        bump(current.c)
    } else if l == msg.l {
        bump(msg.c)
    } else {
        0
    };
    HlcTimestamp { l, c }
}

/// Strict lexicographic order: `a < b` iff `a.l < b.l`, or `a.l = b.l` and
/// `a.c < b.c`. Same relation as the derived `Ord`; kept as a named
/// operation for callers that want the comparison spelled out.
pub fn hlc_less(a: HlcTimestamp, b: HlcTimestamp) -> bool {
    a < b
}

/// Text form used in trace files: `l.c`, e.g. `51.0`.
impl fmt::Display for HlcTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.l, self.c)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid HLC timestamp {0:?}: expected `l.c` with unsigned integers")]
pub struct ParseHlcError(pub String);

impl FromStr for HlcTimestamp {
    type Err = ParseHlcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, c) = s
            .split_once('.')
            .ok_or_else(|| ParseHlcError(s.to_string()))?;
        let l = l.parse().map_err(|_| ParseHlcError(s.to_string()))?;
        let c = c.parse().map_err(|_| ParseHlcError(s.to_string()))?;
        Ok(HlcTimestamp { l, c })
    }
}

impl From<HlcTimestamp> for String {
    fn from(ts: HlcTimestamp) -> String {
        ts.to_string()
    }
}

impl TryFrom<String> for HlcTimestamp {
    type Error = ParseHlcError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}
