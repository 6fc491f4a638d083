//! Safety predicates over the per-process variables.
//!
//! Variables are single bits per process (booleans, or integers restricted to
//! {0, 1}), so one evaluation path serves both domains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trace::Value;

/// Predicate over the `n` process variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    /// All variables true simultaneously.
    Conjunction,
    /// Exactly `k` variables true.
    ExactlyK(u32),
    /// At least `k` variables true.
    AtLeastK(u32),
    /// Sum of integer variables equals `k`.
    SumEq(u32),
    /// Sum of integer variables at least `k`.
    SumGeq(u32),
    /// Two distinct variables true at once (mutual-exclusion violation).
    PairwiseConflict,
    /// Arbitrary CNF over the variables, DIMACS-style clause lists.
    Cnf(CnfFormula),
}

/// CNF formula with DIMACS literal conventions: literal `i` means variable
/// `v_i` is true, `-i` means it is false. Variables are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PredicateError {
    #[error("value {value} at process {proc} outside domain {{0,1}}")]
    DomainMismatch { proc: u32, value: u64 },
    #[error("predicate parameter k={k} exceeds process count n={n}")]
    KOutOfRange { k: u32, n: u32 },
    #[error("CNF literal {lit} references a variable outside 1..={n}")]
    BadLiteral { lit: i32, n: u32 },
    #[error("empty CNF clause is unsatisfiable by convention but malformed as input")]
    EmptyClause,
}

impl CnfFormula {
    pub fn new(num_vars: u32, clauses: Vec<Vec<i32>>) -> Self {
        CnfFormula { num_vars, clauses }
    }

    pub fn validate(&self) -> Result<(), PredicateError> {
        for clause in &self.clauses {
            if clause.is_empty() {
                return Err(PredicateError::EmptyClause);
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() > self.num_vars {
                    return Err(PredicateError::BadLiteral {
                        lit,
                        n: self.num_vars,
                    });
                }
            }
        }
        Ok(())
    }

    /// Parse DIMACS CNF text (`p cnf V C` header, 0-terminated clauses,
    /// `c` comment lines).
    pub fn parse_dimacs(text: &str) -> Result<Self, String> {
        let mut num_vars = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let mut parts = rest.split_whitespace();
                if parts.next() != Some("cnf") {
                    return Err(format!("unsupported problem line: {line}"));
                }
                let v: u32 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| format!("bad variable count in: {line}"))?;
                num_vars = Some(v);
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok.parse().map_err(|_| format!("bad literal {tok:?}"))?;
                if lit == 0 {
                    if current.is_empty() {
                        return Err("empty clause in DIMACS input".to_string());
                    }
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let num_vars = num_vars
            .or_else(|| clauses.iter().flatten().map(|l| l.unsigned_abs()).max())
            .ok_or("no clauses and no problem line")?;
        let formula = CnfFormula::new(num_vars, clauses);
        formula.validate().map_err(|e| e.to_string())?;
        Ok(formula)
    }

    pub fn eval(&self, bits: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let idx = (lit.unsigned_abs() - 1) as usize;
                if lit > 0 {
                    bits[idx]
                } else {
                    !bits[idx]
                }
            })
        })
    }
}

/// Evaluate `p` over one value per process. Values must lie in {0, 1}.
pub fn eval_predicate(p: &Predicate, values: &[Value]) -> Result<bool, PredicateError> {
    let n = values.len() as u32;
    let mut bits = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let raw = v.raw();
        if raw > 1 {
            return Err(PredicateError::DomainMismatch {
                proc: i as u32 + 1,
                value: raw,
            });
        }
        bits.push(raw == 1);
    }
    let count = bits.iter().filter(|b| **b).count() as u32;
    let check_k = |k: u32| {
        if k > n {
            Err(PredicateError::KOutOfRange { k, n })
        } else {
            Ok(())
        }
    };
    match p {
        Predicate::Conjunction => Ok(count == n),
        Predicate::ExactlyK(k) => {
            check_k(*k)?;
            Ok(count == *k)
        }
        Predicate::AtLeastK(k) => {
            check_k(*k)?;
            Ok(count >= *k)
        }
        Predicate::SumEq(k) => {
            check_k(*k)?;
            Ok(count == *k)
        }
        Predicate::SumGeq(k) => {
            check_k(*k)?;
            Ok(count >= *k)
        }
        Predicate::PairwiseConflict => Ok(count >= 2),
        Predicate::Cnf(f) => {
            f.validate().map_err(|e| match e {
                PredicateError::BadLiteral { lit, .. } => PredicateError::BadLiteral { lit, n },
                other => other,
            })?;
            if f.num_vars > n {
                return Err(PredicateError::KOutOfRange { k: f.num_vars, n });
            }
            Ok(f.eval(&bits))
        }
    }
}

/// Parse a predicate specification as the CLI and FFI accept it: the named
/// forms of `FromStr`, plus `cnf:PATH` loading a DIMACS file.
pub fn parse_predicate_spec(spec: &str) -> Result<Predicate, String> {
    if let Some(path) = spec.strip_prefix("cnf:") {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("reading CNF file {path:?}: {e}"))?;
        return Ok(Predicate::Cnf(CnfFormula::parse_dimacs(&text)?));
    }
    spec.parse()
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Conjunction => write!(f, "conj"),
            Predicate::ExactlyK(k) => write!(f, "exactly:{k}"),
            Predicate::AtLeastK(k) => write!(f, "atleast:{k}"),
            Predicate::SumEq(k) => write!(f, "sumeq:{k}"),
            Predicate::SumGeq(k) => write!(f, "sumgeq:{k}"),
            Predicate::PairwiseConflict => write!(f, "pairwise"),
            Predicate::Cnf(c) => write!(f, "cnf({} vars, {} clauses)", c.num_vars, c.clauses.len()),
        }
    }
}

/// Parse a predicate spelled the way the CLI accepts it: `conj`,
/// `exactly:K`, `atleast:K`, `sumeq:K`, `sumgeq:K`, `pairwise`.
/// CNF predicates come from files, not this syntax.
impl FromStr for Predicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_k = |rest: &str| -> Result<u32, String> {
            rest.parse()
                .map_err(|_| format!("bad predicate parameter {rest:?}"))
        };
        if let Some((name, k)) = s.split_once(':') {
            return match name {
                "exactly" => Ok(Predicate::ExactlyK(parse_k(k)?)),
                "atleast" => Ok(Predicate::AtLeastK(parse_k(k)?)),
                "sumeq" => Ok(Predicate::SumEq(parse_k(k)?)),
                "sumgeq" => Ok(Predicate::SumGeq(parse_k(k)?)),
                other => Err(format!("unknown predicate {other:?}")),
            };
        }
        match s {
            "conj" => Ok(Predicate::Conjunction),
            "pairwise" => Ok(Predicate::PairwiseConflict),
            other => Err(format!("unknown predicate {other:?}")),
        }
    }
}
