//! Self-contained decision procedure for the quantifier-free linear integer
//! arithmetic scripts the encoder produces.
//!
//! Every integer variable must have finite bounds derivable from top-level
//! assertions (the encoder always emits them). Formulas are bit-blasted over
//! those bounds and handed to a CDCL SAT solver; models are read back as
//! integer values. The `hlcmon-solver` binary wraps this module behind the
//! same command-line convention as `z3 FILE`.

mod bitblast;
pub mod sexpr;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sexpr::{parse_all, SExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Int,
    Bool,
}

/// Comparison of a linear expression against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    /// expr <= 0
    Le,
    /// expr = 0
    Eq,
}

/// Linear integer expression: sum of coeff * var plus a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinExpr {
    /// Sorted by variable index, no zero coefficients, no duplicates.
    pub coeffs: Vec<(usize, i128)>,
    pub constant: i128,
}

impl LinExpr {
    fn constant(k: i128) -> Self {
        LinExpr {
            coeffs: Vec::new(),
            constant: k,
        }
    }

    fn var(v: usize) -> Self {
        LinExpr {
            coeffs: vec![(v, 1)],
            constant: 0,
        }
    }

    fn scale(mut self, k: i128) -> Self {
        for (_, c) in &mut self.coeffs {
            *c *= k;
        }
        self.constant *= k;
        self.normalize()
    }

    fn add(mut self, other: &LinExpr) -> Self {
        self.coeffs.extend(other.coeffs.iter().copied());
        self.constant += other.constant;
        self.normalize()
    }

    fn sub(self, other: &LinExpr) -> Self {
        let negated = other.clone().scale(-1);
        self.add(&negated)
    }

    fn offset(mut self, k: i128) -> Self {
        self.constant += k;
        self
    }

    fn normalize(mut self) -> Self {
        self.coeffs.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(usize, i128)> = Vec::with_capacity(self.coeffs.len());
        for (v, c) in self.coeffs.drain(..) {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0);
        self.coeffs = merged;
        self
    }

    pub fn eval(&self, values: &[i128]) -> i128 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(v, c)| c * values[*v])
                .sum::<i128>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Const(bool),
    BoolVar(usize),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    Iff(Box<Term>, Box<Term>),
    Cmp(CmpOp, LinExpr),
}

impl Term {
    pub fn eval(&self, ints: &[i128], bools: &[bool]) -> bool {
        match self {
            Term::Const(b) => *b,
            Term::BoolVar(v) => bools[*v],
            Term::Not(t) => !t.eval(ints, bools),
            Term::And(ts) => ts.iter().all(|t| t.eval(ints, bools)),
            Term::Or(ts) => ts.iter().any(|t| t.eval(ints, bools)),
            Term::Implies(a, b) => !a.eval(ints, bools) || b.eval(ints, bools),
            Term::Iff(a, b) => a.eval(ints, bools) == b.eval(ints, bools),
            Term::Cmp(CmpOp::Le, e) => e.eval(ints) <= 0,
            Term::Cmp(CmpOp::Eq, e) => e.eval(ints) == 0,
        }
    }
}

/// A parsed script: declarations plus asserted terms.
#[derive(Clone, Debug)]
pub struct Script {
    /// Integer variable names in declaration order.
    pub int_names: Vec<String>,
    /// Boolean variable names in declaration order.
    pub bool_names: Vec<String>,
    pub asserts: Vec<Term>,
    pub want_model: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SmtLiteError {
    #[error("syntax: {0}")]
    Syntax(#[from] sexpr::SExprError),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("malformed command: {0}")]
    Malformed(String),
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("duplicate declaration of {0:?}")]
    Duplicate(String),
    #[error("integer variable {0:?} has no finite bounds; cannot finitize")]
    Unbounded(String),
    #[error("sort mismatch in {0}")]
    SortMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(Model),
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Model {
    pub ints: BTreeMap<String, i128>,
    pub bools: BTreeMap<String, bool>,
}

pub fn parse_script(text: &str) -> Result<Script, SmtLiteError> {
    let forms = parse_all(text)?;
    let mut script = Script {
        int_names: Vec::new(),
        bool_names: Vec::new(),
        asserts: Vec::new(),
        want_model: false,
    };
    let mut names: BTreeMap<String, (Sort, usize)> = BTreeMap::new();
    for form in &forms {
        let items = form
            .list()
            .ok_or_else(|| SmtLiteError::Malformed(format!("bare atom {form}")))?;
        let head = items
            .first()
            .and_then(SExpr::atom)
            .ok_or_else(|| SmtLiteError::Malformed(form.to_string()))?;
        match head {
            "set-logic" | "set-option" | "set-info" | "check-sat" | "exit" => {}
            "get-model" => script.want_model = true,
            "declare-const" | "declare-fun" => {
                let (name, sort) = match items {
                    [_, SExpr::Atom(name), SExpr::Atom(sort)] => (name, sort),
                    // (declare-fun name () Sort)
                    [_, SExpr::Atom(name), SExpr::List(args), SExpr::Atom(sort)]
                        if args.is_empty() =>
                    {
                        (name, sort)
                    }
                    _ => return Err(SmtLiteError::Malformed(form.to_string())),
                };
                let sort = match sort.as_str() {
                    "Int" => Sort::Int,
                    "Bool" => Sort::Bool,
                    other => return Err(SmtLiteError::Unsupported(format!("sort {other}"))),
                };
                if names.contains_key(name) {
                    return Err(SmtLiteError::Duplicate(name.clone()));
                }
                let idx = match sort {
                    Sort::Int => {
                        script.int_names.push(name.clone());
                        script.int_names.len() - 1
                    }
                    Sort::Bool => {
                        script.bool_names.push(name.clone());
                        script.bool_names.len() - 1
                    }
                };
                names.insert(name.clone(), (sort, idx));
            }
            "assert" => match items {
                [_, body] => script.asserts.push(parse_term(body, &names)?),
                _ => return Err(SmtLiteError::Malformed(form.to_string())),
            },
            other => return Err(SmtLiteError::Unsupported(format!("command {other}"))),
        }
    }
    Ok(script)
}

enum Parsed {
    Bool(Term),
    Int(LinExpr),
}

fn parse_term(e: &SExpr, names: &BTreeMap<String, (Sort, usize)>) -> Result<Term, SmtLiteError> {
    match parse_expr(e, names)? {
        Parsed::Bool(t) => Ok(t),
        Parsed::Int(_) => Err(SmtLiteError::SortMismatch(format!("{e} used as Bool"))),
    }
}

fn parse_int(e: &SExpr, names: &BTreeMap<String, (Sort, usize)>) -> Result<LinExpr, SmtLiteError> {
    match parse_expr(e, names)? {
        Parsed::Int(t) => Ok(t),
        Parsed::Bool(_) => Err(SmtLiteError::SortMismatch(format!("{e} used as Int"))),
    }
}

fn parse_expr(e: &SExpr, names: &BTreeMap<String, (Sort, usize)>) -> Result<Parsed, SmtLiteError> {
    match e {
        SExpr::Atom(a) => {
            if let Ok(k) = a.parse::<i128>() {
                return Ok(Parsed::Int(LinExpr::constant(k)));
            }
            match a.as_str() {
                "true" => Ok(Parsed::Bool(Term::Const(true))),
                "false" => Ok(Parsed::Bool(Term::Const(false))),
                _ => match names.get(a) {
                    Some((Sort::Int, idx)) => Ok(Parsed::Int(LinExpr::var(*idx))),
                    Some((Sort::Bool, idx)) => Ok(Parsed::Bool(Term::BoolVar(*idx))),
                    None => Err(SmtLiteError::UnknownSymbol(a.clone())),
                },
            }
        }
        SExpr::List(items) => {
            let head = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| SmtLiteError::Malformed(e.to_string()))?;
            let args = &items[1..];
            let int_args = |names| -> Result<Vec<LinExpr>, SmtLiteError> {
                args.iter().map(|a| parse_int(a, names)).collect()
            };
            match head {
                "+" => {
                    let parts = int_args(names)?;
                    let mut acc = LinExpr::constant(0);
                    for p in &parts {
                        acc = acc.add(p);
                    }
                    Ok(Parsed::Int(acc))
                }
                "-" => {
                    let parts = int_args(names)?;
                    match parts.split_first() {
                        Some((first, [])) => Ok(Parsed::Int(first.clone().scale(-1))),
                        Some((first, rest)) => {
                            let mut acc = first.clone();
                            for p in rest {
                                acc = acc.sub(p);
                            }
                            Ok(Parsed::Int(acc))
                        }
                        None => Err(SmtLiteError::Malformed(e.to_string())),
                    }
                }
                "*" => {
                    let parts = int_args(names)?;
                    let mut acc = LinExpr::constant(1);
                    let mut constant = 1i128;
                    let mut symbolic: Option<LinExpr> = None;
                    for p in parts {
                        if p.coeffs.is_empty() {
                            constant *= p.constant;
                        } else if symbolic.is_none() {
                            symbolic = Some(p);
                        } else {
                            return Err(SmtLiteError::Unsupported(format!(
                                "nonlinear product {e}"
                            )));
                        }
                    }
                    acc = match symbolic {
                        Some(s) => s.scale(constant),
                        None => acc.scale(constant),
                    };
                    Ok(Parsed::Int(acc))
                }
                "<=" | "<" | ">=" | ">" => {
                    let parts = int_args(names)?;
                    if parts.len() != 2 {
                        return Err(SmtLiteError::Unsupported(format!("chained comparison {e}")));
                    }
                    let (a, b) = (parts[0].clone(), &parts[1]);
                    let lin = match head {
                        "<=" => a.sub(b),
                        "<" => a.sub(b).offset(1),
                        ">=" => b.clone().sub(&a),
                        ">" => b.clone().sub(&a).offset(1),
                        _ => unreachable!(),
                    };
                    Ok(Parsed::Bool(Term::Cmp(CmpOp::Le, lin)))
                }
                "=" => {
                    if args.len() != 2 {
                        return Err(SmtLiteError::Unsupported(format!("n-ary equality {e}")));
                    }
                    match (parse_expr(&args[0], names)?, parse_expr(&args[1], names)?) {
                        (Parsed::Int(a), Parsed::Int(b)) => {
                            Ok(Parsed::Bool(Term::Cmp(CmpOp::Eq, a.sub(&b))))
                        }
                        (Parsed::Bool(a), Parsed::Bool(b)) => {
                            Ok(Parsed::Bool(Term::Iff(Box::new(a), Box::new(b))))
                        }
                        _ => Err(SmtLiteError::SortMismatch(e.to_string())),
                    }
                }
                "and" => Ok(Parsed::Bool(Term::And(
                    args.iter()
                        .map(|a| parse_term(a, names))
                        .collect::<Result<_, _>>()?,
                ))),
                "or" => Ok(Parsed::Bool(Term::Or(
                    args.iter()
                        .map(|a| parse_term(a, names))
                        .collect::<Result<_, _>>()?,
                ))),
                "not" => match args {
                    [inner] => Ok(Parsed::Bool(Term::Not(Box::new(parse_term(inner, names)?)))),
                    _ => Err(SmtLiteError::Malformed(e.to_string())),
                },
                "=>" => {
                    if args.len() < 2 {
                        return Err(SmtLiteError::Malformed(e.to_string()));
                    }
                    // Right-associative: (=> a b c) is a => (b => c).
                    let mut terms: Vec<Term> = args
                        .iter()
                        .map(|a| parse_term(a, names))
                        .collect::<Result<_, _>>()?;
                    let mut acc = terms.pop().unwrap();
                    while let Some(lhs) = terms.pop() {
                        acc = Term::Implies(Box::new(lhs), Box::new(acc));
                    }
                    Ok(Parsed::Bool(acc))
                }
                other => Err(SmtLiteError::Unsupported(format!("operator {other}"))),
            }
        }
    }
}

/// Inclusive bounds for every integer variable, inferred from top-level
/// conjuncts that mention a single variable.
pub fn infer_bounds(script: &Script) -> Result<Vec<(i128, i128)>, SmtLiteError> {
    let mut lo = vec![i128::MIN; script.int_names.len()];
    let mut hi = vec![i128::MAX; script.int_names.len()];
    let mut stack: Vec<&Term> = script.asserts.iter().collect();
    let tighten = |e: &LinExpr, eq: bool, lo: &mut Vec<i128>, hi: &mut Vec<i128>| {
        if e.coeffs.len() != 1 {
            return;
        }
        let (v, a) = e.coeffs[0];
        let k = e.constant;
        // a*v + k <= 0
        if a > 0 {
            let bound = (-k).div_euclid(a);
            hi[v] = hi[v].min(bound);
        } else {
            let b = -a;
            let mut bound = k.div_euclid(b);
            if k.rem_euclid(b) != 0 {
                bound += 1;
            }
            lo[v] = lo[v].max(bound);
        }
        if eq {
            // a*v + k = 0 also bounds from the other side.
            if a > 0 {
                if k.rem_euclid(a) == 0 {
                    lo[v] = lo[v].max((-k).div_euclid(a));
                }
            } else if k.rem_euclid(-a) == 0 {
                hi[v] = hi[v].min(k.div_euclid(-a));
            }
        }
    };
    while let Some(t) = stack.pop() {
        match t {
            Term::And(parts) => stack.extend(parts.iter()),
            Term::Cmp(CmpOp::Le, e) => tighten(e, false, &mut lo, &mut hi),
            Term::Cmp(CmpOp::Eq, e) => {
                tighten(e, true, &mut lo, &mut hi);
                let neg = e.clone().scale(-1);
                tighten(&neg, true, &mut lo, &mut hi);
            }
            _ => {}
        }
    }
    let mut out = Vec::with_capacity(lo.len());
    for (i, (l, h)) in lo.into_iter().zip(hi).enumerate() {
        if l == i128::MIN || h == i128::MAX {
            return Err(SmtLiteError::Unbounded(script.int_names[i].clone()));
        }
        out.push((l, h));
    }
    Ok(out)
}

/// Decide a full SMT-LIB2 script.
pub fn solve_script(text: &str) -> Result<Outcome, SmtLiteError> {
    let script = parse_script(text)?;
    let bounds = infer_bounds(&script)?;
    // An empty bound interval makes the whole script unsatisfiable.
    if bounds.iter().any(|(l, h)| l > h) {
        return Ok(Outcome::Unsat);
    }
    bitblast::solve(&script, &bounds)
}

/// Render an outcome the way a `z3`-style CLI prints it.
pub fn render_outcome(outcome: &Outcome, want_model: bool) -> String {
    match outcome {
        Outcome::Unsat => "unsat\n".to_string(),
        Outcome::Sat(model) => {
            let mut out = String::from("sat\n");
            if want_model {
                out.push_str("(\n");
                for (name, value) in &model.ints {
                    let rendered = if *value < 0 {
                        format!("(- {})", -value)
                    } else {
                        value.to_string()
                    };
                    let _ = writeln!(out, "  (define-fun {name} () Int {rendered})");
                }
                for (name, value) in &model.bools {
                    let _ = writeln!(out, "  (define-fun {name} () Bool {value})");
                }
                out.push_str(")\n");
            }
            out
        }
    }
}
