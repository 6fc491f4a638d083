//! Finite-domain reduction to SAT.
//!
//! Each integer variable is an offset binary vector over its inferred
//! bounds. Linear expressions become ripple-carry adder circuits, atoms
//! become comparisons against constants, and the boolean skeleton is
//! Tseitin-encoded on top. varisat does the search.

use varisat::{ExtendFormula, Lit, Solver};

use super::{CmpOp, LinExpr, Model, Outcome, Script, SmtLiteError, Term};

/// Bit vector with an additive offset: value = offset + sum(2^i * bit_i).
#[derive(Clone)]
struct Bv {
    bits: Vec<Lit>,
    offset: i128,
}

impl Bv {
    fn constant(k: i128) -> Self {
        Bv {
            bits: Vec::new(),
            offset: k,
        }
    }
}

struct Blaster<'a> {
    solver: Solver<'a>,
    t: Lit,
}

impl Blaster<'_> {
    fn new() -> Self {
        let mut solver = Solver::new();
        let t = solver.new_lit();
        solver.add_clause(&[t]);
        Blaster { solver, t }
    }

    fn f(&self) -> Lit {
        !self.t
    }

    fn lit(&mut self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            self.f()
        }
    }

    fn g_and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == self.f() || b == self.f() {
            return self.f();
        }
        if a == self.t {
            return b;
        }
        if b == self.t || a == b {
            return a;
        }
        if a == !b {
            return self.f();
        }
        let g = self.solver.new_lit();
        self.solver.add_clause(&[!g, a]);
        self.solver.add_clause(&[!g, b]);
        self.solver.add_clause(&[g, !a, !b]);
        g
    }

    fn g_or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.g_and(!a, !b)
    }

    fn g_xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a == self.f() {
            return b;
        }
        if b == self.f() {
            return a;
        }
        if a == self.t {
            return !b;
        }
        if b == self.t {
            return !a;
        }
        if a == b {
            return self.f();
        }
        if a == !b {
            return self.t;
        }
        let g = self.solver.new_lit();
        self.solver.add_clause(&[!g, a, b]);
        self.solver.add_clause(&[!g, !a, !b]);
        self.solver.add_clause(&[g, !a, b]);
        self.solver.add_clause(&[g, a, !b]);
        g
    }

    fn g_and_many(&mut self, lits: &[Lit]) -> Lit {
        let live: Vec<Lit> = lits.iter().copied().filter(|l| *l != self.t).collect();
        if live.iter().any(|l| *l == self.f()) {
            return self.f();
        }
        match live.as_slice() {
            [] => self.t,
            [single] => *single,
            _ => {
                let g = self.solver.new_lit();
                let mut long = vec![g];
                for l in &live {
                    self.solver.add_clause(&[!g, *l]);
                    long.push(!*l);
                }
                self.solver.add_clause(&long);
                g
            }
        }
    }

    fn g_or_many(&mut self, lits: &[Lit]) -> Lit {
        let inverted: Vec<Lit> = lits.iter().map(|l| !*l).collect();
        !self.g_and_many(&inverted)
    }

    /// Fresh vector for a variable in [lo, hi], with the upper bound clamped.
    fn bv_var(&mut self, lo: i128, hi: i128) -> Bv {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u128;
        if span == 0 {
            return Bv::constant(lo);
        }
        let width = (128 - span.leading_zeros()) as usize;
        let bits: Vec<Lit> = (0..width).map(|_| self.solver.new_lit()).collect();
        let cap = self.cmp_le_const(&bits, span as i128);
        self.solver.add_clause(&[cap]);
        Bv { bits, offset: lo }
    }

    fn bv_add(&mut self, a: &Bv, b: &Bv) -> Bv {
        if a.bits.is_empty() {
            return Bv {
                bits: b.bits.clone(),
                offset: a.offset + b.offset,
            };
        }
        if b.bits.is_empty() {
            return Bv {
                bits: a.bits.clone(),
                offset: a.offset + b.offset,
            };
        }
        let width = a.bits.len().max(b.bits.len()) + 1;
        let mut bits = Vec::with_capacity(width);
        let mut carry = self.f();
        for i in 0..width {
            let ai = a.bits.get(i).copied().unwrap_or(self.f());
            let bi = b.bits.get(i).copied().unwrap_or(self.f());
            let x = self.g_xor(ai, bi);
            let sum = self.g_xor(x, carry);
            let c1 = self.g_and(ai, bi);
            let c2 = self.g_and(x, carry);
            carry = self.g_or(c1, c2);
            bits.push(sum);
        }
        Bv {
            bits,
            offset: a.offset + b.offset,
        }
    }

    fn bv_neg(&mut self, a: &Bv) -> Bv {
        if a.bits.is_empty() {
            return Bv::constant(-a.offset);
        }
        let span = (1i128 << a.bits.len()) - 1;
        Bv {
            bits: a.bits.iter().map(|l| !*l).collect(),
            offset: -a.offset - span,
        }
    }

    fn bv_scale(&mut self, a: &Bv, k: i128) -> Bv {
        if k == 0 {
            return Bv::constant(0);
        }
        if k < 0 {
            let neg = self.bv_neg(a);
            return self.bv_scale(&neg, -k);
        }
        let mut acc = Bv::constant(a.offset * k);
        let mut shift = 0u32;
        let mut rest = k;
        while rest > 0 {
            if rest & 1 == 1 {
                let mut shifted = Vec::with_capacity(shift as usize + a.bits.len());
                shifted.extend(std::iter::repeat_n(self.f(), shift as usize));
                shifted.extend(a.bits.iter().copied());
                let part = Bv {
                    bits: shifted,
                    offset: 0,
                };
                acc = self.bv_add(&acc, &part);
            }
            rest >>= 1;
            shift += 1;
        }
        acc
    }

    fn lin_to_bv(&mut self, e: &LinExpr, vars: &[Bv]) -> Bv {
        let mut acc = Bv::constant(e.constant);
        for (v, c) in &e.coeffs {
            let scaled = self.bv_scale(&vars[*v], *c);
            acc = self.bv_add(&acc, &scaled);
        }
        acc
    }

    /// unsigned(bits) <= k
    fn cmp_le_const(&mut self, bits: &[Lit], k: i128) -> Lit {
        if k < 0 {
            return self.f();
        }
        let max = (1i128 << bits.len()) - 1;
        if k >= max {
            return self.t;
        }
        let mut le = self.t;
        for (i, &b) in bits.iter().enumerate() {
            le = if k & (1 << i) != 0 {
                self.g_or(!b, le)
            } else {
                self.g_and(!b, le)
            };
        }
        le
    }

    /// unsigned(bits) == k
    fn cmp_eq_const(&mut self, bits: &[Lit], k: i128) -> Lit {
        let max = (1i128 << bits.len()) - 1;
        if !(0..=max).contains(&k) {
            return self.f();
        }
        let matches: Vec<Lit> = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if k & (1 << i) != 0 { b } else { !b })
            .collect();
        self.g_and_many(&matches)
    }

    fn atom(&mut self, op: CmpOp, e: &LinExpr, vars: &[Bv]) -> Lit {
        let bv = self.lin_to_bv(e, vars);
        // value = offset + bits; compare value against 0.
        let target = -bv.offset;
        match op {
            CmpOp::Le => self.cmp_le_const(&bv.bits, target),
            CmpOp::Eq => self.cmp_eq_const(&bv.bits, target),
        }
    }

    fn term(&mut self, t: &Term, vars: &[Bv], bools: &[Lit]) -> Lit {
        match t {
            Term::Const(b) => self.lit(*b),
            Term::BoolVar(v) => bools[*v],
            Term::Not(inner) => {
                let l = self.term(inner, vars, bools);
                !l
            }
            Term::And(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.term(p, vars, bools)).collect();
                self.g_and_many(&lits)
            }
            Term::Or(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.term(p, vars, bools)).collect();
                self.g_or_many(&lits)
            }
            Term::Implies(a, b) => {
                let la = self.term(a, vars, bools);
                let lb = self.term(b, vars, bools);
                self.g_or(!la, lb)
            }
            Term::Iff(a, b) => {
                let la = self.term(a, vars, bools);
                let lb = self.term(b, vars, bools);
                let x = self.g_xor(la, lb);
                !x
            }
            Term::Cmp(op, e) => self.atom(*op, e, vars),
        }
    }
}

pub(super) fn solve(script: &Script, bounds: &[(i128, i128)]) -> Result<Outcome, SmtLiteError> {
    const MAX_SPAN: i128 = 1 << 48;
    if let Some(i) = bounds.iter().position(|(lo, hi)| hi - lo > MAX_SPAN) {
        return Err(SmtLiteError::Unbounded(format!(
            "{} spans more than 2^48 values",
            script.int_names[i]
        )));
    }
    let mut blaster = Blaster::new();
    let vars: Vec<Bv> = bounds
        .iter()
        .map(|(lo, hi)| blaster.bv_var(*lo, *hi))
        .collect();
    let bools: Vec<Lit> = (0..script.bool_names.len())
        .map(|_| blaster.solver.new_lit())
        .collect();
    for assert in &script.asserts {
        let root = blaster.term(assert, &vars, &bools);
        blaster.solver.add_clause(&[root]);
    }
    let sat = blaster
        .solver
        .solve()
        .map_err(|e| SmtLiteError::Unsupported(format!("SAT backend failure: {e}")))?;
    if !sat {
        return Ok(Outcome::Unsat);
    }
    let assignment = blaster
        .solver
        .model()
        .ok_or_else(|| SmtLiteError::Unsupported("sat without model".to_string()))?;
    let mut polarity = vec![false; assignment.len() + 1];
    for lit in &assignment {
        let idx = lit.var().index();
        if idx >= polarity.len() {
            polarity.resize(idx + 1, false);
        }
        polarity[idx] = lit.is_positive();
    }
    let read = |l: Lit| -> bool {
        let v = polarity.get(l.var().index()).copied().unwrap_or(false);
        if l.is_positive() {
            v
        } else {
            !v
        }
    };
    let mut model = Model::default();
    for (name, bv) in script.int_names.iter().zip(&vars) {
        let mut value = bv.offset;
        for (i, &bit) in bv.bits.iter().enumerate() {
            if read(bit) {
                value += 1 << i;
            }
        }
        model.ints.insert(name.clone(), value);
    }
    for (name, &lit) in script.bool_names.iter().zip(&bools) {
        model.bools.insert(name.clone(), read(lit));
    }
    Ok(Outcome::Sat(model))
}
