//! Presence constraints.
//!
//! Roundless constraints are Boolean formulas over `pop(q)` and `reg(j, a)`.
//! Round-based constraints are Boolean combinations of atomic presence
//! constraints (APCs): closed propositions, `∃k φ` and `∀k φ`, where φ talks
//! about locations and registers at rounds `m` or `k+m`.
//!
//! Both are written as s-expressions:
//!
//! ```text
//! (and (not (pop C)) (or (reg 1 a) (and (reg 1 b) (not (pop A)))))
//! (and (pop E 2) (forall k (or (reg 1 (+ k 1) b) (reg 1 (+ k 1) d0))))
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::protocol::{is_ident_char, Protocol, RegId, StateId, SymId, D0};
use crate::semantics::AbstractConfig;

/// Largest integer constant accepted in a round term.
pub const DEFAULT_CONSTANT_LIMIT: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula<A> {
    True,
    False,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Vec<Formula<A>>),
    Or(Vec<Formula<A>>),
}

impl<A> Formula<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Formula<A> {
        Formula::Not(Box::new(f))
    }

    pub fn eval(&self, v: &mut impl FnMut(&A) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => v(a),
            Formula::Not(f) => !f.eval(v),
            Formula::And(fs) => fs.iter().all(|f| f.eval(v)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(v)),
        }
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> Formula<B>) -> Formula<B> {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => f(a),
            Formula::Not(x) => Formula::not(x.map(f)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map(f)).collect()),
        }
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.visit(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(out)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(|f| f.size()).sum::<usize>(),
        }
    }
}

impl<A: PartialEq + Clone> Formula<A> {
    /// Distinct atoms in order of first occurrence.
    pub fn atoms(&self) -> Vec<A> {
        let mut all = Vec::new();
        self.visit(&mut all);
        let mut out: Vec<A> = Vec::new();
        for a in all {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }

    /// Constant folding of `True`/`False` leaves.
    pub fn simplify(&self) -> Formula<A> {
        match self {
            Formula::Not(f) => match f.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                g => Formula::not(g),
            },
            Formula::And(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            other => other.clone(),
        }
    }
}

/// Inclusion-minimal signed partial assignments of the atoms of `f` that make
/// `f` true under every completion, smallest first, then lexicographic.
///
/// Atoms are treated as independent. Returns `None` when `f` has more than
/// `max_atoms` atoms.
pub fn minimal_assignments<A: PartialEq + Clone>(f: &Formula<A>, max_atoms: usize) -> Option<Vec<Vec<(A, bool)>>> {
    let atoms = f.atoms();
    let n = atoms.len();
    if n > max_atoms {
        return None;
    }
    let mut found: Vec<Vec<(usize, bool)>> = Vec::new();
    for size in 0..=n {
        for subset in combinations(n, size) {
            for signs in 0u32..(1 << size) {
                let cand: Vec<(usize, bool)> =
                    subset.iter().enumerate().map(|(i, &a)| (a, signs >> (size - 1 - i) & 1 == 0)).collect();
                if found.iter().any(|m| m.iter().all(|x| cand.contains(x))) {
                    continue;
                }
                if forced_true(f, &atoms, &cand) {
                    found.push(cand);
                }
            }
        }
    }
    Some(
        found
            .into_iter()
            .map(|c| c.into_iter().map(|(i, b)| (atoms[i].clone(), b)).collect())
            .collect(),
    )
}

fn forced_true<A: PartialEq>(f: &Formula<A>, atoms: &[A], partial: &[(usize, bool)]) -> bool {
    let free: Vec<usize> = (0..atoms.len()).filter(|i| !partial.iter().any(|(j, _)| j == i)).collect();
    let mut vals = vec![false; atoms.len()];
    for &(i, b) in partial {
        vals[i] = b;
    }
    for mask in 0u64..(1u64 << free.len()) {
        for (bit, &i) in free.iter().enumerate() {
            vals[i] = mask >> bit & 1 == 1;
        }
        let ok = f.eval(&mut |a| {
            let i = atoms.iter().position(|x| x == a).unwrap();
            vals[i]
        });
        if !ok {
            return false;
        }
    }
    true
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Roundless constraints

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RlAtom {
    Pop(StateId),
    Reg(RegId, SymId),
}

pub type RoundlessConstraint = Formula<RlAtom>;

pub fn eval_roundless(c: &AbstractConfig, phi: &RoundlessConstraint) -> bool {
    phi.eval(&mut |a| match *a {
        RlAtom::Pop(q) => c.is_populated(q, 0),
        RlAtom::Reg(j, s) => c.reg(0, j) == s,
    })
}

/// `pop(q) ∧ ⋀_{q' ≠ q} ¬pop(q')`.
pub fn target_constraint(p: &Protocol, q: StateId) -> RoundlessConstraint {
    let mut lits = vec![Formula::Atom(RlAtom::Pop(q))];
    for other in 0..p.num_states() {
        if other != q {
            lits.push(Formula::not(Formula::Atom(RlAtom::Pop(other))));
        }
    }
    Formula::And(lits)
}

pub fn cover_constraint(q: StateId) -> RoundlessConstraint {
    Formula::Atom(RlAtom::Pop(q))
}

/// Literal view of one DNF clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseDecomposition {
    pub q_plus: BTreeSet<StateId>,
    pub q_minus: BTreeSet<StateId>,
    /// Allowed final symbols, one set per register.
    pub d_ok: Vec<BTreeSet<SymId>>,
    pub satisfiable: bool,
}

impl ClauseDecomposition {
    pub fn holds(&self, c: &AbstractConfig, registers: usize) -> bool {
        let s = c.states();
        self.q_plus.is_subset(&s)
            && self.q_minus.is_disjoint(&s)
            && (0..registers).all(|j| self.d_ok[j].contains(&c.reg(0, j)))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("constraint is not in disjunctive normal form")]
    NotDnf,
    #[error("disjunctive normal form exceeds {0} clauses")]
    TooLarge(usize),
    #[error("position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("register {0} out of range")]
    RegisterOutOfRange(i64),
    #[error("constant {0} exceeds the limit {1}")]
    ConstantTooLarge(u32, u32),
    #[error("nested quantifiers are not allowed")]
    NestedQuantifier,
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("too many atoms to decompose ({0})")]
    TooManyAtoms(usize),
}

fn literal_of(f: &RoundlessConstraint) -> Option<(RlAtom, bool)> {
    match f {
        Formula::Atom(a) => Some((*a, true)),
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(a) => Some((*a, false)),
            _ => None,
        },
        _ => None,
    }
}

fn clause_literals(f: &RoundlessConstraint) -> Option<Vec<(RlAtom, bool)>> {
    match f {
        Formula::True => Some(vec![]),
        Formula::And(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match g {
                    Formula::And(_) | Formula::True => out.extend(clause_literals(g)?),
                    _ => out.push(literal_of(g)?),
                }
            }
            Some(out)
        }
        _ => literal_of(f).map(|l| vec![l]),
    }
}

fn dnf_clause_list(f: &RoundlessConstraint) -> Option<Vec<Vec<(RlAtom, bool)>>> {
    match f {
        Formula::False => Some(vec![]),
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match g {
                    Formula::Or(_) | Formula::False => out.extend(dnf_clause_list(g)?),
                    _ => out.push(clause_literals(g)?),
                }
            }
            Some(out)
        }
        _ => clause_literals(f).map(|c| vec![c]),
    }
}

/// One decomposition per clause of a DNF constraint.
pub fn dnf_clauses(p: &Protocol, phi: &RoundlessConstraint) -> Result<Vec<ClauseDecomposition>, ConstraintError> {
    let clauses = dnf_clause_list(phi).ok_or(ConstraintError::NotDnf)?;
    Ok(clauses.iter().map(|lits| decompose_clause(p, lits)).collect())
}

fn decompose_clause(p: &Protocol, lits: &[(RlAtom, bool)]) -> ClauseDecomposition {
    let mut q_plus = BTreeSet::new();
    let mut q_minus = BTreeSet::new();
    for &(a, pos) in lits {
        if let RlAtom::Pop(q) = a {
            if pos {
                q_plus.insert(q);
            } else {
                q_minus.insert(q);
            }
        }
    }
    let mut d_ok = Vec::new();
    for j in 0..p.registers {
        let ok: BTreeSet<SymId> = (0..p.num_symbols())
            .filter(|&a| {
                !lits.contains(&(RlAtom::Reg(j, a), false))
                    && !lits.iter().any(|&(l, pos)| pos && matches!(l, RlAtom::Reg(jj, b) if jj == j && b != a))
            })
            .collect();
        d_ok.push(ok);
    }
    let satisfiable = q_plus.is_disjoint(&q_minus) && d_ok.iter().all(|s| !s.is_empty());
    ClauseDecomposition { q_plus, q_minus, d_ok, satisfiable }
}

fn nnf<A: Clone>(f: &Formula<A>, positive: bool) -> Formula<A> {
    match (f, positive) {
        (Formula::True, true) | (Formula::False, false) => Formula::True,
        (Formula::True, false) | (Formula::False, true) => Formula::False,
        (Formula::Atom(a), true) => Formula::Atom(a.clone()),
        (Formula::Atom(a), false) => Formula::not(Formula::Atom(a.clone())),
        (Formula::Not(g), _) => nnf(g, !positive),
        (Formula::And(fs), true) | (Formula::Or(fs), false) => Formula::And(fs.iter().map(|g| nnf(g, positive)).collect()),
        (Formula::Or(fs), true) | (Formula::And(fs), false) => Formula::Or(fs.iter().map(|g| nnf(g, positive)).collect()),
    }
}

/// Converts to DNF by distribution, failing beyond `limit` clauses.
pub fn distribute<A: Clone + PartialEq>(f: &Formula<A>, limit: usize) -> Result<Formula<A>, ConstraintError> {
    fn go<A: Clone + PartialEq>(f: &Formula<A>, limit: usize) -> Result<Vec<Vec<Formula<A>>>, ConstraintError> {
        match f {
            Formula::True => Ok(vec![vec![]]),
            Formula::False => Ok(vec![]),
            Formula::Atom(_) | Formula::Not(_) => Ok(vec![vec![f.clone()]]),
            Formula::Or(fs) => {
                let mut out = Vec::new();
                for g in fs {
                    out.extend(go(g, limit)?);
                    if out.len() > limit {
                        return Err(ConstraintError::TooLarge(limit));
                    }
                }
                Ok(out)
            }
            Formula::And(fs) => {
                let mut acc: Vec<Vec<Formula<A>>> = vec![vec![]];
                for g in fs {
                    let part = go(g, limit)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &part {
                            let mut c = a.clone();
                            for l in b {
                                if !c.contains(l) {
                                    c.push(l.clone());
                                }
                            }
                            next.push(c);
                            if next.len() > limit {
                                return Err(ConstraintError::TooLarge(limit));
                            }
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
        }
    }
    let clauses = go(&nnf(f, true), limit)?;
    Ok(Formula::Or(clauses.into_iter().map(Formula::And).collect()))
}

// ---------------------------------------------------------------------------
// Round-based constraints

/// A round term: a constant `m` or `k + m` for the bound variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(u32),
    Var(u32),
}

impl Term {
    pub fn at(&self, k: u32) -> u32 {
        match *self {
            Term::Const(m) => m,
            Term::Var(m) => k + m,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn constant(&self) -> u32 {
        match *self {
            Term::Const(m) | Term::Var(m) => m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RbAtom {
    Pop(StateId, Term),
    Reg(RegId, Term, SymId),
}

impl RbAtom {
    pub fn term(&self) -> Term {
        match *self {
            RbAtom::Pop(_, t) | RbAtom::Reg(_, t, _) => t,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.term().is_closed()
    }

    pub fn ground(&self, k: u32) -> GroundAtom {
        match *self {
            RbAtom::Pop(q, t) => GroundAtom::Pop(q, t.at(k)),
            RbAtom::Reg(j, t, a) => GroundAtom::Reg(j, t.at(k), a),
        }
    }
}

/// An atom whose round is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundAtom {
    Pop(StateId, u32),
    Reg(RegId, u32, SymId),
}

impl GroundAtom {
    pub fn round(&self) -> u32 {
        match *self {
            GroundAtom::Pop(_, k) | GroundAtom::Reg(_, k, _) => k,
        }
    }

    pub fn holds(&self, c: &AbstractConfig) -> bool {
        match *self {
            GroundAtom::Pop(q, k) => c.is_populated(q, k),
            GroundAtom::Reg(j, k, a) => c.reg(k, j) == a,
        }
    }

    /// Value on a round that nothing ever touched.
    pub fn on_empty(&self) -> bool {
        match *self {
            GroundAtom::Pop(..) => false,
            GroundAtom::Reg(_, _, a) => a == D0,
        }
    }

    pub fn shifted_down(&self, by: u32) -> GroundAtom {
        match *self {
            GroundAtom::Pop(q, k) => GroundAtom::Pop(q, k - by),
            GroundAtom::Reg(j, k, a) => GroundAtom::Reg(j, k - by, a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl Literal {
    pub fn holds(&self, c: &AbstractConfig) -> bool {
        self.atom.holds(c) == self.positive
    }

    pub fn on_empty(&self) -> bool {
        self.atom.on_empty() == self.positive
    }
}

/// True iff the literal set cannot hold in any configuration.
pub fn literals_contradict(lits: &[Literal]) -> bool {
    for (i, a) in lits.iter().enumerate() {
        for b in &lits[i + 1..] {
            if a.atom == b.atom && a.positive != b.positive {
                return true;
            }
            if let (GroundAtom::Reg(j1, k1, s1), GroundAtom::Reg(j2, k2, s2)) = (a.atom, b.atom) {
                if j1 == j2 && k1 == k2 && s1 != s2 && a.positive && b.positive {
                    return true;
                }
            }
        }
    }
    false
}

pub type Prop = Formula<RbAtom>;

/// An atomic presence constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Apc {
    Closed(Prop),
    Exists(Prop),
    Forall(Prop),
}

impl Apc {
    pub fn negate(&self) -> Apc {
        match self {
            Apc::Closed(f) => Apc::Closed(Formula::not(f.clone())),
            Apc::Exists(f) => Apc::Forall(Formula::not(f.clone())),
            Apc::Forall(f) => Apc::Exists(Formula::not(f.clone())),
        }
    }

    pub fn prop(&self) -> &Prop {
        match self {
            Apc::Closed(f) | Apc::Exists(f) | Apc::Forall(f) => f,
        }
    }
}

pub type RoundConstraint = Formula<Apc>;

pub fn eval_prop(c: &AbstractConfig, f: &Prop, k: u32) -> bool {
    f.eval(&mut |a| a.ground(k).holds(c))
}

/// Evaluates `f` on rounds nobody touched: `pop` is false, `reg` holds `d0`.
pub fn eval_prop_on_empty(f: &Prop) -> bool {
    f.eval(&mut |a| a.ground(0).on_empty())
}

/// Evaluates a round-based constraint.
///
/// `active_bound` must be at least the largest round carrying a process or a
/// non-`d0` register. Quantifiers are checked on rounds `0..=active_bound+1`;
/// every later round sees only empty rounds through `k+m` terms and so
/// behaves like `active_bound+1`.
pub fn eval_roundbased(c: &AbstractConfig, psi: &RoundConstraint, active_bound: u32) -> bool {
    psi.eval(&mut |apc| match apc {
        Apc::Closed(f) => eval_prop(c, f, 0),
        Apc::Exists(f) => (0..=active_bound + 1).any(|k| eval_prop(c, f, k)),
        Apc::Forall(f) => (0..=active_bound + 1).all(|k| eval_prop(c, f, k)),
    })
}

/// Largest integer constant appearing in a term of `psi`.
pub fn max_constant(psi: &RoundConstraint) -> u32 {
    let mut m = 0;
    for apc in psi.atoms() {
        for a in apc.prop().atoms() {
            m = m.max(a.term().constant());
        }
    }
    m
}

/// One way of making ψ true, split the way the round-based search consumes it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApcCandidate {
    /// Signed APCs (index into the distinct APC list) forced by this candidate.
    pub assignment: Vec<(usize, bool)>,
    /// Closed literals with their absolute rounds.
    pub closed: Vec<Literal>,
    /// Existential propositions, closed atoms already resolved.
    pub exists: Vec<Prop>,
    /// Universal propositions, closed atoms already resolved.
    pub forall: Vec<Prop>,
}

/// The distinct APCs of ψ and every candidate obligation set.
///
/// Candidates come from inclusion-minimal signed APC assignments forcing ψ,
/// smallest first. Negated quantifiers are dualized, and every closed atom in
/// a chosen APC is guessed true or false and moved into `closed`.
pub fn decompose_apcs(psi: &RoundConstraint) -> Result<(Vec<Apc>, Vec<ApcCandidate>), ConstraintError> {
    let apcs = psi.atoms();
    let assignments = minimal_assignments(psi, 12).ok_or(ConstraintError::TooManyAtoms(apcs.len()))?;
    let mut out = Vec::new();
    for asg in assignments {
        let signed: Vec<(usize, bool)> =
            asg.iter().map(|(a, b)| (apcs.iter().position(|x| x == a).unwrap(), *b)).collect();
        let chosen: Vec<Apc> = asg.iter().map(|(a, b)| if *b { a.clone() } else { a.negate() }).collect();
        let mut closed_atoms: Vec<RbAtom> = Vec::new();
        for apc in &chosen {
            for a in apc.prop().atoms() {
                if a.is_closed() && !closed_atoms.contains(&a) {
                    closed_atoms.push(a);
                }
            }
        }
        if closed_atoms.len() > 16 {
            return Err(ConstraintError::TooManyAtoms(closed_atoms.len()));
        }
        'guess: for mask in 0u32..(1u32 << closed_atoms.len()) {
            let value = |a: &RbAtom| -> Option<bool> {
                closed_atoms.iter().position(|x| x == a).map(|i| mask >> i & 1 == 0)
            };
            let mut exists = Vec::new();
            let mut forall = Vec::new();
            for apc in &chosen {
                let resolved = apc
                    .prop()
                    .map(&mut |a| match value(a) {
                        Some(true) => Formula::True,
                        Some(false) => Formula::False,
                        None => Formula::Atom(*a),
                    })
                    .simplify();
                match (apc, resolved) {
                    (_, Formula::True) => {}
                    (_, Formula::False) => continue 'guess,
                    (Apc::Closed(_), _) => unreachable!("closed propositions resolve fully"),
                    (Apc::Exists(_), f) => exists.push(f),
                    (Apc::Forall(_), f) => forall.push(f),
                }
            }
            let closed: Vec<Literal> = closed_atoms
                .iter()
                .enumerate()
                .map(|(i, a)| Literal { atom: a.ground(0), positive: mask >> i & 1 == 0 })
                .collect();
            if literals_contradict(&closed) {
                continue;
            }
            exists.sort();
            exists.dedup();
            forall.sort();
            forall.dedup();
            let cand = ApcCandidate { assignment: signed.clone(), closed, exists, forall };
            if !out.contains(&cand) {
                out.push(cand);
            }
        }
    }
    Ok((apcs, out))
}

// ---------------------------------------------------------------------------
// Parsing and printing

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Sym(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Sym(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn syntax(pos: usize, msg: impl Into<String>) -> ConstraintError {
    ConstraintError::Syntax { pos, msg: msg.into() }
}

fn parse_sexp(text: &str) -> Result<Sexp, ConstraintError> {
    let cleaned: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n");
    let chars: Vec<(usize, char)> = cleaned.char_indices().collect();
    let mut i = 0;
    let e = read_sexp(&chars, &mut i)?;
    while i < chars.len() && chars[i].1.is_whitespace() {
        i += 1;
    }
    if i < chars.len() {
        return Err(syntax(chars[i].0, "trailing input"));
    }
    Ok(e)
}

fn read_sexp(chars: &[(usize, char)], i: &mut usize) -> Result<Sexp, ConstraintError> {
    while *i < chars.len() && chars[*i].1.is_whitespace() {
        *i += 1;
    }
    if *i >= chars.len() {
        return Err(syntax(chars.last().map(|c| c.0 + 1).unwrap_or(0), "unexpected end of input"));
    }
    let (pos, c) = chars[*i];
    if c == '(' {
        *i += 1;
        let mut items = Vec::new();
        loop {
            while *i < chars.len() && chars[*i].1.is_whitespace() {
                *i += 1;
            }
            if *i >= chars.len() {
                return Err(syntax(pos, "unclosed parenthesis"));
            }
            if chars[*i].1 == ')' {
                *i += 1;
                return Ok(Sexp::List(items, pos));
            }
            items.push(read_sexp(chars, i)?);
        }
    } else if c == ')' {
        Err(syntax(pos, "unexpected `)`"))
    } else {
        let start = *i;
        while *i < chars.len() && (is_ident_char(chars[*i].1) || matches!(chars[*i].1, '+' | '-')) {
            *i += 1;
        }
        if start == *i {
            return Err(syntax(pos, format!("unexpected character `{c}`")));
        }
        Ok(Sexp::Sym(chars[start..*i].iter().map(|x| x.1).collect(), pos))
    }
}

fn head(items: &[Sexp]) -> Option<&str> {
    match items.first() {
        Some(Sexp::Sym(s, _)) => Some(s.as_str()),
        _ => None,
    }
}

fn sym<'a>(e: &'a Sexp, what: &str) -> Result<&'a str, ConstraintError> {
    match e {
        Sexp::Sym(s, _) => Ok(s),
        Sexp::List(_, p) => Err(syntax(*p, format!("expected {what}"))),
    }
}

fn arity(items: &[Sexp], n: usize, pos: usize) -> Result<(), ConstraintError> {
    if items.len() != n + 1 {
        return Err(syntax(pos, format!("`{}` takes {} argument(s)", head(items).unwrap_or("?"), n)));
    }
    Ok(())
}

fn state_of(p: &Protocol, e: &Sexp) -> Result<StateId, ConstraintError> {
    let s = sym(e, "a state")?;
    p.state_id(s).ok_or_else(|| ConstraintError::UnknownState(s.into()))
}

fn symbol_of(p: &Protocol, e: &Sexp) -> Result<SymId, ConstraintError> {
    let s = sym(e, "a symbol")?;
    p.symbol_id(s).ok_or_else(|| ConstraintError::UnknownSymbol(s.into()))
}

fn register_of(p: &Protocol, e: &Sexp) -> Result<RegId, ConstraintError> {
    let s = sym(e, "a register index")?;
    let j: i64 = s.parse().map_err(|_| syntax(e.pos(), "expected a register index"))?;
    if j < 1 || j as usize > p.registers {
        return Err(ConstraintError::RegisterOutOfRange(j));
    }
    Ok(j as usize - 1)
}

fn connective<A>(
    items: &[Sexp],
    pos: usize,
    sub: &mut dyn FnMut(&Sexp) -> Result<Formula<A>, ConstraintError>,
) -> Result<Option<Formula<A>>, ConstraintError> {
    match head(items) {
        Some("not") => {
            arity(items, 1, pos)?;
            Ok(Some(Formula::not(sub(&items[1])?)))
        }
        Some("and") => Ok(Some(Formula::And(items[1..].iter().map(&mut *sub).collect::<Result<_, _>>()?))),
        Some("or") => Ok(Some(Formula::Or(items[1..].iter().map(&mut *sub).collect::<Result<_, _>>()?))),
        _ => Ok(None),
    }
}

fn bool_const<A>(e: &Sexp) -> Option<Formula<A>> {
    match e {
        Sexp::Sym(s, _) if s == "true" => Some(Formula::True),
        Sexp::Sym(s, _) if s == "false" => Some(Formula::False),
        _ => None,
    }
}

pub fn parse_roundless(p: &Protocol, text: &str) -> Result<RoundlessConstraint, ConstraintError> {
    fn go(p: &Protocol, e: &Sexp) -> Result<RoundlessConstraint, ConstraintError> {
        if let Some(f) = bool_const(e) {
            return Ok(f);
        }
        let (items, pos) = match e {
            Sexp::List(items, pos) => (items, *pos),
            Sexp::Sym(s, pos) => return Err(syntax(*pos, format!("unexpected `{s}`"))),
        };
        if let Some(f) = connective(items, pos, &mut |x| go(p, x))? {
            return Ok(f);
        }
        match head(items) {
            Some("pop") => {
                arity(items, 1, pos)?;
                Ok(Formula::Atom(RlAtom::Pop(state_of(p, &items[1])?)))
            }
            Some("reg") => {
                arity(items, 2, pos)?;
                Ok(Formula::Atom(RlAtom::Reg(register_of(p, &items[1])?, symbol_of(p, &items[2])?)))
            }
            _ => Err(syntax(pos, "expected pop, reg, and, or, not")),
        }
    }
    go(p, &parse_sexp(text)?)
}

pub fn parse_roundbased(p: &Protocol, text: &str) -> Result<RoundConstraint, ConstraintError> {
    parse_roundbased_with_limit(p, text, DEFAULT_CONSTANT_LIMIT)
}

pub fn parse_roundbased_with_limit(p: &Protocol, text: &str, limit: u32) -> Result<RoundConstraint, ConstraintError> {
    let e = parse_sexp(text)?;
    let ctx = RbCtx { p, limit };
    ctx.top(&e)
}

struct RbCtx<'a> {
    p: &'a Protocol,
    limit: u32,
}

impl RbCtx<'_> {
    fn top(&self, e: &Sexp) -> Result<RoundConstraint, ConstraintError> {
        if let Some(f) = bool_const(e) {
            return Ok(f);
        }
        let (items, pos) = match e {
            Sexp::List(items, pos) => (items, *pos),
            Sexp::Sym(s, pos) => return Err(syntax(*pos, format!("unexpected `{s}`"))),
        };
        if let Some(f) = connective(items, pos, &mut |x| self.top(x))? {
            return Ok(f);
        }
        match head(items) {
            Some(q @ ("exists" | "forall")) => {
                arity(items, 2, pos)?;
                let var = sym(&items[1], "a variable")?.to_string();
                let body = self.prop(&items[2], Some(&var))?;
                Ok(Formula::Atom(if q == "exists" { Apc::Exists(body) } else { Apc::Forall(body) }))
            }
            Some("pop") | Some("reg") => Ok(Formula::Atom(Apc::Closed(self.prop(e, None)?))),
            _ => Err(syntax(pos, "expected pop, reg, exists, forall, and, or, not")),
        }
    }

    fn prop(&self, e: &Sexp, var: Option<&str>) -> Result<Prop, ConstraintError> {
        if let Some(f) = bool_const(e) {
            return Ok(f);
        }
        let (items, pos) = match e {
            Sexp::List(items, pos) => (items, *pos),
            Sexp::Sym(s, pos) => return Err(syntax(*pos, format!("unexpected `{s}`"))),
        };
        if let Some(f) = connective(items, pos, &mut |x| self.prop(x, var))? {
            return Ok(f);
        }
        match head(items) {
            Some("pop") => {
                arity(items, 2, pos)?;
                Ok(Formula::Atom(RbAtom::Pop(state_of(self.p, &items[1])?, self.term(&items[2], var)?)))
            }
            Some("reg") => {
                arity(items, 3, pos)?;
                Ok(Formula::Atom(RbAtom::Reg(
                    register_of(self.p, &items[1])?,
                    self.term(&items[2], var)?,
                    symbol_of(self.p, &items[3])?,
                )))
            }
            Some("exists") | Some("forall") => Err(ConstraintError::NestedQuantifier),
            _ => Err(syntax(pos, "expected pop, reg, and, or, not")),
        }
    }

    fn constant(&self, e: &Sexp) -> Result<u32, ConstraintError> {
        let s = sym(e, "a constant")?;
        let m: u32 = s.parse().map_err(|_| syntax(e.pos(), format!("expected a natural number, found `{s}`")))?;
        if m > self.limit {
            return Err(ConstraintError::ConstantTooLarge(m, self.limit));
        }
        Ok(m)
    }

    fn term(&self, e: &Sexp, var: Option<&str>) -> Result<Term, ConstraintError> {
        match e {
            Sexp::Sym(s, _) if s.chars().next().is_some_and(|c| c.is_ascii_digit()) => Ok(Term::Const(self.constant(e)?)),
            Sexp::Sym(s, pos) => {
                if Some(s.as_str()) == var {
                    Ok(Term::Var(0))
                } else if s.starts_with('-') {
                    Err(syntax(*pos, "negative rounds are not allowed"))
                } else {
                    Err(ConstraintError::UnboundVariable(s.clone()))
                }
            }
            Sexp::List(items, pos) => {
                if head(items) != Some("+") || items.len() != 3 {
                    return Err(syntax(*pos, "a term is `m`, `k` or `(+ k m)`"));
                }
                let (v, c) = match (&items[1], &items[2]) {
                    (Sexp::Sym(a, _), c) if Some(a.as_str()) == var => (a, c),
                    (c, Sexp::Sym(a, _)) if Some(a.as_str()) == var => (a, c),
                    _ => return Err(syntax(*pos, "a term is `m`, `k` or `(+ k m)`")),
                };
                let _ = v;
                Ok(Term::Var(self.constant(c)?))
            }
        }
    }
}

fn write_formula<A>(
    f: &Formula<A>,
    out: &mut String,
    atom: &dyn Fn(&A, &mut String),
) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => atom(a, out),
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(g, out, atom);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in gs {
                out.push(' ');
                write_formula(g, out, atom);
            }
            out.push(')');
        }
    }
}

pub fn roundless_to_text(p: &Protocol, f: &RoundlessConstraint) -> String {
    let mut s = String::new();
    write_formula(f, &mut s, &|a, out| match *a {
        RlAtom::Pop(q) => out.push_str(&format!("(pop {})", p.states[q])),
        RlAtom::Reg(j, a) => out.push_str(&format!("(reg {} {})", j + 1, p.alphabet[a])),
    });
    s
}

fn term_text(t: Term) -> String {
    match t {
        Term::Const(m) => m.to_string(),
        Term::Var(0) => "k".into(),
        Term::Var(m) => format!("(+ k {m})"),
    }
}

pub fn prop_to_text(p: &Protocol, f: &Prop) -> String {
    let mut s = String::new();
    write_formula(f, &mut s, &|a, out| match *a {
        RbAtom::Pop(q, t) => out.push_str(&format!("(pop {} {})", p.states[q], term_text(t))),
        RbAtom::Reg(j, t, a) => out.push_str(&format!("(reg {} {} {})", j + 1, term_text(t), p.alphabet[a])),
    });
    s
}

pub fn roundbased_to_text(p: &Protocol, f: &RoundConstraint) -> String {
    let mut s = String::new();
    write_formula(f, &mut s, &|a, out| match a {
        Apc::Closed(g) => out.push_str(&prop_to_text(p, g)),
        Apc::Exists(g) => out.push_str(&format!("(exists k {})", prop_to_text(p, g))),
        Apc::Forall(g) => out.push_str(&format!("(forall k {})", prop_to_text(p, g))),
    });
    s
}

pub fn literal_to_text(p: &Protocol, l: &Literal) -> String {
    let a = match l.atom {
        GroundAtom::Pop(q, k) => format!("(pop {} {})", p.states[q], k),
        GroundAtom::Reg(j, k, a) => format!("(reg {} {} {})", j + 1, k, p.alphabet[a]),
    };
    if l.positive {
        a
    } else {
        format!("(not {a})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_text(*self))
    }
}
