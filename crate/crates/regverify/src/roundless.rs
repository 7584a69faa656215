//! Decision procedures for roundless protocols.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::constraints::{dnf_clauses, ClauseDecomposition, ConstraintError, RlAtom, RoundlessConstraint};
use crate::packed::{Key, Packer};
use crate::protocol::{is_uninitialized, Action, Flavor, Protocol, RegId, StateId, SymId, Transition, D0};
use crate::semantics::{all_initial_configurations, Execution, Move};
use crate::verdict::{Answer, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("protocol reads the initial symbol")]
    NotUninitialized,
    #[error("algorithm needs exactly one register, protocol has {0}")]
    WrongRegisterCount(usize),
    #[error("algorithm needs a roundless protocol")]
    NotRoundless,
    #[error("configuration space does not fit the packed representation")]
    TooLarge,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

fn require_roundless(p: &Protocol) -> Result<(), SolveError> {
    if p.flavor != Flavor::Roundless {
        return Err(SolveError::NotRoundless);
    }
    Ok(())
}

fn eval_packed(pk: &Packer, key: Key, phi: &RoundlessConstraint) -> bool {
    phi.eval(&mut |a| match *a {
        RlAtom::Pop(q) => key.0 & pk.loc_bit(q, 0) != 0,
        RlAtom::Reg(j, s) => pk.reg(key.1, 0, j) == s,
    })
}

struct Dfs<'a> {
    p: &'a Protocol,
    pk: Packer,
    phi: &'a RoundlessConstraint,
    visited: FxHashMap<Key, u32>,
    path: Vec<Move>,
    cut: bool,
    nodes: u64,
}

impl Dfs<'_> {
    fn run(&mut self, key: Key, rem: u32) -> bool {
        self.nodes += 1;
        if eval_packed(&self.pk, key, self.phi) {
            return true;
        }
        let mut succ = Vec::new();
        self.pk.successors(&self.p.transitions, key, &mut succ);
        if rem == 0 {
            if succ.iter().any(|(_, k)| !self.visited.contains_key(k)) {
                self.cut = true;
            }
            return false;
        }
        for (m, next) in succ {
            if self.visited.get(&next).is_some_and(|&r| r >= rem - 1) {
                continue;
            }
            self.visited.insert(next, rem - 1);
            self.path.push(m);
            if self.run(next, rem - 1) {
                return true;
            }
            self.path.pop();
        }
        false
    }
}

/// Decides PRP by iterative deepening over abstract executions of length at
/// most `4|Q|`. Positive verdicts carry a shortest witness.
pub fn solve_prp_bounded(p: &Protocol, phi: &RoundlessConstraint) -> Result<Verdict, SolveError> {
    require_roundless(p)?;
    let pk = Packer::new(p, 1).ok_or(SolveError::TooLarge)?;
    let bound = 4 * p.num_states() as u32;
    let inits: Vec<_> = all_initial_configurations(p).into_iter().map(|c| (pk.pack(&c).unwrap(), c)).collect();
    let mut dfs = Dfs { p, pk, phi, visited: FxHashMap::default(), path: Vec::new(), cut: false, nodes: 0 };
    for depth in 0..=bound {
        dfs.visited.clear();
        dfs.cut = false;
        for (key, c) in &inits {
            if dfs.visited.get(key).is_some_and(|&r| r >= depth) {
                continue;
            }
            dfs.visited.insert(*key, depth);
            if dfs.run(*key, depth) {
                let w = Execution { start: c.clone(), steps: std::mem::take(&mut dfs.path) };
                return Ok(Verdict::new(Answer::Positive, "bounded").with_nodes(dfs.nodes).with_witness(w));
            }
        }
        if !dfs.cut {
            break;
        }
    }
    Ok(Verdict::new(Answer::Negative, "bounded").with_nodes(dfs.nodes))
}

fn mask_of(set: &[bool]) -> BTreeSet<StateId> {
    set.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Coverable states of an uninitialized protocol, by saturation.
pub fn uninitialized_coverable(p: &Protocol) -> Result<BTreeSet<StateId>, SolveError> {
    require_roundless(p)?;
    if !is_uninitialized(p) {
        return Err(SolveError::NotUninitialized);
    }
    let mut s = vec![false; p.num_states()];
    for &q in &p.initial {
        s[q] = true;
    }
    loop {
        let mut changed = false;
        for t in &p.transitions {
            if !s[t.source] || s[t.dest] {
                continue;
            }
            let ok = match t.action {
                Action::Write { .. } => true,
                Action::Read { reg, sym, .. } => p.transitions.iter().any(|w| {
                    w.action == Action::Write { reg, sym } && s[w.source] && s[w.dest]
                }),
                Action::Inc => false,
            };
            if ok {
                s[t.dest] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(mask_of(&s))
}

/// COVER for uninitialized protocols, by saturation.
pub fn solve_cover_uninitialized(p: &Protocol, target: StateId) -> Result<Verdict, SolveError> {
    let s = uninitialized_coverable(p)?;
    Ok(Verdict::new(Answer::from_bool(s.contains(&target)), "saturation").with_nodes(s.len() as u64))
}

/// Saturates `s` under one phase given the registers already first-written.
fn saturate_phase(p: &Protocol, s: &mut [bool], written: &[RegId]) {
    loop {
        let mut changed = false;
        for t in &p.transitions {
            if !s[t.source] || s[t.dest] {
                continue;
            }
            let ok = match t.action {
                Action::Read { reg, sym, .. } if sym == D0 => !written.contains(&reg),
                Action::Write { reg, .. } => written.contains(&reg),
                Action::Read { reg, sym, .. } => {
                    written.contains(&reg)
                        && p.transitions.iter().any(|w| w.action == Action::Write { reg, sym } && s[w.source])
                }
                Action::Inc => false,
            };
            if ok {
                s[t.dest] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

struct FixedR<'a> {
    p: &'a Protocol,
    target: StateId,
    orders: u64,
    winning: Option<Vec<RegId>>,
}

impl FixedR<'_> {
    fn search(&mut self, order: &mut Vec<RegId>, s: &[bool]) -> bool {
        self.orders += 1;
        if s[self.target] {
            self.winning = Some(order.clone());
            return true;
        }
        for x in 0..self.p.registers {
            if order.contains(&x) {
                continue;
            }
            let writable = self
                .p
                .transitions
                .iter()
                .any(|t| matches!(t.action, Action::Write { reg, .. } if reg == x) && s[t.source]);
            if !writable {
                continue;
            }
            order.push(x);
            let mut next = s.to_vec();
            saturate_phase(self.p, &mut next, order);
            if self.search(order, &next) {
                return true;
            }
            order.pop();
        }
        false
    }
}

/// COVER by enumerating first-write orders, one saturation phase per newly
/// written register. Cost grows like `r!`.
pub fn solve_cover_fixed_r(p: &Protocol, target: StateId) -> Result<Verdict, SolveError> {
    Ok(cover_fixed_r_order(p, target)?.0)
}

/// Like [`solve_cover_fixed_r`], also returning the successful first-write order.
pub fn cover_fixed_r_order(p: &Protocol, target: StateId) -> Result<(Verdict, Option<Vec<RegId>>), SolveError> {
    require_roundless(p)?;
    let mut s = vec![false; p.num_states()];
    for &q in &p.initial {
        s[q] = true;
    }
    saturate_phase(p, &mut s, &[]);
    let mut fr = FixedR { p, target, orders: 0, winning: None };
    let found = fr.search(&mut Vec::new(), &s);
    Ok((Verdict::new(Answer::from_bool(found), "fixed-r").with_nodes(fr.orders), fr.winning))
}

fn fresh_symbol(p: &Protocol, base: &str) -> String {
    let mut name = base.to_string();
    while p.symbol_id(&name).is_some() {
        name.push('\'');
    }
    name
}

/// Adds a joker symbol that only `error` writes and every state reads to
/// jump to `error`, so that covering `error` is the same as synchronizing on it.
pub fn reduce_cover_to_target(p: &Protocol, error: StateId) -> (Protocol, StateId) {
    let mut out = p.clone();
    let joker = out.add_symbol(&fresh_symbol(p, "joker"));
    out.add_transition(Transition { source: error, action: Action::Write { reg: 0, sym: joker }, dest: error });
    for q in 0..out.num_states() {
        out.add_transition(Transition { source: q, action: Action::Read { depth: 0, reg: 0, sym: joker }, dest: error });
    }
    (out, error)
}

/// Makes a one-register protocol uninitialized: initial states become
/// everything reachable through `read(d0)` edges, which are then dropped.
pub fn reduce_initialized_to_uninit_r1(p: &Protocol) -> Result<Protocol, SolveError> {
    require_roundless(p)?;
    if p.registers != 1 {
        return Err(SolveError::WrongRegisterCount(p.registers));
    }
    let is_d0_read = |t: &Transition| matches!(t.action, Action::Read { sym, .. } if sym == D0);
    let mut reach = vec![false; p.num_states()];
    let mut stack: Vec<StateId> = p.initial.clone();
    for &q in &stack {
        reach[q] = true;
    }
    while let Some(q) = stack.pop() {
        for t in p.transitions.iter().filter(|t| t.source == q && is_d0_read(t)) {
            if !reach[t.dest] {
                reach[t.dest] = true;
                stack.push(t.dest);
            }
        }
    }
    let mut out = p.clone();
    out.transitions.retain(|t| !is_d0_read(t));
    out.set_initial(mask_of(&reach).into_iter().collect());
    Ok(out)
}

fn require_one_reg_uninit(p: &Protocol) -> Result<(), SolveError> {
    require_roundless(p)?;
    if p.registers != 1 {
        return Err(SolveError::WrongRegisterCount(p.registers));
    }
    if !is_uninitialized(p) {
        return Err(SolveError::NotUninitialized);
    }
    Ok(())
}

/// The largest set of states covered together by one execution.
pub fn compute_cov_set(p: &Protocol) -> Result<BTreeSet<StateId>, SolveError> {
    require_one_reg_uninit(p)?;
    cov_set(p, &vec![true; p.num_states()]).map(|s| mask_of(&s))
}

fn cov_set(p: &Protocol, alive: &[bool]) -> Result<Vec<bool>, SolveError> {
    let mut s = vec![false; p.num_states()];
    for &q in &p.initial {
        if alive[q] {
            s[q] = true;
        }
    }
    let live = |t: &&Transition| alive[t.source] && alive[t.dest];
    loop {
        let mut changed = false;
        for t in p.transitions.iter().filter(live) {
            if !s[t.source] || s[t.dest] {
                continue;
            }
            let ok = match t.action {
                Action::Write { .. } => true,
                Action::Read { sym, .. } => p
                    .transitions
                    .iter()
                    .filter(live)
                    .any(|w| matches!(w.action, Action::Write { sym: b, .. } if b == sym) && s[w.source] && s[w.dest]),
                Action::Inc => false,
            };
            if ok {
                s[t.dest] = true;
                changed = true;
            }
        }
        if !changed {
            return Ok(s);
        }
    }
}

/// Backward step: for each symbol, close under reads of it, then keep the
/// closure only if some write of that symbol lands in it, adding every such writer.
fn previous_symbol(p: &Protocol, alive: &[bool], s: &[bool], symbols: &[SymId]) -> Option<Vec<bool>> {
    let live: Vec<&Transition> = p.transitions.iter().filter(|t| alive[t.source] && alive[t.dest]).collect();
    let mut s = s.to_vec();
    let mut found = false;
    for &a in symbols {
        let mut t = s.clone();
        loop {
            let mut changed = false;
            for tr in &live {
                if matches!(tr.action, Action::Read { sym, .. } if sym == a) && t[tr.dest] && !t[tr.source] {
                    t[tr.source] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let writers: Vec<StateId> = live
            .iter()
            .filter(|tr| matches!(tr.action, Action::Write { sym, .. } if sym == a) && t[tr.dest])
            .map(|tr| tr.source)
            .collect();
        if !writers.is_empty() {
            for q in writers {
                t[q] = true;
            }
            s = t;
            found = true;
        }
    }
    found.then_some(s)
}

/// The largest set of states from which, whatever the register holds, an
/// execution reaches a configuration satisfying the clause.
pub fn compute_cocov_set(p: &Protocol, clause: &ClauseDecomposition) -> Result<BTreeSet<StateId>, SolveError> {
    require_one_reg_uninit(p)?;
    Ok(mask_of(&cocov_set(p, &vec![true; p.num_states()], clause)))
}

fn cocov_set(p: &Protocol, alive: &[bool], clause: &ClauseDecomposition) -> Vec<bool> {
    let n = p.num_states();
    let start: Vec<bool> = (0..n).map(|q| alive[q] && !clause.q_minus.contains(&q)).collect();
    let d_ok: Vec<SymId> = clause.d_ok[0].iter().copied().collect();
    let Some(mut s) = previous_symbol(p, alive, &start, &d_ok) else {
        return vec![false; n];
    };
    let d_write: Vec<SymId> = (1..p.num_symbols()).collect();
    while let Some(next) = previous_symbol(p, alive, &s, &d_write) {
        if next == s {
            break;
        }
        s = next;
    }
    s
}

/// dnfPRP for one register: per clause, prune states that are not both
/// jointly coverable and co-coverable until stable.
pub fn solve_dnfprp_one_register(p: &Protocol, phi: &RoundlessConstraint) -> Result<Verdict, SolveError> {
    require_roundless(p)?;
    if p.registers != 1 {
        return Err(SolveError::WrongRegisterCount(p.registers));
    }
    let clauses = dnf_clauses(p, phi)?;
    let u = reduce_initialized_to_uninit_r1(p)?;
    let n = u.num_states();
    let mut iterations = 0u64;
    for clause in clauses.iter().filter(|c| c.satisfiable) {
        // An execution with no write never leaves the initial configuration.
        if clause.d_ok[0].contains(&D0) {
            let base: BTreeSet<StateId> = u.initial.iter().copied().filter(|q| !clause.q_minus.contains(q)).collect();
            if !base.is_empty() && clause.q_plus.is_subset(&base) {
                return Ok(Verdict::new(Answer::Positive, "one-reg").with_nodes(iterations));
            }
        }
        let mut alive = vec![true; n];
        loop {
            iterations += 1;
            let cov = cov_set(&u, &alive)?;
            let cocov = cocov_set(&u, &alive, clause);
            let next: Vec<bool> = (0..n).map(|q| alive[q] && cov[q] && cocov[q]).collect();
            if next == alive {
                break;
            }
            alive = next;
        }
        if alive.iter().any(|&b| b) && clause.q_plus.iter().all(|&q| alive[q]) {
            return Ok(Verdict::new(Answer::Positive, "one-reg").with_nodes(iterations));
        }
    }
    Ok(Verdict::new(Answer::Negative, "one-reg").with_nodes(iterations))
}

/// Checks that a witness replays and ends in a configuration satisfying `phi`.
pub fn witness_satisfies(p: &Protocol, w: &Execution<crate::semantics::AbstractConfig>, phi: &RoundlessConstraint) -> bool {
    match crate::semantics::replay_abstract(p, w) {
        Ok(end) => crate::constraints::eval_roundless(&end, phi),
        Err(_) => false,
    }
}
