//! Round-based PRP: a deterministic search over per-round footprints.
//!
//! The search guesses the witness one round at a time. A node at round `k`
//! holds the footprint of the execution on `[k-v+1, k]` together with the
//! obligations still open: existential propositions not yet fired and
//! residual formulas about rounds after `k`. Children come from extending the
//! footprint by one round. Nodes are memoized by a round-relative signature.

use std::collections::hash_map::Entry;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::constraints::{decompose_apcs, eval_roundbased, ConstraintError, Formula, GroundAtom, Prop, RoundConstraint};
use crate::footprint::{combine_footprints, project_footprint, restrict, tau_window, Footprint, Window};
use crate::protocol::{Action, Flavor, Protocol, StateId, D0};
use crate::semantics::{abstract_step, register_of, AbstractConfig, Execution, Loc, Move};
use crate::verdict::{Answer, Verdict};

/// Node budget used when neither the caller nor `REGVERIFY_BUDGET` sets one.
pub const DEFAULT_BUDGET: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundBasedOptions {
    /// Enumeration and search nodes allowed before answering unknown.
    pub budget: u64,
    /// Bound on the steps of one bridge footprint; defaults to `(v+1)|Q|(2v+5)`.
    pub step_cap: Option<usize>,
    /// Search independent root branches on separate threads.
    pub parallel: bool,
}

impl Default for RoundBasedOptions {
    fn default() -> Self {
        RoundBasedOptions { budget: budget_from_env().unwrap_or(DEFAULT_BUDGET), step_cap: None, parallel: false }
    }
}

/// Reads `REGVERIFY_BUDGET`, ignoring malformed values.
pub fn budget_from_env() -> Option<u64> {
    std::env::var("REGVERIFY_BUDGET").ok()?.trim().parse().ok()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoundBasedError {
    #[error("protocol is not round-based")]
    NotRoundBased,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Visibility used for windows: at least 1.
pub fn effective_visibility(p: &Protocol) -> u32 {
    p.visibility.max(1)
}

/// `(v+1)|Q|(2v+5)` with the effective visibility.
pub fn default_step_cap(p: &Protocol) -> usize {
    let v = effective_visibility(p) as usize;
    (v + 1) * p.num_states() * (2 * v + 5)
}

/// Shared node counter; exceeding the limit stops every search using it.
struct Budget {
    used: AtomicU64,
    limit: u64,
    out: AtomicBool,
}

impl Budget {
    fn new(limit: u64) -> Budget {
        Budget { used: AtomicU64::new(0), limit, out: AtomicBool::new(false) }
    }

    fn tick(&self) -> bool {
        let n = self.used.fetch_add(1, Ordering::Relaxed);
        if n >= self.limit {
            self.out.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn exhausted(&self) -> bool {
        self.out.load(Ordering::Relaxed)
    }
}

/// Symbol-indexed count of bare writes allowed per register and round: one
/// for each read that may consume the value, plus one for the final value.
fn bare_write_budget(p: &Protocol) -> Vec<u32> {
    let ns = p.num_symbols();
    let mut out = vec![1u32; p.registers * ns];
    for t in &p.transitions {
        if let Action::Read { reg, sym, .. } = t.action {
            out[reg * ns + sym] += 2;
        }
    }
    out
}

struct Bridges<'a> {
    p: &'a Protocol,
    tau: &'a Footprint,
    k: u32,
    v: u32,
    window: Window,
    step_cap: usize,
    budget: &'a Budget,
    write_budget: Vec<u32>,
    moves: Vec<Move>,
    configs: Vec<AbstractConfig>,
    ever: Vec<bool>,
    deserted: Vec<bool>,
    bare: Vec<u32>,
    counted: usize,
    is_new: Vec<bool>,
    incs: Vec<bool>,
    /// Interned prefixes of what later rounds see, one per config.
    prefix: Vec<(u32, Seen)>,
    interned: FxHashMap<(u32, Seen), u32>,
    /// DFS states already expanded, with the fewest new steps used there.
    done: FxHashMap<BridgeState, usize>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct BridgeState {
    i: usize,
    newest: AbstractConfig,
    ever: Vec<bool>,
    deserted: Vec<bool>,
    bare: Vec<u32>,
    prefix: u32,
}

/// Result of one DFS branch of the bridge enumeration.
enum Flow {
    Continue,
    Stop,
}

impl Bridges<'_> {
    fn emit(&self, out: &mut dyn FnMut(Footprint) -> bool) -> Flow {
        let fp = Footprint { window: self.window, configs: self.configs.clone(), moves: self.moves.clone() };
        if out(fp) {
            Flow::Continue
        } else {
            Flow::Stop
        }
    }

    /// A τ step nothing new can observe and that the next footprint does not keep.
    fn silent(&self, i: usize) -> bool {
        let m = &self.tau.moves[i];
        if m.dest().round == self.k {
            return false;
        }
        let (a, b) = (&self.tau.configs[i], &self.tau.configs[i + 1]);
        let keep_lo = self.k as i64 - self.v as i64 + 1;
        let read_lo = self.k as i64 - self.p.visibility as i64;
        let loc_visible = |l: &Loc| l.round as i64 >= keep_lo || (l.round + 1 == self.k && self.incs[l.state]);
        if a.locs.symmetric_difference(&b.locs).any(loc_visible) {
            return false;
        }
        let regs: FxHashSet<(u32, usize)> = a.regs.keys().chain(b.regs.keys()).copied().collect();
        !regs.into_iter().any(|(r, j)| {
            register_of(&a.regs, r, j) != register_of(&b.regs, r, j) && (r as i64 >= keep_lo || r as i64 >= read_lo)
        })
    }

    fn intern(&mut self, id: u32, seen: Seen) -> u32 {
        let n = self.interned.len() as u32 + 1;
        *self.interned.entry((id, seen)).or_insert(n)
    }

    fn push(&mut self, m: Move, next: AbstractConfig, new: bool) {
        let (mut id, last) = self.prefix.last().cloned().unwrap();
        if m.dest().round == self.k + 1 {
            id = self.intern(id, Seen::Arrive(m.transition.dest));
        }
        let v = view(&self.incs, &next, self.k, keep_lo(self.k, self.v));
        if v != last {
            id = self.intern(id, v.clone());
        }
        self.prefix.push((id, v));
        self.counted += usize::from(new);
        self.is_new.push(new);
        self.moves.push(m);
        self.configs.push(next);
    }

    fn pop(&mut self) {
        self.prefix.pop();
        self.moves.pop();
        self.configs.pop();
        self.counted -= usize::from(self.is_new.pop().unwrap());
    }

    fn dfs(&mut self, i: usize, out: &mut dyn FnMut(Footprint) -> bool) -> Flow {
        if !self.budget.tick() {
            return Flow::Stop;
        }
        let k = self.k;
        let state = BridgeState {
            i,
            newest: restrict(self.configs.last().unwrap(), Window::new(k as i64, k as i64)),
            ever: self.ever.clone(),
            deserted: self.deserted.clone(),
            bare: self.bare.clone(),
            prefix: self.prefix.last().unwrap().0,
        };
        match self.done.entry(state) {
            Entry::Occupied(mut e) => {
                if *e.get() <= self.counted {
                    return Flow::Continue;
                }
                e.insert(self.counted);
            }
            Entry::Vacant(e) => {
                e.insert(self.counted);
            }
        }
        let n = self.tau.moves.len();
        if i == n {
            if let Flow::Stop = self.emit(out) {
                return Flow::Stop;
            }
        }
        if i < n {
            let m = self.tau.moves[i];
            let mut next = restrict(self.configs.last().unwrap(), Window::new(k as i64, k as i64));
            let t = &self.tau.configs[i + 1];
            next.locs.extend(t.locs.iter().copied());
            next.regs.extend(t.regs.iter().map(|(a, b)| (*a, *b)));
            let dest = m.dest();
            let mut fresh = None;
            let allowed = if dest.round == k {
                if self.deserted[dest.state] {
                    false
                } else {
                    next.locs.insert(dest);
                    if !self.ever[dest.state] {
                        fresh = Some(dest.state);
                    }
                    true
                }
            } else {
                true
            };
            let silent = self.silent(i);
            if allowed {
                if let Some(q) = fresh {
                    self.ever[q] = true;
                }
                self.push(m, next, false);
                let flow = self.dfs(i + 1, out);
                self.pop();
                if let Some(q) = fresh {
                    self.ever[q] = false;
                }
                if let Flow::Stop = flow {
                    return Flow::Stop;
                }
            }
            if silent {
                return Flow::Continue;
            }
        }
        if self.counted >= self.step_cap {
            return Flow::Continue;
        }
        for ti in 0..self.p.transitions.len() {
            let t = self.p.transitions[ti];
            for deserting in [false, true] {
                let round = match (t.action, deserting) {
                    (Action::Inc, false) if k >= 1 => k - 1,
                    (Action::Inc, false) => continue,
                    _ => k,
                };
                let m = Move::new(t, round, deserting);
                if deserting && m.source() == m.dest() {
                    continue;
                }
                if let Flow::Stop = self.try_new(m, out, i) {
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    }

    /// Tries a step that changes only the newest round.
    fn try_new(&mut self, m: Move, out: &mut dyn FnMut(Footprint) -> bool, i: usize) -> Flow {
        let k = self.k;
        let cur = self.configs.last().unwrap();
        if !cur.locs.contains(&m.source()) {
            return Flow::Continue;
        }
        let dest = m.dest();
        let dest_in = dest.round == k;
        if dest_in && self.deserted[dest.state] {
            return Flow::Continue;
        }
        let fresh = dest_in && !self.ever[dest.state];
        let mut bare_slot = None;
        match m.transition.action {
            Action::Read { depth, reg, sym } => {
                if depth > k || register_of(&cur.regs, k - depth, reg) != sym {
                    return Flow::Continue;
                }
                if !m.deserting && !fresh {
                    return Flow::Continue;
                }
            }
            Action::Write { reg, sym } => {
                if !m.deserting && !fresh {
                    if register_of(&cur.regs, k, reg) == sym {
                        return Flow::Continue;
                    }
                    let slot = reg * self.p.num_symbols() + sym;
                    if self.bare[slot] >= self.write_budget[slot] {
                        return Flow::Continue;
                    }
                    bare_slot = Some(slot);
                }
            }
            Action::Inc => {
                if !m.deserting && !fresh {
                    return Flow::Continue;
                }
            }
        }
        let next = match abstract_step(self.p, cur, &m) {
            Ok(c) => restrict(&c, self.window),
            Err(_) => return Flow::Continue,
        };
        let src_state = m.source().state;
        let deserts = m.deserting && m.source().round == k;
        if let Some(s) = bare_slot {
            self.bare[s] += 1;
        }
        if fresh {
            self.ever[dest.state] = true;
        }
        if deserts {
            self.deserted[src_state] = true;
        }
        self.push(m, next, true);
        let flow = self.dfs(i, out);
        self.pop();
        if deserts {
            self.deserted[src_state] = false;
        }
        if fresh {
            self.ever[dest.state] = false;
        }
        if let Some(s) = bare_slot {
            self.bare[s] -= 1;
        }
        flow
    }
}

fn run_bridges(
    p: &Protocol,
    tau: &Footprint,
    initial: &[StateId],
    k: u32,
    step_cap: usize,
    budget: &Budget,
    out: &mut dyn FnMut(Footprint) -> bool,
) {
    let v = effective_visibility(p);
    let window = Window::new(k as i64 - v as i64, k as i64);
    let mut start = tau.first().clone();
    let mut ever = vec![false; p.num_states()];
    if k == 0 {
        for &q in initial {
            start.locs.insert(Loc::new(q, 0));
            ever[q] = true;
        }
    }
    let mut b = Bridges {
        p,
        tau,
        k,
        v,
        window,
        step_cap,
        budget,
        write_budget: bare_write_budget(p),
        moves: Vec::new(),
        configs: vec![start],
        ever,
        deserted: vec![false; p.num_states()],
        bare: vec![0; p.registers * p.num_symbols()],
        counted: 0,
        is_new: Vec::new(),
        incs: has_inc(p),
        prefix: Vec::new(),
        interned: FxHashMap::default(),
        done: FxHashMap::default(),
    };
    let first = view(&b.incs, &b.configs[0], k, keep_lo(k, v));
    b.prefix.push((0, first));
    b.dfs(0, out);
}

/// Every bridge footprint on `[k-v, k]` extending `tau` (a footprint on
/// `[k-v, k-1]`), within the step cap.
///
/// Round `k` starts with `d0` registers and no process, or with `initial` at
/// round 0. Only bridges whose new steps can occur in a normal-form
/// execution are produced. The callback returns `false` to stop.
pub fn enumerate_bridge_footprints(
    p: &Protocol,
    tau: &Footprint,
    initial: &[StateId],
    k: u32,
    step_cap: usize,
    out: &mut dyn FnMut(Footprint) -> bool,
) {
    let budget = Budget::new(u64::MAX);
    run_bridges(p, tau, initial, k, step_cap, &budget, out);
}

/// The footprint on `[-v, -1]` that starts the search.
pub fn dummy_footprint(p: &Protocol) -> Footprint {
    let v = effective_visibility(p) as i64;
    Footprint::stepless(Window::new(-v, -1), AbstractConfig::default())
}

type Residual = Formula<GroundAtom>;

fn ground(f: &Prop, k: u32) -> Residual {
    f.map(&mut |a| Formula::Atom(a.ground(k)))
}

/// Replaces atoms about round `k` by their value in `g`.
fn settle(f: &Residual, g: &AbstractConfig, k: u32) -> Residual {
    f.map(&mut |a| {
        if a.round() == k {
            if a.holds(g) {
                Formula::True
            } else {
                Formula::False
            }
        } else {
            Formula::Atom(*a)
        }
    })
    .simplify()
}

fn on_empty(f: &Residual) -> bool {
    f.eval(&mut |a| a.on_empty())
}

fn shift_residual(f: &Residual, by: u32) -> Residual {
    f.map(&mut |a| Formula::Atom(a.shifted_down(by)))
}

fn has_inc(p: &Protocol) -> Vec<bool> {
    let mut out = vec![false; p.num_states()];
    for t in &p.transitions {
        if t.action == Action::Inc {
            out[t.source] = true;
        }
    }
    out
}

/// What the rounds after `k` can observe of a footprint on `[k-v+1, k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Seen {
    /// Round-`k` states with an increment, and the window's registers
    /// relative to the window start.
    View(Vec<StateId>, Vec<(u32, usize, usize)>),
    /// A process entering round `k+1`.
    Arrive(StateId),
}

type TauKey = Vec<Seen>;

fn keep_lo(k: u32, v: u32) -> u32 {
    (k + 1).saturating_sub(v)
}

fn view(incs: &[bool], c: &AbstractConfig, k: u32, lo: u32) -> Seen {
    let locs = c.locs.iter().filter(|l| l.round == k && incs[l.state]).map(|l| l.state).collect();
    let regs = c.regs.iter().filter(|((r, _), _)| *r >= lo && *r <= k).map(|(&(r, j), &s)| (r - lo, j, s)).collect();
    Seen::View(locs, regs)
}

fn tau_key(p: &Protocol, tau: &Footprint, k: u32) -> TauKey {
    let lo = tau.window.lo.max(0) as u32;
    let incs = has_inc(p);
    let mut out = vec![view(&incs, &tau.configs[0], k, lo)];
    let mut last = out[0].clone();
    for (m, c) in tau.moves.iter().zip(&tau.configs[1..]) {
        if m.dest().round == k + 1 {
            out.push(Seen::Arrive(m.transition.dest));
        }
        let v = view(&incs, c, k, lo);
        if v != last {
            out.push(v.clone());
            last = v;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Signature {
    early: u32,
    forall: u32,
    tau: TauKey,
    exists: Vec<Prop>,
    pending: Vec<Residual>,
}

#[derive(Clone, Debug)]
struct Node {
    k: u32,
    tau: Footprint,
    exists: Vec<Prop>,
    pending: Vec<Residual>,
}

struct Search<'a> {
    p: &'a Protocol,
    psi: &'a RoundConstraint,
    v: u32,
    step_cap: usize,
    budget: &'a Budget,
    visited: FxHashSet<Signature>,
    forall: Vec<Prop>,
    forall_id: u32,
    initial: Vec<StateId>,
    chain: Vec<Footprint>,
    witness: Option<Execution<AbstractConfig>>,
}

impl Search<'_> {
    fn signature(&self, n: &Node) -> Signature {
        let mut pending: Vec<Residual> = n.pending.iter().map(|f| shift_residual(f, n.k + 1)).collect();
        pending.sort();
        pending.dedup();
        let tau = tau_key(self.p, &n.tau, n.k);
        Signature { early: n.k.min(self.v), forall: self.forall_id, tau, exists: n.exists.clone(), pending }
    }

    /// Extends `node` (at round `k-1`) by one round. Returns true on acceptance.
    fn expand(&mut self, node: &Node, k: u32) -> bool {
        // Children that agree on what later rounds see and on round `k` at
        // the end have the same future.
        let mut children: FxHashMap<(TauKey, AbstractConfig), (Footprint, Footprint)> = FxHashMap::default();
        let keep = tau_window(k, self.v);
        let now = Window::new(k as i64, k as i64);
        run_bridges(self.p, &node.tau, &self.initial, k, self.step_cap, self.budget, &mut |t| {
            let tau = project_footprint(&t, keep).expect("window contained");
            let key = (tau_key(self.p, &tau, k), restrict(t.last(), now));
            if let Entry::Vacant(e) = children.entry(key) {
                e.insert((tau, t));
            }
            true
        });
        let mut ordered: Vec<(Footprint, Footprint)> = children.into_values().collect();
        ordered.sort_by(|a, b| a.1.moves.len().cmp(&b.1.moves.len()).then_with(|| a.1.moves.cmp(&b.1.moves)));
        for (tau, t) in ordered {
            if self.budget.exhausted() {
                return false;
            }
            let g = t.last().clone();
            let mut pending = Vec::new();
            let mut ok = true;
            for f in node.pending.iter().chain(self.forall.iter().map(|f| ground(f, k)).collect::<Vec<_>>().iter()) {
                match settle(f, &g, k) {
                    Formula::True => {}
                    Formula::False => {
                        ok = false;
                        break;
                    }
                    r => pending.push(r),
                }
            }
            if !ok {
                continue;
            }
            let ne = node.exists.len();
            for mask in 0u32..(1u32 << ne) {
                let mut pend = pending.clone();
                let mut exists = Vec::new();
                let mut valid = true;
                for (i, f) in node.exists.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        match settle(&ground(f, k), &g, k) {
                            Formula::True => {}
                            Formula::False => {
                                valid = false;
                                break;
                            }
                            r => pend.push(r),
                        }
                    } else {
                        exists.push(f.clone());
                    }
                }
                if !valid {
                    continue;
                }
                self.chain.push(t.clone());
                let child = Node { k, tau: tau.clone(), exists, pending: pend };
                if self.test(&child, &t) && self.accept() {
                    return true;
                }
                let sig = self.signature(&child);
                if self.budget.tick() && self.visited.insert(sig) && self.expand(&child, k + 1) {
                    return true;
                }
                self.chain.pop();
            }
        }
        false
    }

    /// The execution may stop at this round: nothing existential is left and
    /// everything pending holds on untouched rounds.
    fn test(&self, n: &Node, t: &Footprint) -> bool {
        n.exists.is_empty()
            && n.pending.iter().all(on_empty)
            && self.forall.iter().all(|f| on_empty(&ground(f, n.k + 1)))
            && !t.moves.iter().any(|m| m.transition.action == Action::Inc && m.round == n.k)
    }

    fn accept(&mut self) -> bool {
        let taus: Vec<Footprint> = self
            .chain
            .iter()
            .enumerate()
            .map(|(k, t)| project_footprint(t, tau_window(k as u32, self.v)).expect("window contained"))
            .collect();
        let bridges = self.chain[1..].to_vec();
        let glued = combine_footprints(self.p, &taus, &bridges, self.v);
        let Ok(exec) = glued else {
            debug_assert!(false, "accepted footprint chain does not glue: {glued:?}");
            return false;
        };
        let Ok(end) = crate::semantics::replay_abstract(self.p, &exec) else {
            debug_assert!(false, "glued witness does not replay");
            return false;
        };
        if !eval_roundbased(&end, self.psi, end.active_bound()) {
            debug_assert!(false, "glued witness does not satisfy the constraint");
            return false;
        }
        self.witness = Some(exec);
        true
    }
}

struct Root {
    closed: Vec<Residual>,
    exists: Vec<Prop>,
    forall: Vec<Prop>,
    forall_id: u32,
    initial: Vec<StateId>,
}

fn roots(p: &Protocol, psi: &RoundConstraint) -> Result<Vec<Root>, RoundBasedError> {
    let (_, cands) = decompose_apcs(psi)?;
    let mut forall_ids: Vec<Vec<Prop>> = Vec::new();
    let mut out = Vec::new();
    let n = p.initial.len().min(16);
    for c in cands {
        let id = match forall_ids.iter().position(|f| *f == c.forall) {
            Some(i) => i,
            None => {
                forall_ids.push(c.forall.clone());
                forall_ids.len() - 1
            }
        } as u32;
        let closed: Vec<Residual> = c
            .closed
            .iter()
            .map(|l| if l.positive { Formula::Atom(l.atom) } else { Formula::not(Formula::Atom(l.atom)) })
            .collect();
        for mask in 1u32..(1u32 << n) {
            let initial = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p.initial[i]).collect();
            out.push(Root { closed: closed.clone(), exists: c.exists.clone(), forall: c.forall.clone(), forall_id: id, initial });
        }
    }
    Ok(out)
}

fn run_root(
    p: &Protocol,
    psi: &RoundConstraint,
    root: &Root,
    step_cap: usize,
    budget: &Budget,
    visited: &mut FxHashSet<Signature>,
) -> Option<Execution<AbstractConfig>> {
    let mut s = Search {
        p,
        psi,
        v: effective_visibility(p),
        step_cap,
        budget,
        visited: std::mem::take(visited),
        forall: root.forall.clone(),
        forall_id: root.forall_id,
        initial: root.initial.clone(),
        chain: Vec::new(),
        witness: None,
    };
    let start = Node { k: 0, tau: dummy_footprint(p), exists: root.exists.clone(), pending: root.closed.clone() };
    let found = s.expand(&start, 0);
    *visited = std::mem::take(&mut s.visited);
    if found {
        s.witness
    } else {
        None
    }
}

/// Decides round-based PRP. Positive verdicts carry a glued, replayed witness;
/// running out of budget gives an unknown verdict.
pub fn solve_prp_roundbased(
    p: &Protocol,
    psi: &RoundConstraint,
    opts: &RoundBasedOptions,
) -> Result<Verdict, RoundBasedError> {
    if p.flavor != Flavor::RoundBased {
        return Err(RoundBasedError::NotRoundBased);
    }
    let roots = roots(p, psi)?;
    let step_cap = opts.step_cap.unwrap_or_else(|| default_step_cap(p));
    let budget = Budget::new(opts.budget);
    let witness = if opts.parallel && roots.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = roots
                .iter()
                .map(|root| {
                    let budget = &budget;
                    scope.spawn(move || run_root(p, psi, root, step_cap, budget, &mut FxHashSet::default()))
                })
                .collect();
            handles.into_iter().filter_map(|h| h.join().expect("search thread panicked")).next()
        })
    } else {
        let mut visited = FxHashSet::default();
        let mut found = None;
        for root in &roots {
            found = run_root(p, psi, root, step_cap, &budget, &mut visited);
            if found.is_some() || budget.exhausted() {
                break;
            }
        }
        found
    };
    let nodes = budget.used.load(Ordering::Relaxed).min(opts.budget);
    Ok(match witness {
        Some(w) => Verdict::new(Answer::Positive, "footprint").with_nodes(nodes).with_witness(w),
        None if budget.exhausted() => Verdict::new(Answer::Unknown, "footprint").with_nodes(nodes),
        None => Verdict::new(Answer::Negative, "footprint").with_nodes(nodes),
    })
}

/// Whether a stored footprint respects the structural size limits: at most
/// the step cap, every location and register inside its window.
pub fn footprint_within_bounds(p: &Protocol, fp: &Footprint) -> bool {
    fp.moves.len() <= (effective_visibility(p) as usize + 1) * default_step_cap(p)
        && fp.configs.iter().all(|c| {
            c.locs.iter().all(|l| fp.window.contains(l.round)) && c.regs.keys().all(|(k, _)| fp.window.contains(*k))
        })
        && fp.configs.iter().all(|c| c.regs.values().all(|&s| s != D0))
}
