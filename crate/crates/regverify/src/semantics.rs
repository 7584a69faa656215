//! Concrete and abstract operational semantics.
//!
//! Both flavors share one representation: a roundless protocol lives entirely
//! at round 0. Registers are stored sparsely; an absent entry holds `d0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::protocol::{Action, Flavor, Protocol, RegId, StateId, SymId, Transition, D0};

/// A process position: a state at a round. Ordered round-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub round: u32,
    pub state: StateId,
}

impl Loc {
    pub fn new(state: StateId, round: u32) -> Loc {
        Loc { round, state }
    }
}

/// Non-`d0` register contents keyed by `(round, register)`.
pub type Registers = BTreeMap<(u32, RegId), SymId>;

fn reg_value(regs: &Registers, round: u32, reg: RegId) -> SymId {
    regs.get(&(round, reg)).copied().unwrap_or(D0)
}

fn set_reg(regs: &mut Registers, round: u32, reg: RegId, sym: SymId) {
    if sym == D0 {
        regs.remove(&(round, reg));
    } else {
        regs.insert((round, reg), sym);
    }
}

/// A set of populated locations together with the register valuation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractConfig {
    pub locs: BTreeSet<Loc>,
    pub regs: Registers,
}

/// A finite multiset of locations together with the register valuation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConcreteConfig {
    pub pop: BTreeMap<Loc, usize>,
    pub regs: Registers,
}

impl AbstractConfig {
    pub fn reg(&self, round: u32, reg: RegId) -> SymId {
        reg_value(&self.regs, round, reg)
    }

    pub fn is_populated(&self, state: StateId, round: u32) -> bool {
        self.locs.contains(&Loc::new(state, round))
    }

    /// Populated states at round 0, for roundless use.
    pub fn states(&self) -> BTreeSet<StateId> {
        self.locs.iter().filter(|l| l.round == 0).map(|l| l.state).collect()
    }

    /// Largest round carrying a process or a non-`d0` register, 0 if none.
    pub fn active_bound(&self) -> u32 {
        let a = self.locs.iter().map(|l| l.round).max().unwrap_or(0);
        let b = self.regs.keys().map(|k| k.0).max().unwrap_or(0);
        a.max(b)
    }

    pub fn display<'a>(&'a self, p: &'a Protocol) -> ConfigDisplay<'a> {
        ConfigDisplay { p, locs: self.locs.iter().map(|l| (*l, 1)).collect(), regs: &self.regs }
    }
}

impl ConcreteConfig {
    pub fn reg(&self, round: u32, reg: RegId) -> SymId {
        reg_value(&self.regs, round, reg)
    }

    pub fn count(&self, loc: Loc) -> usize {
        self.pop.get(&loc).copied().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.pop.values().sum()
    }

    pub fn add(&mut self, loc: Loc, n: usize) {
        if n > 0 {
            *self.pop.entry(loc).or_insert(0) += n;
        }
    }

    fn remove_one(&mut self, loc: Loc) {
        let e = self.pop.get_mut(&loc).expect("location populated");
        *e -= 1;
        if *e == 0 {
            self.pop.remove(&loc);
        }
    }

    pub fn display<'a>(&'a self, p: &'a Protocol) -> ConfigDisplay<'a> {
        ConfigDisplay { p, locs: self.pop.iter().map(|(l, n)| (*l, *n)).collect(), regs: &self.regs }
    }
}

/// Human-readable rendering shared by both configuration kinds.
pub struct ConfigDisplay<'a> {
    p: &'a Protocol,
    locs: Vec<(Loc, usize)>,
    regs: &'a Registers,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (l, n) in &self.locs {
            for _ in 0..*n {
                match self.p.flavor {
                    Flavor::Roundless => parts.push(self.p.states[l.state].clone()),
                    Flavor::RoundBased => parts.push(format!("{}@{}", self.p.states[l.state], l.round)),
                }
            }
        }
        write!(f, "{}", parts.join(" "))?;
        write!(f, " ;")?;
        match self.p.flavor {
            Flavor::Roundless => {
                for j in 0..self.p.registers {
                    write!(f, " {}", self.p.alphabet[reg_value(self.regs, 0, j)])?;
                }
            }
            Flavor::RoundBased => {
                for (&(k, j), &s) in self.regs {
                    write!(f, " {}:{}={}", k, j + 1, self.p.alphabet[s])?;
                }
            }
        }
        Ok(())
    }
}

/// A transition taken at a round. `deserting` only matters abstractly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub transition: Transition,
    pub round: u32,
    pub deserting: bool,
}

impl Move {
    pub fn new(transition: Transition, round: u32, deserting: bool) -> Move {
        Move { transition, round, deserting }
    }

    pub fn source(&self) -> Loc {
        Loc::new(self.transition.source, self.round)
    }

    pub fn dest(&self) -> Loc {
        match self.transition.action {
            Action::Inc => Loc::new(self.transition.dest, self.round + 1),
            _ => Loc::new(self.transition.dest, self.round),
        }
    }

    /// True for rounds whose locations or registers this move may change:
    /// its own round, and the next one for increments.
    pub fn has_effect_on(&self, round: u32) -> bool {
        self.round == round || (self.transition.action == Action::Inc && self.round + 1 == round)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution<C> {
    pub start: C,
    pub steps: Vec<Move>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Concrete,
    Abstract,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("source location is not populated")]
    SourceEmpty,
    #[error("register holds a different symbol")]
    RegisterMismatch,
    #[error("read reaches below round 0")]
    DepthUnderflow,
    #[error("transition is not part of the protocol")]
    UnknownTransition,
    #[error("roundless protocols only use round 0")]
    RoundInRoundless,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("initial support is empty")]
    EmptySupport,
    #[error("state {0} is not initial")]
    NotInitialState(StateId),
    #[error("step {index} is not enabled: {reason}")]
    NotEnabled { index: usize, reason: StepError },
    #[error("target location is not populated at the end of the execution")]
    TargetNotPopulated,
    #[error("round-based successors need a round window")]
    MissingWindow,
}

fn check_move(p: &Protocol, m: &Move) -> Result<(), StepError> {
    if p.flavor == Flavor::Roundless && m.round != 0 {
        return Err(StepError::RoundInRoundless);
    }
    if !p.transitions.contains(&m.transition) {
        return Err(StepError::UnknownTransition);
    }
    Ok(())
}

/// Checks the register side-condition of a move and returns the new registers.
fn apply_data(regs: &Registers, m: &Move) -> Result<Option<(u32, RegId, SymId)>, StepError> {
    match m.transition.action {
        Action::Read { depth, reg, sym } => {
            if depth > m.round {
                return Err(StepError::DepthUnderflow);
            }
            if reg_value(regs, m.round - depth, reg) != sym {
                return Err(StepError::RegisterMismatch);
            }
            Ok(None)
        }
        Action::Write { reg, sym } => Ok(Some((m.round, reg, sym))),
        Action::Inc => Ok(None),
    }
}

/// One abstract step; `m.deserting` selects whether the source is removed.
pub fn abstract_step(p: &Protocol, c: &AbstractConfig, m: &Move) -> Result<AbstractConfig, StepError> {
    check_move(p, m)?;
    if !c.locs.contains(&m.source()) {
        return Err(StepError::SourceEmpty);
    }
    let w = apply_data(&c.regs, m)?;
    let mut next = c.clone();
    if let Some((k, j, s)) = w {
        set_reg(&mut next.regs, k, j, s);
    }
    if m.deserting {
        next.locs.remove(&m.source());
    }
    next.locs.insert(m.dest());
    Ok(next)
}

/// One concrete step: a single process moves.
pub fn concrete_step(p: &Protocol, c: &ConcreteConfig, m: &Move) -> Result<ConcreteConfig, StepError> {
    check_move(p, m)?;
    if c.count(m.source()) == 0 {
        return Err(StepError::SourceEmpty);
    }
    let w = apply_data(&c.regs, m)?;
    let mut next = c.clone();
    if let Some((k, j, s)) = w {
        set_reg(&mut next.regs, k, j, s);
    }
    next.remove_one(m.source());
    next.add(m.dest(), 1);
    Ok(next)
}

/// The abstract initial configuration populated by `support` at round 0.
pub fn initial_configurations(p: &Protocol, support: &[StateId]) -> Result<AbstractConfig, SemanticsError> {
    if support.is_empty() {
        return Err(SemanticsError::EmptySupport);
    }
    let mut c = AbstractConfig::default();
    for &q in support {
        if !p.is_initial(q) {
            return Err(SemanticsError::NotInitialState(q));
        }
        c.locs.insert(Loc::new(q, 0));
    }
    Ok(c)
}

/// Every nonempty subset of `Q0`, in binary counting order.
pub fn all_initial_configurations(p: &Protocol) -> Vec<AbstractConfig> {
    let n = p.initial.len();
    let mut out = Vec::new();
    if n >= 20 {
        out.push(initial_configurations(p, &p.initial).unwrap());
        return out;
    }
    for mask in 1u32..(1u32 << n) {
        let support: Vec<StateId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p.initial[i]).collect();
        out.push(initial_configurations(p, &support).unwrap());
    }
    out
}

/// All abstract successors, both deserting and non-deserting unless they coincide.
///
/// Round-based protocols require `window = Some((lo, hi))`; only moves taken at a
/// round in `lo..=hi` are generated.
pub fn abstract_successors(
    p: &Protocol,
    c: &AbstractConfig,
    window: Option<(u32, u32)>,
) -> Result<Vec<(Move, AbstractConfig)>, SemanticsError> {
    let (lo, hi) = match p.flavor {
        Flavor::Roundless => (0, 0),
        Flavor::RoundBased => window.ok_or(SemanticsError::MissingWindow)?,
    };
    let mut out = Vec::new();
    for t in &p.transitions {
        for loc in c.locs.iter().filter(|l| l.state == t.source && l.round >= lo && l.round <= hi) {
            for deserting in [false, true] {
                let m = Move::new(*t, loc.round, deserting);
                if deserting && m.source() == m.dest() {
                    continue;
                }
                if let Ok(next) = abstract_step(p, c, &m) {
                    out.push((m, next));
                }
            }
        }
    }
    Ok(out)
}

/// Support and register valuation of a concrete configuration.
pub fn project(c: &ConcreteConfig) -> AbstractConfig {
    AbstractConfig { locs: c.pop.keys().copied().collect(), regs: c.regs.clone() }
}

pub fn replay_abstract(p: &Protocol, exec: &Execution<AbstractConfig>) -> Result<AbstractConfig, SemanticsError> {
    let mut c = exec.start.clone();
    for (index, m) in exec.steps.iter().enumerate() {
        c = abstract_step(p, &c, m).map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
    }
    Ok(c)
}

pub fn replay_concrete(p: &Protocol, exec: &Execution<ConcreteConfig>) -> Result<ConcreteConfig, SemanticsError> {
    let mut c = exec.start.clone();
    for (index, m) in exec.steps.iter().enumerate() {
        c = concrete_step(p, &c, m).map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
    }
    Ok(c)
}

/// Either kind of configuration, as returned by [`replay`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Config {
    Abstract(AbstractConfig),
    Concrete(ConcreteConfig),
}

/// Replays `steps` from `start` in the requested semantics.
///
/// In concrete mode the start population is the support of `start` with one
/// process each, unless a concrete start is given.
pub fn replay(p: &Protocol, start: &Config, steps: &[Move], mode: Mode) -> Result<Config, SemanticsError> {
    match (mode, start) {
        (Mode::Abstract, Config::Abstract(a)) => {
            replay_abstract(p, &Execution { start: a.clone(), steps: steps.to_vec() }).map(Config::Abstract)
        }
        (Mode::Abstract, Config::Concrete(c)) => {
            replay_abstract(p, &Execution { start: project(c), steps: steps.to_vec() }).map(Config::Abstract)
        }
        (Mode::Concrete, Config::Concrete(c)) => {
            replay_concrete(p, &Execution { start: c.clone(), steps: steps.to_vec() }).map(Config::Concrete)
        }
        (Mode::Concrete, Config::Abstract(a)) => {
            let c = ConcreteConfig { pop: a.locs.iter().map(|l| (*l, 1)).collect(), regs: a.regs.clone() };
            replay_concrete(p, &Execution { start: c, steps: steps.to_vec() }).map(Config::Concrete)
        }
    }
}

/// Builds the execution of the copycat property: the same run with one extra
/// process that ends on `target`.
///
/// The result starts from `start ⊕ q1` for some `q1` in the start support and
/// ends in `end ⊕ target` with the same registers.
pub fn copycat_extend(
    p: &Protocol,
    exec: &Execution<ConcreteConfig>,
    target: Loc,
) -> Result<Execution<ConcreteConfig>, SemanticsError> {
    let mut configs = vec![exec.start.clone()];
    for (index, m) in exec.steps.iter().enumerate() {
        let next = concrete_step(p, configs.last().unwrap(), m)
            .map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
        configs.push(next);
    }
    if configs.last().unwrap().count(target) == 0 {
        return Err(SemanticsError::TargetNotPopulated);
    }
    // Walk backwards, tracking which location the extra process must occupy
    // before each step and how many copies of that step to take.
    let mut reps = vec![1usize; exec.steps.len()];
    let mut t = target;
    for i in (0..exec.steps.len()).rev() {
        let m = &exec.steps[i];
        if m.dest() == t {
            reps[i] = 2;
            t = m.source();
        }
    }
    let mut start = exec.start.clone();
    start.add(t, 1);
    let mut steps = Vec::with_capacity(exec.steps.len() * 2);
    for (m, r) in exec.steps.iter().zip(reps) {
        for _ in 0..r {
            steps.push(*m);
        }
    }
    Ok(Execution { start, steps })
}

/// Realizes an abstract execution concretely, duplicating processes with the
/// copycat construction whenever a non-deserting step would empty its source.
pub fn abstract_to_concrete(
    p: &Protocol,
    exec: &Execution<AbstractConfig>,
) -> Result<Execution<ConcreteConfig>, SemanticsError> {
    replay_abstract(p, exec)?;
    let start = ConcreteConfig { pop: exec.start.locs.iter().map(|l| (*l, 1)).collect(), regs: exec.start.regs.clone() };
    let mut cur = Execution { start, steps: Vec::new() };
    let mut conf = cur.start.clone();
    for m in &exec.steps {
        let src = m.source();
        let same = src == m.dest();
        if m.deserting && !same {
            let n = conf.count(src);
            for _ in 0..n {
                let mut c = *m;
                c.deserting = false;
                conf = concrete_step(p, &conf, &c).expect("abstract step was enabled");
                cur.steps.push(c);
            }
        } else {
            if conf.count(src) == 1 && !same {
                cur = copycat_extend(p, &cur, src)?;
                conf = replay_concrete(p, &cur)?;
            }
            let mut c = *m;
            c.deserting = false;
            conf = concrete_step(p, &conf, &c).expect("abstract step was enabled");
            cur.steps.push(c);
        }
    }
    Ok(cur)
}

/// Register value helper shared with solver code.
pub fn register_of(regs: &Registers, round: u32, reg: RegId) -> SymId {
    reg_value(regs, round, reg)
}

pub fn write_register(regs: &mut Registers, round: u32, reg: RegId, sym: SymId) {
    set_reg(regs, round, reg, sym)
}
