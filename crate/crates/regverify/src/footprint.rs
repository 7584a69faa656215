//! Local configurations and footprints over round windows, the gluing of
//! footprints back into an execution, and execution normal form.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::protocol::{Action, Protocol, StateId};
use crate::semantics::{abstract_step, register_of, write_register, AbstractConfig, Execution, Loc, Move, SemanticsError, StepError};

/// A round interval `[lo, hi]`. Rounds below 0 do not exist, so the window
/// may be partly or completely empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Window {
        Window { lo, hi }
    }

    pub fn contains(&self, round: u32) -> bool {
        let r = round as i64;
        r >= self.lo && r <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo.max(0)
    }

    pub fn includes(&self, other: Window) -> bool {
        other.is_empty() || (self.lo.max(0) <= other.lo.max(0) && other.hi <= self.hi)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FootprintError {
    #[error("window [{0}, {1}] is not contained in the footprint window")]
    WindowNotContained(i64, i64),
    #[error("footprints disagree on their shared window at index {0}")]
    InconsistentProjections(usize),
    #[error("step {index} of the footprint is invalid: {reason}")]
    InvalidStep { index: usize, reason: StepError },
    #[error("step {0} of the footprint does not change the local configuration")]
    Stutter(usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Drops everything outside `w`.
pub fn restrict(c: &AbstractConfig, w: Window) -> AbstractConfig {
    AbstractConfig {
        locs: c.locs.iter().filter(|l| w.contains(l.round)).copied().collect(),
        regs: c.regs.iter().filter(|((k, _), _)| w.contains(*k)).map(|(a, b)| (*a, *b)).collect(),
    }
}

/// Whether `m` can change anything inside `w`.
pub fn move_affects(m: &Move, w: Window) -> bool {
    let real_desert = m.deserting && m.source() != m.dest();
    w.contains(m.dest().round) || (w.contains(m.round) && (real_desert || m.transition.action.is_write()))
}

/// The relaxed step relation on local configurations.
///
/// Moves that cannot affect the window leave it unchanged, an increment into
/// the lowest round needs no populated source, and reads below the window are
/// not checked against register contents.
pub fn local_step(p: &Protocol, w: Window, g: &AbstractConfig, m: &Move) -> Result<AbstractConfig, StepError> {
    if !p.transitions.contains(&m.transition) {
        return Err(StepError::UnknownTransition);
    }
    if !move_affects(m, w) {
        return Ok(g.clone());
    }
    let src = m.source();
    if w.contains(src.round) && !g.locs.contains(&src) {
        return Err(StepError::SourceEmpty);
    }
    let mut next = g.clone();
    match m.transition.action {
        Action::Read { depth, reg, sym } => {
            if depth > m.round {
                return Err(StepError::DepthUnderflow);
            }
            let k = m.round - depth;
            if w.contains(k) && register_of(&g.regs, k, reg) != sym {
                return Err(StepError::RegisterMismatch);
            }
        }
        Action::Write { reg, sym } => write_register(&mut next.regs, m.round, reg, sym),
        Action::Inc => {}
    }
    if m.deserting && w.contains(src.round) {
        next.locs.remove(&src);
    }
    if w.contains(m.dest().round) {
        next.locs.insert(m.dest());
    }
    Ok(next)
}

/// Local configurations on a window linked by moves; consecutive
/// configurations always differ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Footprint {
    pub window: Window,
    pub configs: Vec<AbstractConfig>,
    pub moves: Vec<Move>,
}

impl Footprint {
    /// The stepless footprint on `w` sitting at `start`.
    pub fn stepless(w: Window, start: AbstractConfig) -> Footprint {
        Footprint { window: w, configs: vec![restrict(&start, w)], moves: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn first(&self) -> &AbstractConfig {
        &self.configs[0]
    }

    pub fn last(&self) -> &AbstractConfig {
        self.configs.last().unwrap()
    }

    /// Appends a step, dropping it if it leaves the local configuration unchanged.
    pub fn push(&mut self, m: Move, next: AbstractConfig) {
        if &next != self.last() {
            self.moves.push(m);
            self.configs.push(next);
        }
    }

    /// Checks the local step relation and the no-stutter condition.
    pub fn validate(&self, p: &Protocol) -> Result<(), FootprintError> {
        for (index, m) in self.moves.iter().enumerate() {
            let next = local_step(p, self.window, &self.configs[index], m)
                .map_err(|reason| FootprintError::InvalidStep { index, reason })?;
            if next != self.configs[index + 1] {
                return Err(FootprintError::InvalidStep { index, reason: StepError::RegisterMismatch });
            }
            if next == self.configs[index] {
                return Err(FootprintError::Stutter(index));
            }
        }
        Ok(())
    }

    /// Rounds stored relative to the window's lowest existing round.
    pub fn relative(&self) -> Footprint {
        let base = self.window.lo.max(0) as u32;
        let shift = |c: &AbstractConfig| AbstractConfig {
            locs: c.locs.iter().map(|l| Loc::new(l.state, l.round - base)).collect(),
            regs: c.regs.iter().map(|(&(k, j), &s)| ((k - base, j), s)).collect(),
        };
        Footprint {
            window: Window::new(self.window.lo - base as i64, self.window.hi - base as i64),
            configs: self.configs.iter().map(shift).collect(),
            moves: self
                .moves
                .iter()
                .map(|m| Move::new(m.transition, (m.round + 1).saturating_sub(base), m.deserting))
                .collect(),
        }
    }
}

/// Projects a footprint onto a smaller window, merging stutters.
pub fn project_footprint(fp: &Footprint, w: Window) -> Result<Footprint, FootprintError> {
    if !fp.window.includes(w) {
        return Err(FootprintError::WindowNotContained(w.lo, w.hi));
    }
    let mut out = Footprint::stepless(w, fp.configs[0].clone());
    for (m, c) in fp.moves.iter().zip(&fp.configs[1..]) {
        out.push(*m, restrict(c, w));
    }
    Ok(out)
}

/// The footprint of a whole execution on `w`.
pub fn project_execution(p: &Protocol, exec: &Execution<AbstractConfig>, w: Window) -> Result<Footprint, FootprintError> {
    let mut c = exec.start.clone();
    let mut out = Footprint::stepless(w, c.clone());
    for (index, m) in exec.steps.iter().enumerate() {
        c = abstract_step(p, &c, m).map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
        out.push(*m, restrict(&c, w));
    }
    Ok(out)
}

/// Window of the per-round footprint `taus[k]` for width `w`.
pub fn tau_window(k: u32, width: u32) -> Window {
    Window::new(k as i64 - width as i64 + 1, k as i64)
}

/// Window of the bridge between rounds `k` and `k+1`.
pub fn bridge_window(k: u32, width: u32) -> Window {
    Window::new(k as i64 - width as i64 + 1, k as i64 + 1)
}

/// Glues per-round footprints into one execution.
///
/// `taus[k]` lives on `[k-w+1, k]` and `bridges[k]` on `[k-w+1, k+1]`;
/// `bridges[k]` must project to `taus[k]` and `taus[k+1]`. The width must be
/// at least the visibility range and at least 1. The execution is built
/// round by round: the steps of each bridge that touch only its newest round
/// are inserted into the execution built so far, right before the step
/// matching the next shared step.
pub fn combine_footprints(
    p: &Protocol,
    taus: &[Footprint],
    bridges: &[Footprint],
    width: u32,
) -> Result<Execution<AbstractConfig>, FootprintError> {
    let w = width.max(1);
    if taus.is_empty() || bridges.len() + 1 != taus.len() {
        return Err(FootprintError::InconsistentProjections(0));
    }
    for (k, b) in bridges.iter().enumerate() {
        let k = k as u32;
        if project_footprint(b, tau_window(k, w))? != taus[k as usize]
            || project_footprint(b, tau_window(k + 1, w))? != taus[k as usize + 1]
        {
            return Err(FootprintError::InconsistentProjections(k as usize));
        }
    }
    let base = &taus[0];
    if !base.first().locs.iter().all(|l| l.round == 0) || !base.first().regs.is_empty() {
        return Err(FootprintError::InconsistentProjections(0));
    }
    let mut exec = Execution { start: base.first().clone(), steps: base.moves.clone() };
    if project_execution(p, &exec, base.window)? != *base {
        return Err(FootprintError::InconsistentProjections(0));
    }
    for (k, b) in bridges.iter().enumerate() {
        let new_round = k as u32 + 1;
        let old = tau_window(k as u32, w);
        exec = merge_bridge(p, &exec, b, old)?;
        if project_execution(p, &exec, b.window)? != *b {
            return Err(FootprintError::InconsistentProjections(new_round as usize));
        }
    }
    Ok(exec)
}

fn merge_bridge(
    p: &Protocol,
    exec: &Execution<AbstractConfig>,
    bridge: &Footprint,
    old: Window,
) -> Result<Execution<AbstractConfig>, FootprintError> {
    // Bridge steps that change the shared window are anchors; the rest are new.
    let mut anchors = Vec::new();
    let mut pending: Vec<Vec<Move>> = vec![Vec::new()];
    for (i, m) in bridge.moves.iter().enumerate() {
        if restrict(&bridge.configs[i], old) != restrict(&bridge.configs[i + 1], old) {
            anchors.push(*m);
            pending.push(Vec::new());
        } else {
            pending.last_mut().unwrap().push(*m);
        }
    }
    let mut steps = Vec::with_capacity(exec.steps.len() + bridge.moves.len());
    let mut c = exec.start.clone();
    let mut next_anchor = 0;
    for (index, m) in exec.steps.iter().enumerate() {
        let n = abstract_step(p, &c, m).map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
        if restrict(&c, old) != restrict(&n, old) {
            if anchors.get(next_anchor) != Some(m) {
                return Err(FootprintError::InconsistentProjections(next_anchor));
            }
            steps.append(&mut pending[next_anchor]);
            next_anchor += 1;
        }
        steps.push(*m);
        c = n;
    }
    if next_anchor != anchors.len() {
        return Err(FootprintError::InconsistentProjections(next_anchor));
    }
    steps.append(&mut pending[next_anchor]);
    Ok(Execution { start: exec.start.clone(), steps })
}

/// A step violating the normal form, with its index.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {0} is neither a read-later write, a desertion, nor a first population")]
pub struct NormalFormViolation(pub usize);

fn configs_of(p: &Protocol, exec: &Execution<AbstractConfig>) -> Result<Vec<AbstractConfig>, SemanticsError> {
    let mut out = vec![exec.start.clone()];
    for (index, m) in exec.steps.iter().enumerate() {
        let n = abstract_step(p, out.last().unwrap(), m).map_err(|reason| SemanticsError::NotEnabled { index, reason })?;
        out.push(n);
    }
    Ok(out)
}

/// Whether the write at `i` is read before being overwritten, or survives to the end.
fn write_is_used(steps: &[Move], i: usize) -> bool {
    let Action::Write { reg, sym } = steps[i].transition.action else {
        return false;
    };
    let k = steps[i].round;
    for m in &steps[i + 1..] {
        match m.transition.action {
            Action::Read { depth, reg: r, sym: s } if r == reg && m.round >= depth && m.round - depth == k => {
                if s == sym {
                    return true;
                }
            }
            Action::Write { reg: r, .. } if r == reg && m.round == k => return false,
            _ => {}
        }
    }
    true
}

fn really_deserts(m: &Move) -> bool {
    m.deserting && m.source() != m.dest()
}

/// Per-step normal-form flags: (used write, desertion, first population).
fn classify(configs: &[AbstractConfig], steps: &[Move]) -> Vec<(bool, bool, bool)> {
    let mut seen: BTreeSet<Loc> = configs[0].locs.clone();
    let mut out = Vec::with_capacity(steps.len());
    for (i, m) in steps.iter().enumerate() {
        let fresh = !seen.contains(&m.dest());
        seen.insert(m.dest());
        out.push((write_is_used(steps, i), really_deserts(m), fresh));
    }
    out
}

/// Checks every step against the normal-form conditions.
pub fn check_normal_form(p: &Protocol, exec: &Execution<AbstractConfig>) -> Result<(), NormalFormViolation> {
    let configs = configs_of(p, exec).map_err(|_| NormalFormViolation(0))?;
    for (i, (used, desert, fresh)) in classify(&configs, &exec.steps).into_iter().enumerate() {
        if !(used || desert || fresh) {
            return Err(NormalFormViolation(i));
        }
    }
    Ok(())
}

/// Number of steps taken at each round.
pub fn steps_per_round(exec: &Execution<AbstractConfig>) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for m in &exec.steps {
        *out.entry(m.round).or_insert(0) += 1;
    }
    out
}

/// Number of desertions of each location; at most one in normal form.
pub fn desertions(exec: &Execution<AbstractConfig>) -> BTreeMap<Loc, usize> {
    let mut out = BTreeMap::new();
    for m in exec.steps.iter().filter(|m| really_deserts(m)) {
        *out.entry(m.source()).or_insert(0) += 1;
    }
    out
}

/// Per-round step bound of normal-form executions: `|Q|(2v+5)`.
pub fn normal_form_round_bound(p: &Protocol) -> usize {
    p.num_states() * (2 * p.visibility as usize + 5)
}

/// Rewrites an execution into normal form with the same start and end.
///
/// Repeats until stable: desertions of locations that are populated again
/// later become non-deserting, non-deserting reads and increments that reach
/// an already seen location are dropped, and non-deserting writes that reach
/// a seen location and whose value is overwritten unread are dropped. A write
/// whose value survives to the end counts as read.
pub fn normalize_execution(p: &Protocol, exec: &Execution<AbstractConfig>) -> Result<Execution<AbstractConfig>, SemanticsError> {
    let end = configs_of(p, exec)?.pop().unwrap();
    let mut steps = exec.steps.clone();
    for m in &mut steps {
        if m.deserting && m.source() == m.dest() {
            m.deserting = false;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..steps.len() {
            if steps[i].deserting && steps[i + 1..].iter().any(|m| m.dest() == steps[i].source()) {
                steps[i].deserting = false;
                changed = true;
            }
        }
        let configs = configs_of(p, &Execution { start: exec.start.clone(), steps: steps.clone() })?;
        let flags = classify(&configs, &steps);
        let victim = flags.iter().position(|&(used, desert, fresh)| !(used || desert || fresh));
        if let Some(i) = victim {
            steps.remove(i);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let out = Execution { start: exec.start.clone(), steps };
    debug_assert_eq!(configs_of(p, &out)?.pop().unwrap(), end);
    Ok(out)
}

/// States of round `k` populated somewhere along the footprint.
pub fn ever_populated(fp: &Footprint, k: u32) -> BTreeSet<StateId> {
    fp.configs.iter().flat_map(|c| c.locs.iter().filter(move |l| l.round == k).map(|l| l.state)).collect()
}
