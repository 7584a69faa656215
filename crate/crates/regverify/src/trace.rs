//! Plain-text witness traces.
//!
//! ```text
//! start abstract: q0 ; d0
//! q0 read(1, d0) B keep
//! q0 write(1, c) A desert
//! ```
//!
//! The start line lists locations (`q@k` in round-based protocols, with
//! repeats for concrete counts) and, after `;`, the registers: one value per
//! register for roundless protocols, `k:j=sym` entries otherwise. Round-based
//! steps are prefixed with their round. Lines starting with `#` are ignored.

use thiserror::Error;

use crate::protocol::{parse_transition, Flavor, Protocol, D0};
use crate::semantics::{replay, AbstractConfig, Config, ConcreteConfig, Execution, Loc, Mode, Move, Registers, SemanticsError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("trace has no start line")]
    MissingStart,
    #[error(transparent)]
    Replay(#[from] SemanticsError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub start: Config,
    pub steps: Vec<Move>,
}

impl Trace {
    pub fn from_abstract(exec: &Execution<AbstractConfig>) -> Trace {
        Trace { start: Config::Abstract(exec.start.clone()), steps: exec.steps.clone() }
    }

    pub fn from_concrete(exec: &Execution<ConcreteConfig>) -> Trace {
        Trace { start: Config::Concrete(exec.start.clone()), steps: exec.steps.clone() }
    }

    pub fn mode(&self) -> Mode {
        match self.start {
            Config::Abstract(_) => Mode::Abstract,
            Config::Concrete(_) => Mode::Concrete,
        }
    }

    /// Replays the trace in its own semantics and returns the final configuration.
    pub fn replay(&self, p: &Protocol) -> Result<Config, TraceError> {
        Ok(replay(p, &self.start, &self.steps, self.mode())?)
    }
}

pub fn write_trace(p: &Protocol, t: &Trace) -> String {
    let mut s = match &t.start {
        Config::Abstract(c) => format!("start abstract: {}\n", c.display(p)),
        Config::Concrete(c) => format!("start concrete: {}\n", c.display(p)),
    };
    for m in &t.steps {
        if p.flavor == Flavor::RoundBased {
            s.push_str(&format!("{} ", m.round));
        }
        s.push_str(&p.transition_to_string(&m.transition));
        s.push_str(if m.deserting { " desert\n" } else { " keep\n" });
    }
    s
}

fn parse_start(p: &Protocol, line: usize, body: &str) -> Result<(Vec<Loc>, Registers), TraceError> {
    let err = |msg: String| TraceError::Syntax { line, msg };
    let (locs_s, regs_s) = body.split_once(';').ok_or_else(|| err("start line needs `;`".into()))?;
    let mut locs = Vec::new();
    for w in locs_s.split_whitespace() {
        let (name, round) = match p.flavor {
            Flavor::Roundless => (w, 0),
            Flavor::RoundBased => {
                let (n, k) = w.split_once('@').ok_or_else(|| err(format!("expected `state@round`, got `{w}`")))?;
                (n, k.parse::<u32>().map_err(|_| err(format!("bad round in `{w}`")))?)
            }
        };
        let q = p.state_id(name).ok_or_else(|| err(format!("unknown state `{name}`")))?;
        locs.push(Loc::new(q, round));
    }
    let mut regs = Registers::new();
    let sym = |s: &str| p.symbol_id(s).ok_or_else(|| err(format!("unknown symbol `{s}`")));
    match p.flavor {
        Flavor::Roundless => {
            let vals: Vec<&str> = regs_s.split_whitespace().collect();
            if vals.len() != p.registers {
                return Err(err(format!("expected {} register values, got {}", p.registers, vals.len())));
            }
            for (j, v) in vals.iter().enumerate() {
                let s = sym(v)?;
                if s != D0 {
                    regs.insert((0, j), s);
                }
            }
        }
        Flavor::RoundBased => {
            for w in regs_s.split_whitespace() {
                let bad = || err(format!("expected `round:register=symbol`, got `{w}`"));
                let (k, rest) = w.split_once(':').ok_or_else(bad)?;
                let (j, v) = rest.split_once('=').ok_or_else(bad)?;
                let k: u32 = k.parse().map_err(|_| bad())?;
                let j: usize = j.parse().map_err(|_| bad())?;
                if j == 0 || j > p.registers {
                    return Err(err(format!("register {j} out of range")));
                }
                let s = sym(v)?;
                if s != D0 {
                    regs.insert((k, j - 1), s);
                }
            }
        }
    }
    Ok((locs, regs))
}

pub fn parse_trace(p: &Protocol, text: &str) -> Result<Trace, TraceError> {
    let mut start = None;
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let err = |msg: String| TraceError::Syntax { line, msg };
        if start.is_none() {
            let (head, body) = l.split_once(':').ok_or_else(|| err("expected `start abstract|concrete: ...`".into()))?;
            let (locs, regs) = parse_start(p, line, body)?;
            start = Some(match head.trim() {
                "start abstract" => Config::Abstract(AbstractConfig { locs: locs.into_iter().collect(), regs }),
                "start concrete" => {
                    let mut c = ConcreteConfig { pop: Default::default(), regs };
                    for loc in locs {
                        c.add(loc, 1);
                    }
                    Config::Concrete(c)
                }
                other => return Err(err(format!("unknown start kind `{other}`"))),
            });
            continue;
        }
        let (rest, flag) = l.rsplit_once(char::is_whitespace).ok_or_else(|| err("step needs a desert|keep flag".into()))?;
        let deserting = match flag {
            "desert" => true,
            "keep" => false,
            other => return Err(err(format!("expected desert or keep, got `{other}`"))),
        };
        let (round, tr) = match p.flavor {
            Flavor::Roundless => (0, rest.trim()),
            Flavor::RoundBased => {
                let (k, tr) = rest.trim().split_once(char::is_whitespace).ok_or_else(|| err("step needs a round".into()))?;
                (k.parse::<u32>().map_err(|_| err(format!("bad round `{k}`")))?, tr.trim())
            }
        };
        let transition = parse_transition(p, tr).map_err(|e| err(e.to_string()))?;
        steps.push(Move::new(transition, round, deserting));
    }
    let start = start.ok_or(TraceError::MissingStart)?;
    Ok(Trace { start, steps })
}
