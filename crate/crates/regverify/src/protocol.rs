//! Register protocols, their text format and structural validation.
//!
//! A single [`Protocol`] type covers both flavors. Roundless protocols have one
//! bank of registers; round-based protocols get a fresh bank per round and a
//! visibility range bounding how far back a read may look.
//!
//! States, symbols and registers are dense 0-based ids. The file format and the
//! printed form index registers from 1.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

pub type StateId = usize;
pub type SymId = usize;
pub type RegId = usize;

/// The initial symbol `d0` is always the first alphabet entry.
pub const D0: SymId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Roundless,
    RoundBased,
}

/// An action label. Roundless reads always carry depth 0 and never use `Inc`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Read { depth: u32, reg: RegId, sym: SymId },
    Write { reg: RegId, sym: SymId },
    Inc,
}

impl Action {
    pub fn is_read(&self) -> bool {
        matches!(self, Action::Read { .. })
    }

    pub fn is_write(&self) -> bool {
        matches!(self, Action::Write { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub source: StateId,
    pub action: Action,
    pub dest: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub flavor: Flavor,
    pub states: Vec<String>,
    /// Initial states, sorted by id.
    pub initial: Vec<StateId>,
    pub registers: usize,
    /// Alphabet in declaration order; entry 0 is `d0`.
    pub alphabet: Vec<String>,
    /// Visibility range; always 0 for roundless protocols.
    pub visibility: u32,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: unknown state `{name}`")]
    UnknownState { line: usize, name: String },
    #[error("line {line}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, name: String },
    #[error("line {line}: register {index} out of range 1..={max}")]
    RegisterOutOfRange { line: usize, index: i64, max: usize },
    #[error("line {line}: read depth {depth} exceeds visibility {visibility}")]
    DepthOutOfRange { line: usize, depth: i64, visibility: u32 },
    #[error("line {line}: write of initial symbol `{name}`")]
    WriteOfInitialSymbol { line: usize, name: String },
    #[error("line {line}: `{what}` is not allowed in a roundless protocol")]
    NotRoundless { line: usize, what: String },
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("flavor `{0}` disagrees with the presence of `visibility`")]
    FlavorMismatch(String),
    #[error("{0}")]
    Invalid(String),
}

/// One violated invariant reported by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    UnknownState { transition: usize, state: StateId },
    UnknownInitialState(StateId),
    UnknownSymbol { transition: usize, symbol: SymId },
    RegisterOutOfRange { transition: usize, register: RegId },
    DepthOutOfRange { transition: usize, depth: u32 },
    WriteOfInitialSymbol { transition: usize },
    RoundActionInRoundless { transition: usize },
    DuplicateTransition { transition: usize },
    DuplicateStateName(String),
    DuplicateSymbolName(String),
    EmptyAlphabet,
    NoRegisters,
    NoStates,
    VisibilityInRoundless,
}

impl Protocol {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_round_based(&self) -> bool {
        self.flavor == Flavor::RoundBased
    }

    /// |Q| + |D| + |Δ| + r, plus v for round-based protocols.
    pub fn size(&self) -> usize {
        let base = self.states.len() + self.alphabet.len() + self.transitions.len() + self.registers;
        match self.flavor {
            Flavor::Roundless => base,
            Flavor::RoundBased => base + self.visibility as usize,
        }
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymId> {
        self.alphabet.iter().position(|s| s == name)
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initial.binary_search(&q).is_ok()
    }

    /// Appends a transition unless an identical one already exists.
    pub fn add_transition(&mut self, t: Transition) -> bool {
        if self.transitions.contains(&t) {
            false
        } else {
            self.transitions.push(t);
            true
        }
    }

    /// Adds a state and returns its id; reuses an existing state of the same name.
    pub fn add_state(&mut self, name: &str) -> StateId {
        match self.state_id(name) {
            Some(id) => id,
            None => {
                self.states.push(name.to_string());
                self.states.len() - 1
            }
        }
    }

    pub fn add_symbol(&mut self, name: &str) -> SymId {
        match self.symbol_id(name) {
            Some(id) => id,
            None => {
                self.alphabet.push(name.to_string());
                self.alphabet.len() - 1
            }
        }
    }

    pub fn set_initial(&mut self, mut initial: Vec<StateId>) {
        initial.sort_unstable();
        initial.dedup();
        self.initial = initial;
    }

    /// Empty protocol shell with the given alphabet (first entry is `d0`).
    pub fn new(flavor: Flavor, registers: usize, alphabet: &[&str], visibility: u32) -> Protocol {
        Protocol {
            flavor,
            states: Vec::new(),
            initial: Vec::new(),
            registers,
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            visibility: if flavor == Flavor::RoundBased { visibility } else { 0 },
            transitions: Vec::new(),
        }
    }

    pub fn action_to_string(&self, a: &Action) -> String {
        match *a {
            Action::Read { depth, reg, sym } => match self.flavor {
                Flavor::Roundless => format!("read({}, {})", reg + 1, self.alphabet[sym]),
                Flavor::RoundBased if depth == 0 => format!("read(0, {}, {})", reg + 1, self.alphabet[sym]),
                Flavor::RoundBased => format!("read(-{}, {}, {})", depth, reg + 1, self.alphabet[sym]),
            },
            Action::Write { reg, sym } => format!("write({}, {})", reg + 1, self.alphabet[sym]),
            Action::Inc => "inc".to_string(),
        }
    }

    pub fn transition_to_string(&self, t: &Transition) -> String {
        format!("{} {} {}", self.states[t.source], self.action_to_string(&t.action), self.states[t.dest])
    }

    /// Canonical text form; `parse_protocol(&p.to_text()) == Ok(p)` for valid protocols.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let flavor = match self.flavor {
            Flavor::Roundless => "roundless",
            Flavor::RoundBased => "roundbased",
        };
        out.push_str(&format!("flavor: {flavor}\n"));
        out.push_str(&format!("states: {}\n", self.states.join(" ")));
        let init: Vec<&str> = self.initial.iter().map(|&q| self.states[q].as_str()).collect();
        out.push_str(&format!("initial: {}\n", init.join(" ")).replace(": \n", ":\n"));
        out.push_str(&format!("registers: {}\n", self.registers));
        out.push_str(&format!("alphabet: {}\n", self.alphabet.join(" ")));
        if self.flavor == Flavor::RoundBased {
            out.push_str(&format!("visibility: {}\n", self.visibility));
        }
        out.push_str("transitions:\n");
        for t in &self.transitions {
            out.push_str("  ");
            out.push_str(&self.transition_to_string(t));
            out.push('\n');
        }
        out
    }

    /// Looks up the first transition matching `(source, action, dest)`.
    pub fn find_transition(&self, t: &Transition) -> Option<usize> {
        self.transitions.iter().position(|x| x == t)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// True iff no transition reads `d0`.
pub fn is_uninitialized(p: &Protocol) -> bool {
    !p.transitions
        .iter()
        .any(|t| matches!(t.action, Action::Read { sym, .. } if sym == D0))
}

/// Reports every violated structural invariant; an empty list means valid.
pub fn validate(p: &Protocol) -> Vec<Finding> {
    let mut out = Vec::new();
    if p.states.is_empty() {
        out.push(Finding::NoStates);
    }
    if p.alphabet.is_empty() {
        out.push(Finding::EmptyAlphabet);
    }
    if p.registers == 0 {
        out.push(Finding::NoRegisters);
    }
    if p.flavor == Flavor::Roundless && p.visibility != 0 {
        out.push(Finding::VisibilityInRoundless);
    }
    let mut seen = HashSet::new();
    for s in &p.states {
        if !seen.insert(s) {
            out.push(Finding::DuplicateStateName(s.clone()));
        }
    }
    let mut seen = HashSet::new();
    for s in &p.alphabet {
        if !seen.insert(s) {
            out.push(Finding::DuplicateSymbolName(s.clone()));
        }
    }
    for &q in &p.initial {
        if q >= p.states.len() {
            out.push(Finding::UnknownInitialState(q));
        }
    }
    let mut seen = HashSet::new();
    for (i, t) in p.transitions.iter().enumerate() {
        for q in [t.source, t.dest] {
            if q >= p.states.len() {
                out.push(Finding::UnknownState { transition: i, state: q });
            }
        }
        if !seen.insert(*t) {
            out.push(Finding::DuplicateTransition { transition: i });
        }
        match t.action {
            Action::Read { depth, reg, sym } => {
                check_reg_sym(p, i, reg, sym, &mut out);
                if depth > 0 {
                    if p.flavor == Flavor::Roundless {
                        out.push(Finding::RoundActionInRoundless { transition: i });
                    } else if depth > p.visibility {
                        out.push(Finding::DepthOutOfRange { transition: i, depth });
                    }
                }
            }
            Action::Write { reg, sym } => {
                check_reg_sym(p, i, reg, sym, &mut out);
                if sym == D0 {
                    out.push(Finding::WriteOfInitialSymbol { transition: i });
                }
            }
            Action::Inc => {
                if p.flavor == Flavor::Roundless {
                    out.push(Finding::RoundActionInRoundless { transition: i });
                }
            }
        }
    }
    out
}

fn check_reg_sym(p: &Protocol, i: usize, reg: RegId, sym: SymId, out: &mut Vec<Finding>) {
    if reg >= p.registers {
        out.push(Finding::RegisterOutOfRange { transition: i, register: reg });
    }
    if sym >= p.alphabet.len() {
        out.push(Finding::UnknownSymbol { transition: i, symbol: sym });
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '?' | '\'' | '.' | '!' | '$' | '~')
}

/// Cursor over one line, tracking 1-based columns for error messages.
pub(crate) struct Cursor<'a> {
    pub line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(line: usize, text: &'a str) -> Self {
        Cursor { line, text, pos: 0 }
    }

    pub fn col(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    pub fn err(&self, msg: impl Into<String>) -> ProtocolError {
        ProtocolError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    pub fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    pub fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    pub fn expect(&mut self, c: char) -> Result<(), ProtocolError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    pub fn ident(&mut self) -> Result<&'a str, ProtocolError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            Err(self.err("expected an identifier"))
        } else {
            Ok(&self.text[start..self.pos])
        }
    }

    pub fn int(&mut self) -> Result<i64, ProtocolError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| ProtocolError::Syntax { line: self.line, col: start + 1, msg: "expected an integer".into() })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

struct Header {
    flavor: Option<(usize, String)>,
    states: Option<(usize, String)>,
    initial: Option<(usize, String)>,
    registers: Option<(usize, String)>,
    alphabet: Option<(usize, String)>,
    visibility: Option<(usize, String)>,
}

/// Parses the line-oriented protocol format.
///
/// ```text
/// flavor: roundless
/// states: q0 A B C qf
/// initial: q0
/// registers: 1
/// alphabet: d0 a b c
/// transitions:
///   q0 read(1, d0) B
///   q0 write(1, c) A
/// ```
///
/// A protocol is round-based iff a `visibility` key is present. Duplicate
/// transitions are collapsed.
pub fn parse_protocol(text: &str) -> Result<Protocol, ProtocolError> {
    let mut header = Header {
        flavor: None,
        states: None,
        initial: None,
        registers: None,
        alphabet: None,
        visibility: None,
    };
    let mut transition_lines: Vec<(usize, &str)> = Vec::new();
    let mut in_transitions = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim_start();
        let key_end = trimmed.find(':');
        let is_key = key_end
            .map(|k| !trimmed[..k].is_empty() && trimmed[..k].chars().all(|c| c.is_ascii_alphabetic()))
            .unwrap_or(false);
        if is_key {
            let k = key_end.unwrap();
            let key = &trimmed[..k];
            let value = trimmed[k + 1..].trim().to_string();
            let slot = match key {
                "flavor" => &mut header.flavor,
                "states" => &mut header.states,
                "initial" => &mut header.initial,
                "registers" => &mut header.registers,
                "alphabet" => &mut header.alphabet,
                "visibility" => &mut header.visibility,
                "transitions" => {
                    if in_transitions || !transition_lines.is_empty() {
                        return Err(ProtocolError::DuplicateKey(key.into()));
                    }
                    in_transitions = true;
                    if !value.is_empty() {
                        let col = raw.find(':').unwrap() + 2;
                        return Err(ProtocolError::Syntax {
                            line: lineno,
                            col,
                            msg: "transitions start on the following lines".into(),
                        });
                    }
                    continue;
                }
                other => {
                    let col = raw.len() - trimmed.len() + 1;
                    return Err(ProtocolError::Syntax { line: lineno, col, msg: format!("unknown key `{other}`") });
                }
            };
            if slot.is_some() {
                return Err(ProtocolError::DuplicateKey(key.into()));
            }
            *slot = Some((lineno, value));
            in_transitions = false;
        } else if in_transitions {
            transition_lines.push((lineno, line));
        } else {
            let col = raw.len() - trimmed.len() + 1;
            return Err(ProtocolError::Syntax { line: lineno, col, msg: "expected `key: value`".into() });
        }
    }

    let flavor = match (&header.flavor, &header.visibility) {
        (None, None) => Flavor::Roundless,
        (None, Some(_)) => Flavor::RoundBased,
        (Some((_, f)), vis) => match (f.as_str(), vis.is_some()) {
            ("roundless", false) => Flavor::Roundless,
            ("roundbased", true) => Flavor::RoundBased,
            ("roundless", true) | ("roundbased", false) => return Err(ProtocolError::FlavorMismatch(f.clone())),
            (_, _) => {
                let line = header.flavor.as_ref().unwrap().0;
                return Err(ProtocolError::Syntax { line, col: 1, msg: format!("unknown flavor `{f}`") });
            }
        },
    };

    let (states_line, states_v) = header.states.ok_or_else(|| ProtocolError::MissingKey("states".into()))?;
    let (alpha_line, alpha_v) = header.alphabet.ok_or_else(|| ProtocolError::MissingKey("alphabet".into()))?;
    let (reg_line, reg_v) = header.registers.ok_or_else(|| ProtocolError::MissingKey("registers".into()))?;

    let mut p = Protocol::new(flavor, 0, &[], 0);
    for s in states_v.split_whitespace() {
        check_ident(s, states_line)?;
        if p.state_id(s).is_some() {
            return Err(ProtocolError::DuplicateState(s.into()));
        }
        p.states.push(s.into());
    }
    if p.states.is_empty() {
        return Err(ProtocolError::Invalid("a protocol needs at least one state".into()));
    }
    for s in alpha_v.split_whitespace() {
        check_ident(s, alpha_line)?;
        if p.symbol_id(s).is_some() {
            return Err(ProtocolError::DuplicateSymbol(s.into()));
        }
        p.alphabet.push(s.into());
    }
    if p.alphabet.is_empty() {
        return Err(ProtocolError::Invalid("the alphabet needs at least the initial symbol".into()));
    }
    p.registers = reg_v
        .parse::<usize>()
        .ok()
        .filter(|&r| r >= 1)
        .ok_or_else(|| ProtocolError::Syntax { line: reg_line, col: 1, msg: "registers must be a positive integer".into() })?;
    if let Some((line, v)) = &header.visibility {
        p.visibility = v
            .parse::<u32>()
            .map_err(|_| ProtocolError::Syntax { line: *line, col: 1, msg: "visibility must be a natural number".into() })?;
    }
    let mut initial = Vec::new();
    if let Some((line, v)) = &header.initial {
        for s in v.split_whitespace() {
            let q = p.state_id(s).ok_or_else(|| ProtocolError::UnknownState { line: *line, name: s.into() })?;
            initial.push(q);
        }
    }
    p.set_initial(initial);

    for (lineno, line) in transition_lines {
        let t = parse_transition_line(&p, lineno, line)?;
        p.add_transition(t);
    }
    let findings = validate(&p);
    if let Some(f) = findings.first() {
        return Err(ProtocolError::Invalid(format!("{f:?}")));
    }
    Ok(p)
}

fn check_ident(s: &str, line: usize) -> Result<(), ProtocolError> {
    if s.chars().all(is_ident_char) {
        Ok(())
    } else {
        Err(ProtocolError::Syntax { line, col: 1, msg: format!("invalid name `{s}`") })
    }
}

fn parse_transition_line(p: &Protocol, lineno: usize, line: &str) -> Result<Transition, ProtocolError> {
    let mut cur = Cursor::new(lineno, line);
    let src = cur.ident()?;
    let source = p.state_id(src).ok_or_else(|| ProtocolError::UnknownState { line: lineno, name: src.into() })?;
    let action = parse_action(p, &mut cur)?;
    let dst = cur.ident()?;
    let dest = p.state_id(dst).ok_or_else(|| ProtocolError::UnknownState { line: lineno, name: dst.into() })?;
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input"));
    }
    Ok(Transition { source, action, dest })
}

/// Parses `read(j, a)`, `read(-i, j, a)`, `write(j, a)` or `inc`.
pub(crate) fn parse_action(p: &Protocol, cur: &mut Cursor<'_>) -> Result<Action, ProtocolError> {
    let line = cur.line;
    let kw = cur.ident()?;
    match kw {
        "inc" => {
            if p.flavor == Flavor::Roundless {
                return Err(ProtocolError::NotRoundless { line, what: "inc".into() });
            }
            Ok(Action::Inc)
        }
        "read" | "write" => {
            cur.expect('(')?;
            let mut nums = vec![cur.int()?];
            cur.expect(',')?;
            cur.skip_ws();
            if matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == '-') {
                nums.push(cur.int()?);
                cur.expect(',')?;
            }
            let sym_name = cur.ident()?;
            cur.expect(')')?;
            let sym = p
                .symbol_id(sym_name)
                .ok_or_else(|| ProtocolError::UnknownSymbol { line, name: sym_name.into() })?;
            let (depth, reg) = match (kw, nums.as_slice()) {
                ("read", [j]) => (0, *j),
                ("read", [i, j]) => {
                    if p.flavor == Flavor::Roundless {
                        return Err(ProtocolError::NotRoundless { line, what: "read depth".into() });
                    }
                    if *i > 0 {
                        return Err(ProtocolError::Syntax {
                            line,
                            col: 1,
                            msg: "read depth is written as a non-positive offset `-i`".into(),
                        });
                    }
                    if -*i > p.visibility as i64 {
                        return Err(ProtocolError::DepthOutOfRange { line, depth: -*i, visibility: p.visibility });
                    }
                    (-*i as u32, *j)
                }
                ("write", [j]) => (0, *j),
                _ => return Err(cur.err("wrong number of arguments")),
            };
            if reg < 1 || reg as usize > p.registers {
                return Err(ProtocolError::RegisterOutOfRange { line, index: reg, max: p.registers });
            }
            let reg = reg as usize - 1;
            if kw == "write" {
                if sym == D0 {
                    return Err(ProtocolError::WriteOfInitialSymbol { line, name: sym_name.into() });
                }
                Ok(Action::Write { reg, sym })
            } else {
                Ok(Action::Read { depth, reg, sym })
            }
        }
        other => Err(ProtocolError::Syntax { line, col: 1, msg: format!("unknown action `{other}`") }),
    }
}

/// Parses a single `source action dest` line against `p`.
pub fn parse_transition(p: &Protocol, text: &str) -> Result<Transition, ProtocolError> {
    parse_transition_line(p, 1, text)
}
