//! Benchmark generators from 3-SAT and the circuit value problem, each with
//! an independent ground truth, plus the built-in example protocols.

use thiserror::Error;

use crate::protocol::{parse_protocol, Action, Flavor, Protocol, StateId, Transition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("circuit has a cycle through wire `{0}`")]
    CyclicCircuit(String),
    #[error("wire `{0}` is used but never defined")]
    UndefinedWire(String),
    #[error("wire `{0}` is defined twice")]
    DuplicateWire(String),
    #[error("formula needs at least one variable and one clause")]
    EmptyFormula,
    #[error("literal {0} is out of range")]
    LiteralOutOfRange(i32),
    #[error("truth tables are capped at 20 variables, got {0}")]
    TooManyVariables(usize),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// A 3-CNF formula. Literals are `±j` for variable `j` in `1..=vars`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    pub vars: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl CnfFormula {
    pub fn new(vars: usize, clauses: Vec<[i32; 3]>) -> Result<CnfFormula, ReductionError> {
        if vars == 0 || clauses.is_empty() {
            return Err(ReductionError::EmptyFormula);
        }
        for c in &clauses {
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > vars {
                    return Err(ReductionError::LiteralOutOfRange(l));
                }
            }
        }
        Ok(CnfFormula { vars, clauses })
    }

    pub fn eval(&self, assignment: u32) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = assignment >> (l.unsigned_abs() - 1) & 1 == 1;
                if l > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }

    /// Satisfiability by truth table.
    pub fn satisfiable(&self) -> Result<bool, ReductionError> {
        if self.vars > 20 {
            return Err(ReductionError::TooManyVariables(self.vars));
        }
        Ok((0u32..1 << self.vars).any(|a| self.eval(a)))
    }

    /// DIMACS text.
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            s.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        s
    }
}

fn clause_state(i: usize, m: usize) -> String {
    if i > m {
        "qf".into()
    } else {
        format!("C{i}?")
    }
}

/// The 3-SAT to COVER construction: two registers per variable, one for each
/// literal, that can only go from `d0` to `true`. A literal holds when its
/// register holds `true` and the opposite one still holds `d0`. Clause `i`
/// is checked between `C<i>?` and `C<i+1>?`, and `qf` follows the last clause.
pub fn sat_to_cover(phi: &CnfFormula) -> (Protocol, StateId) {
    let n = phi.vars;
    let m = phi.clauses.len();
    let mut p = Protocol::new(Flavor::Roundless, 2 * n, &["d0", "true"], 0);
    let reg = |l: i32| -> usize {
        let j = l.unsigned_abs() as usize;
        if l > 0 {
            2 * j - 2
        } else {
            2 * j - 1
        }
    };
    let q0 = p.add_state("q0");
    p.set_initial(vec![q0]);
    let clauses: Vec<StateId> = (1..=m + 1).map(|i| p.add_state(&clause_state(i, m))).collect();
    let tru = p.symbol_id("true").unwrap();
    for r in 0..2 * n {
        p.add_transition(Transition { source: q0, action: Action::Write { reg: r, sym: tru }, dest: q0 });
    }
    p.add_transition(Transition { source: q0, action: Action::Read { depth: 0, reg: 0, sym: 0 }, dest: clauses[0] });
    for (i, c) in phi.clauses.iter().enumerate() {
        for (k, &l) in c.iter().enumerate() {
            let mid = p.add_state(&format!("T{}_{}_1", i + 1, k + 1));
            p.add_transition(Transition {
                source: clauses[i],
                action: Action::Read { depth: 0, reg: reg(l), sym: tru },
                dest: mid,
            });
            p.add_transition(Transition {
                source: mid,
                action: Action::Read { depth: 0, reg: reg(-l), sym: 0 },
                dest: clauses[i + 1],
            });
        }
    }
    let qf = clauses[m];
    (p, qf)
}

/// The 3-SAT to uninitialized TARGET construction: one register per
/// variable holding `true` or `false`, written freely from `q0`. Clause `i`
/// is left from `C<i>?` by reading a value that makes one of its literals
/// true; the target `qf` follows the last clause.
pub fn sat_to_uninit_target(phi: &CnfFormula) -> (Protocol, StateId) {
    let n = phi.vars;
    let m = phi.clauses.len();
    let mut p = Protocol::new(Flavor::Roundless, n, &["d0", "true", "false"], 0);
    let tru = p.symbol_id("true").unwrap();
    let fal = p.symbol_id("false").unwrap();
    let q0 = p.add_state("q0");
    p.set_initial(vec![q0]);
    let clauses: Vec<StateId> = (1..=m + 1).map(|i| p.add_state(&clause_state(i, m))).collect();
    for r in 0..n {
        p.add_transition(Transition { source: q0, action: Action::Write { reg: r, sym: tru }, dest: q0 });
        p.add_transition(Transition { source: q0, action: Action::Write { reg: r, sym: fal }, dest: q0 });
    }
    for sym in [tru, fal] {
        p.add_transition(Transition { source: q0, action: Action::Read { depth: 0, reg: 0, sym }, dest: clauses[0] });
    }
    for (i, c) in phi.clauses.iter().enumerate() {
        for &l in c {
            let sym = if l > 0 { tru } else { fal };
            let reg = l.unsigned_abs() as usize - 1;
            p.add_transition(Transition { source: clauses[i], action: Action::Read { depth: 0, reg, sym }, dest: clauses[i + 1] });
        }
    }
    (p, clauses[m])
}

/// A gate over named wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    Not { input: String, output: String },
    Or { left: String, right: String, output: String },
    And { left: String, right: String, output: String },
}

impl Gate {
    pub fn output(&self) -> &str {
        match self {
            Gate::Not { output, .. } | Gate::Or { output, .. } | Gate::And { output, .. } => output,
        }
    }

    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Gate::Not { input, .. } => vec![input],
            Gate::Or { left, right, .. } | Gate::And { left, right, .. } => vec![left, right],
        }
    }
}

/// A Boolean circuit with fixed input values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub inputs: Vec<(String, bool)>,
    pub gates: Vec<Gate>,
    pub output: String,
}

impl Circuit {
    /// Gates in an order where every wire is defined before it is used.
    pub fn topological_gates(&self) -> Result<Vec<&Gate>, ReductionError> {
        let mut defined: Vec<&str> = Vec::new();
        for (w, _) in &self.inputs {
            if defined.contains(&w.as_str()) {
                return Err(ReductionError::DuplicateWire(w.clone()));
            }
            defined.push(w);
        }
        for g in &self.gates {
            if defined.contains(&g.output()) {
                return Err(ReductionError::DuplicateWire(g.output().into()));
            }
            defined.push(g.output());
        }
        for g in &self.gates {
            for i in g.inputs() {
                if !defined.contains(&i) {
                    return Err(ReductionError::UndefinedWire(i.into()));
                }
            }
        }
        if !defined.contains(&self.output.as_str()) {
            return Err(ReductionError::UndefinedWire(self.output.clone()));
        }
        let mut ready: Vec<&str> = self.inputs.iter().map(|(w, _)| w.as_str()).collect();
        let mut left: Vec<&Gate> = self.gates.iter().collect();
        let mut out = Vec::new();
        while !left.is_empty() {
            let Some(pos) = left.iter().position(|g| g.inputs().iter().all(|i| ready.contains(i))) else {
                return Err(ReductionError::CyclicCircuit(left[0].output().into()));
            };
            let g = left.remove(pos);
            ready.push(g.output());
            out.push(g);
        }
        Ok(out)
    }

    /// Value of the output wire.
    pub fn evaluate(&self) -> Result<bool, ReductionError> {
        let mut val: Vec<(&str, bool)> = self.inputs.iter().map(|(w, b)| (w.as_str(), *b)).collect();
        let get = |val: &Vec<(&str, bool)>, w: &str| val.iter().find(|(x, _)| *x == w).map(|x| x.1).unwrap();
        for g in self.topological_gates()? {
            let v = match g {
                Gate::Not { input, .. } => !get(&val, input),
                Gate::Or { left, right, .. } => get(&val, left) || get(&val, right),
                Gate::And { left, right, .. } => get(&val, left) && get(&val, right),
            };
            val.push((g.output(), v));
        }
        Ok(get(&val, &self.output))
    }

    /// Line format: `input <w> true|false`, `not <out> <in>`,
    /// `and <out> <a> <b>`, `or <out> <a> <b>`, `output <w>`.
    pub fn parse(text: &str) -> Result<Circuit, ReductionError> {
        let mut c = Circuit { inputs: Vec::new(), gates: Vec::new(), output: String::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let w: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| ReductionError::Syntax { line: i + 1, msg: msg.into() };
            match w.as_slice() {
                ["input", name, v] => {
                    let b = match *v {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => return Err(err("input value must be true or false")),
                    };
                    c.inputs.push((name.to_string(), b));
                }
                ["not", o, a] => c.gates.push(Gate::Not { input: a.to_string(), output: o.to_string() }),
                ["and", o, a, b] => {
                    c.gates.push(Gate::And { left: a.to_string(), right: b.to_string(), output: o.to_string() })
                }
                ["or", o, a, b] => c.gates.push(Gate::Or { left: a.to_string(), right: b.to_string(), output: o.to_string() }),
                ["output", o] => c.output = o.to_string(),
                _ => return Err(err("expected input, not, and, or, or output")),
            }
        }
        if c.output.is_empty() {
            return Err(ReductionError::Syntax { line: 0, msg: "missing output line".into() });
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (w, b) in &self.inputs {
            s.push_str(&format!("input {w} {b}\n"));
        }
        for g in &self.gates {
            match g {
                Gate::Not { input, output } => s.push_str(&format!("not {output} {input}\n")),
                Gate::And { left, right, output } => s.push_str(&format!("and {output} {left} {right}\n")),
                Gate::Or { left, right, output } => s.push_str(&format!("or {output} {left} {right}\n")),
            }
        }
        s.push_str(&format!("output {}\n", self.output));
        s
    }
}

/// The circuit value to COVER construction with one register.
///
/// Every wire `w` has symbols `true_w` and `false_w`. An initial state writes
/// the input values; each gate has its own initial state from which a process
/// reads input values and then keeps writing the matching output value.
/// Every write of the desired output value also has a copy leading to `qf`.
pub fn cvp_to_cover(c: &Circuit, desired: bool) -> Result<(Protocol, StateId), ReductionError> {
    let gates = c.topological_gates()?;
    let mut p = Protocol::new(Flavor::Roundless, 1, &["d0"], 0);
    let mut wires: Vec<&str> = c.inputs.iter().map(|(w, _)| w.as_str()).collect();
    wires.extend(gates.iter().map(|g| g.output()));
    for w in &wires {
        p.add_symbol(&format!("true_{w}"));
        p.add_symbol(&format!("false_{w}"));
    }
    let sym = |p: &Protocol, w: &str, b: bool| p.symbol_id(&format!("{}_{w}", if b { "true" } else { "false" })).unwrap();
    let write = |src, s, dst| Transition { source: src, action: Action::Write { reg: 0, sym: s }, dest: dst };
    let read = |src, s, dst| Transition { source: src, action: Action::Read { depth: 0, reg: 0, sym: s }, dest: dst };
    let mut initial = Vec::new();
    let inp = p.add_state("in");
    initial.push(inp);
    for (w, b) in &c.inputs {
        let s = sym(&p, w, *b);
        p.add_transition(write(inp, s, inp));
    }
    for (gi, g) in gates.iter().enumerate() {
        let o = g.output();
        let entry = p.add_state(&format!("g{}", gi + 1));
        initial.push(entry);
        match g {
            Gate::Not { input, .. } => {
                let t = p.add_state(&format!("g{}_t", gi + 1));
                let f = p.add_state(&format!("g{}_f", gi + 1));
                p.add_transition(read(entry, sym(&p, input, false), t));
                p.add_transition(read(entry, sym(&p, input, true), f));
                p.add_transition(write(t, sym(&p, o, true), t));
                p.add_transition(write(f, sym(&p, o, false), f));
            }
            Gate::And { left, right, .. } | Gate::Or { left, right, .. } => {
                // `short` is the input value that decides the gate alone.
                let short = matches!(g, Gate::Or { .. });
                let s = p.add_state(&format!("g{}_{}", gi + 1, if short { "t" } else { "f" }));
                let h1 = p.add_state(&format!("g{}_h1", gi + 1));
                let h2 = p.add_state(&format!("g{}_h2", gi + 1));
                p.add_transition(read(entry, sym(&p, left, short), s));
                p.add_transition(read(entry, sym(&p, right, short), s));
                p.add_transition(write(s, sym(&p, o, short), s));
                p.add_transition(read(entry, sym(&p, left, !short), h1));
                p.add_transition(read(h1, sym(&p, right, !short), h2));
                p.add_transition(write(h2, sym(&p, o, !short), h2));
            }
        }
    }
    p.set_initial(initial);
    let qf = p.add_state("qf");
    let goal = sym(&p, &c.output, desired);
    let sources: Vec<StateId> =
        p.transitions.iter().filter(|t| t.action == Action::Write { reg: 0, sym: goal }).map(|t| t.source).collect();
    for s in sources {
        p.add_transition(write(s, goal, qf));
    }
    Ok((p, qf))
}

pub const FIG1: &str = "\
# roundless example with one register
flavor: roundless
states: q0 A B C qf
initial: q0
registers: 1
alphabet: d0 a b c
transitions:
  q0 read(1, d0) B
  q0 write(1, c) A
  B read(1, d0) C
  C read(1, c) A
  A read(1, a) qf
  qf write(1, b) A
  C read(1, b) qf
  C write(1, a) C
";

pub const FIG4: &str = "\
# round-based example, visibility 1
flavor: roundbased
states: q0 A B C D E qf
initial: q0
registers: 1
alphabet: d0 a b
visibility: 1
transitions:
  q0 inc q0
  q0 write(1, a) A
  A read(-1, 1, d0) B
  B read(-1, 1, a) C
  C write(1, b) q0
  q0 read(-1, 1, b) D
  D read(0, 1, d0) E
  E read(0, 1, b) qf
";

/// A named constraint over one of the built-in protocols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinConstraint {
    pub name: &'static str,
    pub protocol: &'static str,
    pub text: &'static str,
}

/// The built-in protocols: `fig1`, its variants `fig1_blue` (the `q0 -> B`
/// edge reads `c`) and `fig1_red` (the `C -> A` edge writes `a`), and `fig4`.
pub fn builtin_examples() -> Vec<(&'static str, Protocol)> {
    let fig1 = parse_protocol(FIG1).expect("built-in protocol parses");
    let mut blue = fig1.clone();
    let mut red = fig1.clone();
    let (q0, b, c, a) = (0, 2, 3, 1);
    let (sa, sc) = (fig1.symbol_id("a").unwrap(), fig1.symbol_id("c").unwrap());
    for t in &mut blue.transitions {
        if t.source == q0 && t.dest == b {
            t.action = Action::Read { depth: 0, reg: 0, sym: sc };
        }
    }
    for t in &mut red.transitions {
        if t.source == c && t.dest == a {
            t.action = Action::Write { reg: 0, sym: sa };
        }
    }
    let fig4 = parse_protocol(FIG4).expect("built-in protocol parses");
    vec![("fig1", fig1), ("fig1_blue", blue), ("fig1_red", red), ("fig4", fig4)]
}

pub fn builtin_example(name: &str) -> Option<Protocol> {
    builtin_examples().into_iter().find(|(n, _)| *n == name).map(|x| x.1)
}

/// Constraints used with the built-in protocols.
pub fn builtin_constraints() -> Vec<BuiltinConstraint> {
    vec![
        BuiltinConstraint { name: "cover_qf", protocol: "fig1", text: "(pop qf)" },
        BuiltinConstraint {
            name: "target_qf",
            protocol: "fig1",
            text: "(and (pop qf) (not (pop q0)) (not (pop A)) (not (pop B)) (not (pop C)))",
        },
        BuiltinConstraint {
            name: "no_c_then_a",
            protocol: "fig1",
            text: "(and (not (pop C)) (or (reg 1 a) (and (reg 1 b) (not (pop A)))))",
        },
        BuiltinConstraint { name: "psi", protocol: "fig4", text: "(exists k (pop qf k))" },
        BuiltinConstraint { name: "psi1", protocol: "fig4", text: "(exists k (and (pop E k) (pop E (+ k 1))))" },
        BuiltinConstraint {
            name: "psi2",
            protocol: "fig4",
            text: "(and (pop E 2) (forall k (or (reg 1 (+ k 1) b) (reg 1 (+ k 1) d0))))",
        },
    ]
}
