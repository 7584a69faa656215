#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use regverify::constraints::{Formula, RlAtom, RoundConstraint, RoundlessConstraint};
use regverify::protocol::{parse_protocol, Action, Flavor, Protocol, Transition};
use regverify::reductions::builtin_example;
use regverify::semantics::{abstract_successors, all_initial_configurations, concrete_step, project, AbstractConfig, ConcreteConfig, Execution, Loc, Move};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example(name: &str) -> Protocol {
    builtin_example(name).unwrap()
}

pub fn protocol(text: &str) -> Protocol {
    parse_protocol(text).unwrap()
}

/// Shape bounds for random protocols.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub states: usize,
    pub symbols: usize,
    pub registers: usize,
    pub transitions: usize,
    pub visibility: u32,
    pub round_based: bool,
}

impl Shape {
    pub fn roundless(states: usize, symbols: usize, registers: usize, transitions: usize) -> Shape {
        Shape { states, symbols, registers, transitions, visibility: 0, round_based: false }
    }

    pub fn round_based(states: usize, symbols: usize, registers: usize, transitions: usize, visibility: u32) -> Shape {
        Shape { states, symbols, registers, transitions, visibility, round_based: true }
    }
}

const SYMBOLS: [&str; 5] = ["d0", "a", "b", "c", "e"];

/// A random protocol within `shape`; sizes are drawn uniformly up to the bounds.
pub fn random_protocol(rng: &mut ChaCha8Rng, shape: Shape) -> Protocol {
    let n = rng.gen_range(2..=shape.states.max(2));
    let d = rng.gen_range(2..=shape.symbols.max(2));
    let r = rng.gen_range(1..=shape.registers.max(1));
    let v = if shape.round_based { rng.gen_range(0..=shape.visibility) } else { 0 };
    let flavor = if shape.round_based { Flavor::RoundBased } else { Flavor::Roundless };
    let mut p = Protocol::new(flavor, r, &SYMBOLS[..d], v);
    for i in 0..n {
        p.add_state(&format!("q{i}"));
    }
    let mut init = vec![0];
    if n > 2 && rng.gen_bool(0.2) {
        init.push(1);
    }
    p.set_initial(init);
    let m = rng.gen_range(1..=shape.transitions.max(1));
    for _ in 0..m {
        let source = rng.gen_range(0..n);
        let dest = rng.gen_range(0..n);
        let roll = rng.gen_range(0..10);
        let action = if shape.round_based && roll == 0 {
            Action::Inc
        } else if roll < 5 {
            Action::Write { reg: rng.gen_range(0..r), sym: rng.gen_range(1..d) }
        } else {
            Action::Read { depth: rng.gen_range(0..=v), reg: rng.gen_range(0..r), sym: rng.gen_range(0..d) }
        };
        p.add_transition(Transition { source, action, dest });
    }
    if shape.round_based && !p.transitions.iter().any(|t| t.action == Action::Inc) && rng.gen_bool(0.8) {
        let q = rng.gen_range(0..n);
        p.add_transition(Transition { source: q, action: Action::Inc, dest: rng.gen_range(0..n) });
    }
    p
}

fn random_rl_atom(rng: &mut ChaCha8Rng, p: &Protocol) -> RoundlessConstraint {
    if rng.gen_bool(0.6) {
        Formula::Atom(RlAtom::Pop(rng.gen_range(0..p.num_states())))
    } else {
        Formula::Atom(RlAtom::Reg(rng.gen_range(0..p.registers), rng.gen_range(0..p.num_symbols())))
    }
}

pub fn random_roundless_constraint(rng: &mut ChaCha8Rng, p: &Protocol, depth: u32) -> RoundlessConstraint {
    if depth == 0 || rng.gen_bool(0.3) {
        let a = random_rl_atom(rng, p);
        return if rng.gen_bool(0.3) { Formula::not(a) } else { a };
    }
    match rng.gen_range(0..3) {
        0 => Formula::not(random_roundless_constraint(rng, p, depth - 1)),
        1 => Formula::And((0..rng.gen_range(2..=3)).map(|_| random_roundless_constraint(rng, p, depth - 1)).collect()),
        _ => Formula::Or((0..rng.gen_range(2..=3)).map(|_| random_roundless_constraint(rng, p, depth - 1)).collect()),
    }
}

/// A disjunction of conjunctions of literals.
pub fn random_dnf(rng: &mut ChaCha8Rng, p: &Protocol) -> RoundlessConstraint {
    let clauses = (0..rng.gen_range(1..=3))
        .map(|_| {
            Formula::And(
                (0..rng.gen_range(1..=3))
                    .map(|_| {
                        let a = random_rl_atom(rng, p);
                        if rng.gen_bool(0.35) {
                            Formula::not(a)
                        } else {
                            a
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Formula::Or(clauses)
}

fn random_term(rng: &mut ChaCha8Rng, bound: bool, max_c: u32) -> String {
    let c = rng.gen_range(0..=max_c);
    match (bound, c) {
        (true, 0) => "k".into(),
        (true, c) => format!("(+ k {c})"),
        (false, c) => c.to_string(),
    }
}

fn random_rb_atom(rng: &mut ChaCha8Rng, p: &Protocol, bound: bool, max_c: u32) -> String {
    let a = if rng.gen_bool(0.6) {
        format!("(pop {} {})", p.states[rng.gen_range(0..p.num_states())], random_term(rng, bound, max_c))
    } else {
        format!(
            "(reg {} {} {})",
            rng.gen_range(1..=p.registers),
            random_term(rng, bound, max_c),
            p.alphabet[rng.gen_range(0..p.num_symbols())]
        )
    };
    if rng.gen_bool(0.3) {
        format!("(not {a})")
    } else {
        a
    }
}

fn random_prop(rng: &mut ChaCha8Rng, p: &Protocol, bound: bool, max_c: u32) -> String {
    match rng.gen_range(0..3) {
        0 => random_rb_atom(rng, p, bound, max_c),
        1 => format!("(and {} {})", random_rb_atom(rng, p, bound, max_c), random_rb_atom(rng, p, bound, max_c)),
        _ => format!("(or {} {})", random_rb_atom(rng, p, bound, max_c), random_rb_atom(rng, p, bound, max_c)),
    }
}

fn random_apc(rng: &mut ChaCha8Rng, p: &Protocol, max_c: u32) -> String {
    match rng.gen_range(0..4) {
        0 => random_prop(rng, p, false, max_c),
        1 | 2 => format!("(exists k {})", random_prop(rng, p, true, max_c)),
        _ => format!("(forall k {})", random_prop(rng, p, true, max_c)),
    }
}

/// Text of a random round-based constraint with constants at most `max_c`.
pub fn random_roundbased_text(rng: &mut ChaCha8Rng, p: &Protocol, max_c: u32) -> String {
    match rng.gen_range(0..4) {
        0 | 1 => random_apc(rng, p, max_c),
        2 => format!("(and {} {})", random_apc(rng, p, max_c), random_apc(rng, p, max_c)),
        _ => format!("(not {})", random_apc(rng, p, max_c)),
    }
}

pub fn random_roundbased_constraint(rng: &mut ChaCha8Rng, p: &Protocol, max_c: u32) -> RoundConstraint {
    regverify::parse_roundbased(p, &random_roundbased_text(rng, p, max_c)).unwrap()
}

/// A random abstract execution of at most `len` steps, staying in rounds `0..=max_round`.
pub fn random_execution(rng: &mut ChaCha8Rng, p: &Protocol, len: usize, max_round: u32) -> Execution<AbstractConfig> {
    let inits = all_initial_configurations(p);
    let start = inits.choose(rng).unwrap().clone();
    let mut c = start.clone();
    let mut steps = Vec::new();
    for _ in 0..len {
        let succ: Vec<(Move, AbstractConfig)> = abstract_successors(p, &c, Some((0, max_round)))
            .unwrap()
            .into_iter()
            .filter(|(m, n)| m.dest().round <= max_round && *n != c)
            .collect();
        let Some((m, n)) = succ.choose(rng).cloned() else {
            break;
        };
        steps.push(m);
        c = n;
    }
    Execution { start, steps }
}

/// Supports of every configuration reachable with exactly `n` processes,
/// moves limited to rounds whose effect stays within `max_round`.
pub fn concrete_supports(p: &Protocol, n: usize, max_round: u32) -> HashSet<AbstractConfig> {
    let mut starts = Vec::new();
    fn spread(p: &Protocol, left: usize, from: usize, cur: &mut ConcreteConfig, out: &mut Vec<ConcreteConfig>) {
        if from == p.initial.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for take in 0..=left {
            let mut next = cur.clone();
            next.add(Loc::new(p.initial[from], 0), take);
            spread(p, left - take, from + 1, &mut next, out);
        }
    }
    spread(p, n, 0, &mut ConcreteConfig::default(), &mut starts);
    let mut seen: HashSet<ConcreteConfig> = HashSet::new();
    let mut out = HashSet::new();
    let mut queue = VecDeque::new();
    for s in starts {
        if seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    while let Some(c) = queue.pop_front() {
        out.insert(project(&c));
        let locs: Vec<Loc> = c.pop.keys().copied().collect();
        for t in &p.transitions {
            for l in locs.iter().filter(|l| l.state == t.source) {
                let m = Move::new(*t, l.round, false);
                if m.dest().round > max_round {
                    continue;
                }
                if let Ok(next) = concrete_step(p, &c, &m) {
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    out
}

pub fn states_of(p: &Protocol, names: &[&str]) -> BTreeSet<usize> {
    names.iter().map(|n| p.state_id(n).unwrap()).collect()
}
