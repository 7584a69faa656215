//! One pass/fail line per acceptance criterion.

mod common;

use std::collections::HashSet;
use std::time::Instant;

use common::{concrete_supports, example, random_dnf, random_execution, random_protocol, random_roundbased_constraint, random_roundless_constraint, rng, Shape};
use rand::Rng;

use regverify::constraints::{cover_constraint, distribute, dnf_clauses, eval_roundbased, target_constraint, RoundlessConstraint};
use regverify::footprint::{
    bridge_window, check_normal_form, combine_footprints, desertions, normal_form_round_bound, normalize_execution, project_execution,
    steps_per_round, tau_window,
};
use regverify::oracle::{default_round_cap, oracle_prp, reach_roundbased_capped, reach_roundless, AnyConstraint, OracleCaps, OracleError};
use regverify::protocol::{is_uninitialized, Protocol, StateId};
use regverify::reductions::{builtin_constraints, cvp_to_cover, sat_to_cover, sat_to_uninit_target, Circuit, CnfFormula, Gate};
use regverify::roundbased::{solve_prp_roundbased, RoundBasedOptions};
use regverify::roundless::{
    solve_cover_fixed_r, solve_cover_uninitialized, solve_dnfprp_one_register, solve_prp_bounded, witness_satisfies,
};
use regverify::semantics::{abstract_to_concrete, project, replay_abstract, replay_concrete, AbstractConfig, Execution};
use regverify::{parse_roundbased, parse_roundless, Answer};

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

fn constraint_text(protocol: &str, name: &str) -> &'static str {
    builtin_constraints().into_iter().find(|c| c.protocol == protocol && c.name == name).unwrap().text
}

fn oracle_rl(p: &Protocol, phi: &RoundlessConstraint) -> Answer {
    oracle_prp(p, &AnyConstraint::Roundless(phi.clone()), None, &OracleCaps::default()).unwrap().answer
}

/// Every applicable roundless algorithm on one instance, named.
fn roundless_answers(p: &Protocol, phi: &RoundlessConstraint, cover: Option<StateId>) -> Vec<(&'static str, Answer)> {
    let mut out = vec![("oracle", oracle_rl(p, phi))];
    let b = solve_prp_bounded(p, phi).unwrap();
    if let Some(w) = &b.witness {
        assert!(witness_satisfies(p, w, phi), "bounded witness must replay");
    }
    out.push(("bounded", b.answer));
    if let Some(q) = cover {
        out.push(("fixed-r", solve_cover_fixed_r(p, q).unwrap().answer));
        if is_uninitialized(p) {
            out.push(("saturation", solve_cover_uninitialized(p, q).unwrap().answer));
        }
    }
    if p.registers == 1 {
        let dnf = if dnf_clauses(p, phi).is_ok() { phi.clone() } else { distribute(phi, 4096).unwrap() };
        out.push(("one-reg", solve_dnfprp_one_register(p, &dnf).unwrap().answer));
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut checks = 0;
    let rl: [(&str, &str, Answer); 5] = [
        ("fig1", "cover", Answer::Positive),
        ("fig1_blue", "cover", Answer::Negative),
        ("fig1", "target", Answer::Negative),
        ("fig1_red", "target", Answer::Positive),
        ("fig1", "prp", Answer::Negative),
    ];
    for (name, problem, expected) in rl {
        let p = example(name);
        let qf = p.state_id("qf").unwrap();
        let (phi, cover) = match problem {
            "cover" => (cover_constraint(qf), Some(qf)),
            "target" => (target_constraint(&p, qf), None),
            _ => (parse_roundless(&p, constraint_text("fig1", "no_c_then_a")).unwrap(), None),
        };
        for (algo, a) in roundless_answers(&p, &phi, cover) {
            checks += 1;
            if a != expected {
                bad.push(format!("{problem}({name}) with {algo}: {a}"));
            }
        }
    }
    let fig4 = example("fig4");
    for (name, expected, k) in [("psi", Answer::Negative, 3), ("psi1", Answer::Negative, 3), ("psi2", Answer::Positive, 3)] {
        let psi = parse_roundbased(&fig4, constraint_text("fig4", name)).unwrap();
        let v = solve_prp_roundbased(&fig4, &psi, &RoundBasedOptions::default()).unwrap();
        checks += 2;
        if v.answer != expected {
            bad.push(format!("fig4 {name} with footprint: {}", v.answer));
        }
        if let Some(w) = &v.witness {
            let end = replay_abstract(&fig4, w).unwrap();
            if !eval_roundbased(&end, &psi, end.active_bound()) {
                bad.push(format!("fig4 {name}: witness does not satisfy"));
            }
        }
        let o = oracle_prp(&fig4, &AnyConstraint::RoundBased(psi), Some(k), &OracleCaps::default()).unwrap();
        if o.answer != expected {
            bad.push(format!("fig4 {name} with oracle (rounds <= {k}): {}", o.answer));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if bad.is_empty() {
        pass(format!("{checks} algorithm/instance pairs agree with the expected answers in {secs:.2}s"))
    } else {
        fail(bad.join("; "))
    }
}

struct FuzzReport {
    roundless: usize,
    disagreements: Vec<String>,
    positives: usize,
    long_witnesses: Vec<String>,
    rb_total: usize,
    rb_skipped: usize,
    rb_reduced: usize,
    rb_unknown: usize,
    rb_unsound: Vec<String>,
}

fn fuzz() -> FuzzReport {
    let mut r = FuzzReport {
        roundless: 0,
        disagreements: Vec::new(),
        positives: 0,
        long_witnesses: Vec::new(),
        rb_total: 0,
        rb_skipped: 0,
        rb_reduced: 0,
        rb_unknown: 0,
        rb_unsound: Vec::new(),
    };
    let mut g = rng(2024);
    for i in 0..1000 {
        let p = random_protocol(&mut g, Shape::roundless(5, 3, 2, 12));
        let q = g.gen_range(0..p.num_states());
        let (phi, cover) = match i % 4 {
            0 => (cover_constraint(q), Some(q)),
            1 => (target_constraint(&p, q), None),
            2 => (random_dnf(&mut g, &p), None),
            _ => (random_roundless_constraint(&mut g, &p, 3), None),
        };
        r.roundless += 1;
        let expected = oracle_rl(&p, &phi);
        let b = solve_prp_bounded(&p, &phi).unwrap();
        let mut got = vec![("bounded", b.answer)];
        if let Some(q) = cover {
            got.push(("fixed-r", solve_cover_fixed_r(&p, q).unwrap().answer));
            if is_uninitialized(&p) {
                got.push(("saturation", solve_cover_uninitialized(&p, q).unwrap().answer));
            }
        }
        if p.registers == 1 && dnf_clauses(&p, &phi).is_ok() {
            got.push(("one-reg", solve_dnfprp_one_register(&p, &phi).unwrap().answer));
        }
        for (algo, a) in got {
            if a != expected {
                r.disagreements.push(format!("instance {i}: {algo} says {a}, oracle {expected}"));
            }
        }
        if b.answer == Answer::Positive {
            r.positives += 1;
            let w = b.witness.as_ref().unwrap();
            if w.steps.len() > 4 * p.num_states() || !witness_satisfies(&p, w, &phi) {
                r.long_witnesses.push(format!("instance {i}: {} steps", w.steps.len()));
            }
        }
    }
    let caps = OracleCaps { max_nodes: 400_000, ..OracleCaps::default() };
    let opts = RoundBasedOptions { budget: 200_000, step_cap: None, parallel: false };
    for i in 0..200 {
        let p = random_protocol(&mut g, Shape::round_based(4, 3, 1, 8, 1));
        let psi = random_roundbased_constraint(&mut g, &p, 2);
        r.rb_total += 1;
        let v = solve_prp_roundbased(&p, &psi, &opts).unwrap();
        if v.answer == Answer::Unknown {
            r.rb_unknown += 1;
        }
        if let Some(w) = &v.witness {
            match replay_abstract(&p, w) {
                Ok(end) if eval_roundbased(&end, &psi, end.active_bound()) => {}
                _ => r.rb_unsound.push(format!("instance {i}: witness does not replay or satisfy")),
            }
        }
        let any = AnyConstraint::RoundBased(psi.clone());
        let mut k = default_round_cap(&p, &psi);
        let o = match oracle_prp(&p, &any, Some(k), &caps) {
            Ok(o) => o,
            Err(OracleError::CapExceeded(_)) => {
                r.rb_reduced += 1;
                k = 3;
                match oracle_prp(&p, &any, Some(k), &caps) {
                    Ok(o) => o,
                    Err(OracleError::CapExceeded(_)) => {
                        r.rb_skipped += 1;
                        continue;
                    }
                    Err(e) => panic!("{e}"),
                }
            }
            Err(e) => panic!("{e}"),
        };
        match (v.answer, o.answer) {
            (Answer::Negative, Answer::Positive) => {
                r.rb_unsound.push(format!("instance {i}: solver negative, oracle positive"))
            }
            (Answer::Positive, Answer::Negative) if witness_rounds(&p, v.witness.as_ref().unwrap()) <= k => {
                r.rb_unsound.push(format!("instance {i}: solver witness within {k} rounds missed by the oracle"))
            }
            _ => {}
        }
    }
    r
}

fn witness_rounds(p: &Protocol, w: &Execution<AbstractConfig>) -> u32 {
    w.steps.iter().map(|m| m.dest().round).max().unwrap_or(0).max(replay_abstract(p, w).unwrap().active_bound())
}

fn criterion_2(r: &FuzzReport) -> Outcome {
    let unknown_rate = 100.0 * r.rb_unknown as f64 / r.rb_total as f64;
    let detail = format!(
        "{} roundless instances, {} disagreements; {} round-based instances, {} unsound, {} unknown ({unknown_rate:.1}%); oracle at its default round cap, {} checked at 3 rounds instead, {} over caps",
        r.roundless,
        r.disagreements.len(),
        r.rb_total,
        r.rb_unsound.len(),
        r.rb_unknown,
        r.rb_reduced,
        r.rb_skipped
    );
    if r.disagreements.is_empty() && r.rb_unsound.is_empty() && r.roundless >= 1000 && r.rb_total >= 200 {
        pass(detail)
    } else {
        let mut all = r.disagreements.clone();
        all.extend(r.rb_unsound.iter().cloned());
        all.truncate(5);
        fail(format!("{detail}: {}", all.join("; ")))
    }
}

fn criterion_3(r: &FuzzReport) -> Outcome {
    let detail = format!("{} positive bounded witnesses checked", r.positives);
    if r.long_witnesses.is_empty() && r.positives > 0 {
        pass(detail)
    } else {
        fail(format!("{detail}: {}", r.long_witnesses.join("; ")))
    }
}

fn criterion_4() -> Outcome {
    let mut g = rng(7);
    let mut compared = 0;
    let mut realized = 0;
    let mut bad = Vec::new();
    for i in 0..100 {
        let (p, rounds) = if i % 5 < 3 {
            (random_protocol(&mut g, Shape::roundless(3, 3, 2, 7)), 0)
        } else {
            (random_protocol(&mut g, Shape::round_based(3, 2, 1, 6, 1)), 1)
        };
        let reach = if rounds == 0 {
            reach_roundless(&p, &OracleCaps::default())
        } else {
            reach_roundbased_capped(&p, rounds, &OracleCaps::default())
        }
        .unwrap();
        let abs: HashSet<AbstractConfig> = reach.members().collect();
        let mut conc = HashSet::new();
        for n in 1..=6 {
            conc.extend(concrete_supports(&p, n, rounds));
        }
        compared += 1;
        if let Some(c) = conc.iter().find(|c| !abs.contains(c)) {
            bad.push(format!("protocol {i}: concrete support {} is not abstractly reachable", c.display(&p)));
            continue;
        }
        for idx in 0..reach.len() {
            let target = reach.config(idx);
            let w = reach.witness(idx);
            let exec = match abstract_to_concrete(&p, &w) {
                Ok(e) => e,
                Err(e) => {
                    bad.push(format!("protocol {i}: copycat realization failed: {e}"));
                    break;
                }
            };
            let end = replay_concrete(&p, &exec).unwrap();
            if project(&end) != target {
                bad.push(format!("protocol {i}: realization ends in {}", end.display(&p)));
                break;
            }
            if exec.start.size() <= 6 {
                if !conc.contains(&target) {
                    bad.push(format!("protocol {i}: {} missing from concrete exploration", target.display(&p)));
                    break;
                }
            } else {
                realized += 1;
            }
        }
    }
    let detail = format!("{compared} protocols; {realized} abstract configurations needed more than 6 processes and were realized by copycat");
    if bad.is_empty() {
        pass(detail)
    } else {
        bad.truncate(3);
        fail(format!("{detail}: {}", bad.join("; ")))
    }
}

fn all_clauses(n: usize) -> Vec<[i32; 3]> {
    let lits: Vec<i32> = (1..=n as i32).flat_map(|v| [v, -v]).collect();
    let mut out = Vec::new();
    for a in 0..lits.len() {
        for b in a..lits.len() {
            for c in b..lits.len() {
                out.push([lits[a], lits[b], lits[c]]);
            }
        }
    }
    out
}

fn all_circuits(inputs: usize, gates: usize) -> Vec<Vec<Gate>> {
    let mut out: Vec<Vec<Gate>> = vec![Vec::new()];
    for g in 0..gates {
        let wires: Vec<String> = (1..=inputs).map(|i| format!("x{i}")).chain((1..=g).map(|i| format!("g{i}"))).collect();
        let o = format!("g{}", g + 1);
        let mut next = Vec::new();
        for base in &out {
            for a in &wires {
                let mut c = base.clone();
                c.push(Gate::Not { input: a.clone(), output: o.clone() });
                next.push(c);
                for b in &wires {
                    for and in [true, false] {
                        let mut c = base.clone();
                        let (left, right, output) = (a.clone(), b.clone(), o.clone());
                        c.push(if and { Gate::And { left, right, output } } else { Gate::Or { left, right, output } });
                        next.push(c);
                    }
                }
            }
        }
        out = next;
    }
    out
}

fn criterion_5() -> Outcome {
    let mut formulas = 0;
    let mut bad = Vec::new();
    let caps = OracleCaps { max_states: 16, ..OracleCaps::default() };
    for n in 1..=3 {
        let clauses = all_clauses(n);
        let mut sets: Vec<Vec<[i32; 3]>> = clauses.iter().map(|c| vec![*c]).collect();
        for a in 0..clauses.len() {
            for b in a..clauses.len() {
                sets.push(vec![clauses[a], clauses[b]]);
            }
        }
        for cs in sets {
            let phi = CnfFormula::new(n, cs).unwrap();
            let sat = Answer::from_bool(phi.satisfiable().unwrap());
            formulas += 1;
            let (p, qf) = sat_to_cover(&phi);
            let cover = oracle_prp(&p, &AnyConstraint::Roundless(cover_constraint(qf)), None, &caps).unwrap().answer;
            let (u, uf) = sat_to_uninit_target(&phi);
            let target = oracle_prp(&u, &AnyConstraint::Roundless(target_constraint(&u, uf)), None, &caps).unwrap().answer;
            if cover != sat || target != sat || !is_uninitialized(&u) {
                bad.push(format!("{:?}: cover {cover}, target {target}, truth table {sat}", phi.clauses));
            }
        }
    }
    let mut circuits = 0;
    for gates in 1..=3 {
        for (idx, gs) in all_circuits(2, gates).into_iter().enumerate() {
            let output = gs.last().unwrap().output().to_string();
            for bits in 0..4u8 {
                let c = Circuit {
                    inputs: vec![("x1".into(), bits & 1 == 1), ("x2".into(), bits & 2 == 2)],
                    gates: gs.clone(),
                    output: output.clone(),
                };
                let value = c.evaluate().unwrap();
                for desired in [true, false] {
                    circuits += 1;
                    let (p, qf) = cvp_to_cover(&c, desired).unwrap();
                    let got = solve_cover_fixed_r(&p, qf).unwrap().answer;
                    let expected = Answer::from_bool(value == desired);
                    if got != expected {
                        bad.push(format!("circuit {:?} desired {desired}: {got}", c.to_text()));
                    }
                    if (idx + bits as usize).is_multiple_of(97) {
                        let o = oracle_prp(&p, &AnyConstraint::Roundless(cover_constraint(qf)), None, &caps).unwrap().answer;
                        if o != expected {
                            bad.push(format!("circuit {:?} desired {desired}: oracle {o}", c.to_text()));
                        }
                    }
                }
            }
        }
    }
    let detail = format!("{formulas} formulas through both constructions, {circuits} circuit instances");
    if bad.is_empty() {
        pass(detail)
    } else {
        bad.truncate(3);
        fail(format!("{detail}: {}", bad.join("; ")))
    }
}

fn normalized_samples(seed: u64, count: usize) -> Vec<(Protocol, Execution<AbstractConfig>, Execution<AbstractConfig>)> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let p = random_protocol(&mut g, Shape::round_based(4, 3, 2, 10, 2));
            let len = g.gen_range(0..40);
            let e = random_execution(&mut g, &p, len, 4);
            let n = normalize_execution(&p, &e).unwrap();
            (p, e, n)
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for (i, (p, e, n)) in normalized_samples(11, 500).into_iter().enumerate() {
        if let Err(v) = check_normal_form(&p, &n) {
            bad.push(format!("execution {i}: {v}"));
        }
        let bound = normal_form_round_bound(&p);
        for (&k, &s) in &steps_per_round(&n) {
            max_ratio = max_ratio.max(s as f64 / bound as f64);
            if s > bound {
                bad.push(format!("execution {i}: {s} steps at round {k}, bound {bound}"));
            }
        }
        if desertions(&n).values().any(|&d| d > 1) {
            bad.push(format!("execution {i}: a location is deserted twice"));
        }
        if replay_abstract(&p, &n).unwrap() != replay_abstract(&p, &e).unwrap() {
            bad.push(format!("execution {i}: final configuration changed"));
        }
    }
    let detail = format!("500 executions normalized; largest per-round step count is {:.0}% of the bound", 100.0 * max_ratio);
    if bad.is_empty() {
        pass(detail)
    } else {
        bad.truncate(3);
        fail(format!("{detail}: {}", bad.join("; ")))
    }
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    let mut steps = 0;
    for (i, (p, _, n)) in normalized_samples(13, 500).into_iter().enumerate() {
        let w = p.visibility.max(1);
        let last = n.steps.iter().map(|m| m.dest().round).max().unwrap_or(0);
        let taus: Vec<_> = (0..=last).map(|k| project_execution(&p, &n, tau_window(k, w)).unwrap()).collect();
        let bridges: Vec<_> = (0..last).map(|k| project_execution(&p, &n, bridge_window(k, w)).unwrap()).collect();
        steps += n.steps.len();
        match combine_footprints(&p, &taus, &bridges, w) {
            Ok(glued) => {
                let same = (0..=last).all(|k| project_execution(&p, &glued, tau_window(k, w)).unwrap() == taus[k as usize])
                    && (0..last).all(|k| project_execution(&p, &glued, bridge_window(k, w)).unwrap() == bridges[k as usize]);
                if !same {
                    bad.push(format!("execution {i}: footprints of the glued execution differ"));
                }
            }
            Err(e) => bad.push(format!("execution {i}: {e}")),
        }
    }
    let detail = format!("500 executions ({steps} steps) projected and glued back");
    if bad.is_empty() {
        pass(detail)
    } else {
        bad.truncate(3);
        fail(format!("{detail}: {}", bad.join("; ")))
    }
}

fn main() {
    let report = fuzz();
    let results = [
        ("golden examples", criterion_1()),
        ("oracle-equivalence fuzzing", criterion_2(&report)),
        ("witness-length bound", criterion_3(&report)),
        ("abstraction soundness and completeness", criterion_4()),
        ("reduction ground truth", criterion_5()),
        ("normal-form bound", criterion_6()),
        ("footprint gluing", criterion_7()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} [{}] {}: {}", i + 1, if o.ok { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.ok);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
