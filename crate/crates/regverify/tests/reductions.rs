mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use regverify::constraints::target_constraint;
use regverify::oracle::{oracle_prp, AnyConstraint, OracleCaps};
use regverify::protocol::{is_uninitialized, validate};
use regverify::reductions::{cvp_to_cover, sat_to_cover, sat_to_uninit_target, Circuit, CnfFormula, Gate, ReductionError};
use regverify::roundless::solve_cover_fixed_r;
use regverify::Answer;

fn caps() -> OracleCaps {
    OracleCaps { max_states: 24, ..OracleCaps::default() }
}

#[test]
fn formula_validation() {
    assert_eq!(CnfFormula::new(0, vec![[1, 1, 1]]), Err(ReductionError::EmptyFormula));
    assert_eq!(CnfFormula::new(2, vec![]), Err(ReductionError::EmptyFormula));
    assert_eq!(CnfFormula::new(2, vec![[1, -3, 2]]), Err(ReductionError::LiteralOutOfRange(-3)));
    assert_eq!(CnfFormula::new(2, vec![[1, 0, 2]]), Err(ReductionError::LiteralOutOfRange(0)));
    assert_eq!(CnfFormula::new(21, vec![[1, 2, 3]]).unwrap().satisfiable(), Err(ReductionError::TooManyVariables(21)));
}

#[test]
fn truth_tables_and_dimacs() {
    let sat = CnfFormula::new(2, vec![[1, 1, 2], [-1, -1, 2]]).unwrap();
    assert!(sat.satisfiable().unwrap());
    assert!(sat.eval(0b10) && !sat.eval(0b01));
    assert_eq!(sat.to_dimacs(), "p cnf 2 2\n1 1 2 0\n-1 -1 2 0\n");
    let unsat = CnfFormula::new(1, vec![[1, 1, 1], [-1, -1, -1]]).unwrap();
    assert!(!unsat.satisfiable().unwrap());
}

#[test]
fn sat_constructions_on_two_formulas() {
    let sat = CnfFormula::new(2, vec![[1, 2, 2], [-1, 2, 2], [1, -2, -2]]).unwrap();
    let unsat = CnfFormula::new(2, vec![[1, 2, 2], [-1, 2, 2], [1, -2, -2], [-1, -2, -2]]).unwrap();
    for (phi, expected) in [(sat, Answer::Positive), (unsat, Answer::Negative)] {
        let (p, qf) = sat_to_cover(&phi);
        assert!(validate(&p).is_empty());
        assert_eq!(p.registers, 4);
        assert_eq!(solve_cover_fixed_r(&p, qf).unwrap().answer, expected);
        let (u, uf) = sat_to_uninit_target(&phi);
        assert!(is_uninitialized(&u));
        assert_eq!(u.registers, 2);
        let v = oracle_prp(&u, &AnyConstraint::Roundless(target_constraint(&u, uf)), None, &caps()).unwrap();
        assert_eq!(v.answer, expected);
    }
}

#[test]
fn circuit_text_round_trips() {
    let text = "input x true\ninput y false\nand a x y\nnot b a\nor o b y\noutput o\n";
    let c = Circuit::parse(text).unwrap();
    assert_eq!(c.to_text(), text);
    assert!(c.evaluate().unwrap());
    assert_eq!(c.gates.len(), 3);
}

#[test]
fn circuit_errors() {
    let cyclic = Circuit::parse("input x true\nand a x b\nand b x a\noutput a\n").unwrap();
    assert!(matches!(cyclic.evaluate(), Err(ReductionError::CyclicCircuit(_))));
    assert!(matches!(cvp_to_cover(&cyclic, true), Err(ReductionError::CyclicCircuit(_))));
    let undefined = Circuit::parse("input x true\nnot a y\noutput a\n").unwrap();
    assert_eq!(undefined.evaluate(), Err(ReductionError::UndefinedWire("y".into())));
    let twice = Circuit::parse("input x true\nnot x x\noutput x\n").unwrap();
    assert_eq!(twice.evaluate(), Err(ReductionError::DuplicateWire("x".into())));
    assert!(matches!(Circuit::parse("input x maybe\noutput x\n"), Err(ReductionError::Syntax { line: 1, .. })));
    assert!(matches!(Circuit::parse("input x true\n"), Err(ReductionError::Syntax { .. })));
}

#[test]
fn circuit_with_only_an_input() {
    let c = Circuit::parse("input x false\noutput x\n").unwrap();
    for desired in [true, false] {
        let (p, qf) = cvp_to_cover(&c, desired).unwrap();
        assert_eq!(solve_cover_fixed_r(&p, qf).unwrap().answer, Answer::from_bool(!desired));
    }
}

fn random_circuit(seed: u64) -> Circuit {
    let mut g = rng(seed);
    let n = g.gen_range(1..=3);
    let inputs: Vec<(String, bool)> = (0..n).map(|i| (format!("x{i}"), g.gen_bool(0.5))).collect();
    let mut wires: Vec<String> = inputs.iter().map(|(w, _)| w.clone()).collect();
    let mut gates = Vec::new();
    for i in 0..g.gen_range(1..=7) {
        let output = format!("g{i}");
        let a = wires[g.gen_range(0..wires.len())].clone();
        let b = wires[g.gen_range(0..wires.len())].clone();
        gates.push(match g.gen_range(0..3) {
            0 => Gate::Not { input: a, output: output.clone() },
            1 => Gate::And { left: a, right: b, output: output.clone() },
            _ => Gate::Or { left: a, right: b, output: output.clone() },
        });
        wires.push(output);
    }
    let output = wires.last().unwrap().clone();
    Circuit { inputs, gates, output }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn circuit_construction_tracks_the_value(seed in any::<u64>(), desired in any::<bool>()) {
        let c = random_circuit(seed);
        let value = c.evaluate().unwrap();
        let (p, qf) = cvp_to_cover(&c, desired).unwrap();
        prop_assert!(validate(&p).is_empty());
        prop_assert_eq!(p.registers, 1);
        prop_assert_eq!(solve_cover_fixed_r(&p, qf).unwrap().answer, Answer::from_bool(value == desired));
    }

    #[test]
    fn random_formulas_through_the_cover_construction(seed in any::<u64>()) {
        let mut g = rng(seed);
        let n = g.gen_range(1..=3);
        let m = g.gen_range(1..=4);
        let lit = |g: &mut rand_chacha::ChaCha8Rng| {
            let v = g.gen_range(1..=n) as i32;
            if g.gen_bool(0.5) { v } else { -v }
        };
        let clauses = (0..m).map(|_| [lit(&mut g), lit(&mut g), lit(&mut g)]).collect();
        let phi = CnfFormula::new(n, clauses).unwrap();
        let (p, qf) = sat_to_cover(&phi);
        prop_assert_eq!(solve_cover_fixed_r(&p, qf).unwrap().answer, Answer::from_bool(phi.satisfiable().unwrap()));
    }
}
