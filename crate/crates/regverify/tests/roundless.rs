mod common;

use common::{example, protocol, random_dnf, random_protocol, random_roundless_constraint, rng, Shape};
use proptest::prelude::*;
use rand::Rng;
use regverify::constraints::{cover_constraint, distribute, eval_roundless, target_constraint};
use regverify::oracle::{oracle_prp, AnyConstraint, OracleCaps};
use regverify::protocol::{is_uninitialized, Protocol};
use regverify::reductions::builtin_constraints;
use regverify::roundless::{
    cover_fixed_r_order, reduce_cover_to_target, reduce_initialized_to_uninit_r1, solve_cover_fixed_r, solve_cover_uninitialized,
    solve_dnfprp_one_register, solve_prp_bounded, uninitialized_coverable, witness_satisfies, SolveError,
};
use regverify::semantics::replay_abstract;
use regverify::{parse_roundless, Answer, RoundlessConstraint};

fn oracle(p: &Protocol, phi: &RoundlessConstraint) -> Answer {
    oracle_prp(p, &AnyConstraint::Roundless(phi.clone()), None, &OracleCaps::default()).unwrap().answer
}

fn qf(p: &Protocol) -> usize {
    p.state_id("qf").unwrap()
}

#[test]
fn cover_on_fig1() {
    let p = example("fig1");
    let v = solve_prp_bounded(&p, &cover_constraint(qf(&p))).unwrap();
    assert_eq!(v.answer, Answer::Positive);
    assert!(witness_satisfies(&p, v.witness.as_ref().unwrap(), &cover_constraint(qf(&p))));
    assert_eq!(solve_cover_fixed_r(&p, qf(&p)).unwrap().answer, Answer::Positive);
    assert_eq!(solve_dnfprp_one_register(&p, &cover_constraint(qf(&p))).unwrap().answer, Answer::Positive);
    assert_eq!(solve_cover_uninitialized(&p, qf(&p)), Err(SolveError::NotUninitialized));
}

#[test]
fn cover_on_blue_variant_is_negative() {
    let p = example("fig1_blue");
    let phi = cover_constraint(qf(&p));
    assert_eq!(solve_prp_bounded(&p, &phi).unwrap().answer, Answer::Negative);
    assert_eq!(solve_cover_fixed_r(&p, qf(&p)).unwrap().answer, Answer::Negative);
    assert_eq!(solve_dnfprp_one_register(&p, &phi).unwrap().answer, Answer::Negative);
    assert_eq!(oracle(&p, &phi), Answer::Negative);
}

#[test]
fn target_on_fig1_and_red_variant() {
    let p = example("fig1");
    let phi = target_constraint(&p, qf(&p));
    assert_eq!(solve_prp_bounded(&p, &phi).unwrap().answer, Answer::Negative);
    assert_eq!(solve_dnfprp_one_register(&p, &phi).unwrap().answer, Answer::Negative);

    let p = example("fig1_red");
    let phi = target_constraint(&p, qf(&p));
    let v = solve_prp_bounded(&p, &phi).unwrap();
    assert_eq!(v.answer, Answer::Positive);
    let end = replay_abstract(&p, v.witness.as_ref().unwrap()).unwrap();
    assert_eq!(end.states().into_iter().collect::<Vec<_>>(), [qf(&p)]);
    assert_eq!(solve_dnfprp_one_register(&p, &phi).unwrap().answer, Answer::Positive);
}

#[test]
fn general_constraint_on_fig1_is_negative() {
    let p = example("fig1");
    let text = builtin_constraints().into_iter().find(|c| c.name == "no_c_then_a").unwrap().text;
    let phi = parse_roundless(&p, text).unwrap();
    assert_eq!(solve_prp_bounded(&p, &phi).unwrap().answer, Answer::Negative);
    assert!(solve_dnfprp_one_register(&p, &phi).is_err());
    let dnf = distribute(&phi, 64).unwrap();
    assert_eq!(solve_dnfprp_one_register(&p, &dnf).unwrap().answer, Answer::Negative);
}

#[test]
fn one_register_algorithm_needs_one_register() {
    let p = protocol(
        "flavor: roundless\nstates: q0 q1\ninitial: q0\nregisters: 2\nalphabet: d0 a\ntransitions:\n  q0 write(2, a) q1\n",
    );
    assert_eq!(solve_dnfprp_one_register(&p, &cover_constraint(1)), Err(SolveError::WrongRegisterCount(2)));
}

#[test]
fn first_write_order_matters_with_two_registers() {
    let p = protocol(
        "flavor: roundless\nstates: q0 x y goal\ninitial: q0\nregisters: 2\nalphabet: d0 a\ntransitions:\n  q0 write(1, a) x\n  x read(2, d0) y\n  y read(1, a) goal\n  q0 write(2, a) q0\n",
    );
    let goal = p.state_id("goal").unwrap();
    let (v, order) = cover_fixed_r_order(&p, goal).unwrap();
    assert_eq!(v.answer, Answer::Positive);
    let order = order.unwrap();
    assert_eq!(order.first(), Some(&0));
}

#[test]
fn saturation_on_an_uninitialized_protocol() {
    let p = protocol(
        "flavor: roundless\nstates: q0 a1 a2 goal\ninitial: q0\nregisters: 1\nalphabet: d0 x y\ntransitions:\n  q0 write(1, x) a1\n  a1 read(1, x) a2\n  a2 write(1, y) a2\n  a2 read(1, y) goal\n",
    );
    assert!(is_uninitialized(&p));
    assert_eq!(uninitialized_coverable(&p).unwrap().len(), 4);
    assert_eq!(solve_cover_uninitialized(&p, 3).unwrap().answer, Answer::Positive);
}

#[test]
fn no_write_clause_holds_in_the_initial_configuration() {
    let p = example("fig1");
    let phi = parse_roundless(&p, "(and (pop q0) (reg 1 d0))").unwrap();
    assert_eq!(solve_dnfprp_one_register(&p, &phi).unwrap().answer, Answer::Positive);
    assert_eq!(solve_prp_bounded(&p, &phi).unwrap().answer, Answer::Positive);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bounded_search_matches_the_oracle(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(5, 3, 2, 12));
        let phi = random_roundless_constraint(&mut g, &p, 3);
        let v = solve_prp_bounded(&p, &phi).unwrap();
        prop_assert_eq!(v.answer, oracle(&p, &phi));
        if let Some(w) = &v.witness {
            prop_assert!(witness_satisfies(&p, w, &phi));
            prop_assert!(w.steps.len() <= 4 * p.num_states());
        }
    }

    #[test]
    fn cover_algorithms_agree(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(6, 3, 3, 14));
        let q = g.gen_range(0..p.num_states());
        let expected = oracle(&p, &cover_constraint(q));
        prop_assert_eq!(solve_cover_fixed_r(&p, q).unwrap().answer, expected);
        if is_uninitialized(&p) {
            prop_assert_eq!(solve_cover_uninitialized(&p, q).unwrap().answer, expected);
        }
    }

    #[test]
    fn one_register_algorithm_matches_the_oracle(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(6, 4, 1, 14));
        let phi = random_dnf(&mut g, &p);
        prop_assert_eq!(solve_dnfprp_one_register(&p, &phi).unwrap().answer, oracle(&p, &phi));
    }

    #[test]
    fn joker_reduction_turns_cover_into_target(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(5, 3, 2, 10));
        let q = g.gen_range(0..p.num_states());
        let (t, qt) = reduce_cover_to_target(&p, q);
        prop_assert_eq!(oracle(&t, &target_constraint(&t, qt)), oracle(&p, &cover_constraint(q)));
    }

    #[test]
    fn one_register_protocols_can_drop_initialization(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(5, 3, 1, 10));
        let u = reduce_initialized_to_uninit_r1(&p).unwrap();
        prop_assert!(is_uninitialized(&u));
        for q in 0..p.num_states() {
            prop_assert_eq!(solve_cover_uninitialized(&u, q).unwrap().answer, oracle(&p, &cover_constraint(q)));
        }
    }

    #[test]
    fn witnesses_end_where_the_constraint_holds(seed in any::<u64>()) {
        let mut g = rng(seed);
        let p = random_protocol(&mut g, Shape::roundless(4, 3, 2, 10));
        let phi = random_dnf(&mut g, &p);
        if let Some(w) = solve_prp_bounded(&p, &phi).unwrap().witness {
            prop_assert!(eval_roundless(&replay_abstract(&p, &w).unwrap(), &phi));
        }
    }
}
