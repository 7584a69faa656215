mod common;

use common::{example, random_execution, random_protocol, rng, Shape};
use proptest::prelude::*;
use regverify::constraints::target_constraint;
use regverify::roundless::solve_prp_bounded;
use regverify::semantics::{abstract_to_concrete, replay_abstract, Config, SemanticsError, StepError};
use regverify::trace::{parse_trace, write_trace, Trace, TraceError};

#[test]
fn witness_trace_round_trips() {
    let p = example("fig1_red");
    let qf = p.state_id("qf").unwrap();
    let w = solve_prp_bounded(&p, &target_constraint(&p, qf)).unwrap().witness.unwrap();
    let t = Trace::from_abstract(&w);
    let text = write_trace(&p, &t);
    assert!(text.starts_with("start abstract: "));
    let back = parse_trace(&p, &text).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.replay(&p).unwrap(), Config::Abstract(replay_abstract(&p, &w).unwrap()));
}

#[test]
fn round_based_trace_lines_carry_rounds() {
    let p = example("fig4");
    let text = "start abstract: q0@0 ;\n0 q0 inc q0 keep\n1 q0 write(1, a) A keep\n";
    let t = parse_trace(&p, text).unwrap();
    assert_eq!(t.steps[1].round, 1);
    let written = write_trace(&p, &t);
    assert_eq!(written.lines().skip(1).collect::<Vec<_>>(), ["0 q0 inc q0 keep", "1 q0 write(1, a) A keep"]);
    assert_eq!(parse_trace(&p, &written).unwrap(), t);
}

#[test]
fn malformed_traces() {
    let p = example("fig1");
    assert_eq!(parse_trace(&p, "# nothing\n\n"), Err(TraceError::MissingStart));
    assert!(matches!(parse_trace(&p, "start abstract: q0 ; d0\nq0 read(1, d0) B stay\n"), Err(TraceError::Syntax { line: 2, .. })));
    assert!(matches!(parse_trace(&p, "start abstract: q0 ; d0\nq0 read(1, a) Z keep\n"), Err(TraceError::Syntax { line: 2, .. })));
    let foreign = parse_trace(&p, "start abstract: q0 ; d0\nq0 read(1, a) B keep\n").unwrap();
    assert_eq!(foreign.replay(&p), Err(TraceError::Replay(SemanticsError::NotEnabled { index: 0, reason: StepError::UnknownTransition })));
    assert!(matches!(parse_trace(&p, "start abstract: q0\n"), Err(TraceError::Syntax { line: 1, .. })));
    assert!(matches!(parse_trace(&p, "start sideways: q0 ; d0\n"), Err(TraceError::Syntax { line: 1, .. })));
    assert!(matches!(parse_trace(&p, "start abstract: q0 ; d0 d0\n"), Err(TraceError::Syntax { line: 1, .. })));
}

#[test]
fn illegal_read_fails_on_replay() {
    let p = example("fig1");
    let t = parse_trace(&p, "start abstract: q0 ; d0\nq0 write(1, c) A keep\nq0 read(1, d0) B keep\n").unwrap();
    assert_eq!(
        t.replay(&p),
        Err(TraceError::Replay(SemanticsError::NotEnabled { index: 1, reason: StepError::RegisterMismatch }))
    );
}

#[test]
fn empty_trace_replays_to_its_start() {
    let p = example("fig1");
    let t = parse_trace(&p, "start concrete: q0 q0 ; d0\n").unwrap();
    assert_eq!(t.replay(&p).unwrap(), t.start);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_traces_round_trip(seed in any::<u64>(), round_based in any::<bool>()) {
        let shape = if round_based { Shape::round_based(4, 3, 2, 10, 1) } else { Shape::roundless(4, 3, 2, 10) };
        let mut g = rng(seed);
        let p = random_protocol(&mut g, shape);
        let e = random_execution(&mut g, &p, 15, 3);
        let t = Trace::from_abstract(&e);
        prop_assert_eq!(parse_trace(&p, &write_trace(&p, &t)).unwrap(), t);
        let c = Trace::from_concrete(&abstract_to_concrete(&p, &e).unwrap());
        let back = parse_trace(&p, &write_trace(&p, &c)).unwrap();
        prop_assert_eq!(back.replay(&p).unwrap(), c.replay(&p).unwrap());
    }
}
