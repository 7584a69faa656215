use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use regverify::constraints::{
    cover_constraint, distribute, dnf_clauses, parse_roundbased, parse_roundless, roundbased_to_text, roundless_to_text,
    target_constraint, RoundlessConstraint,
};
use regverify::oracle::{default_round_cap, oracle_prp, reach_roundbased_capped, reach_roundless, AnyConstraint, OracleCaps};
use regverify::protocol::{parse_protocol, Flavor, Protocol, StateId};
use regverify::reductions::{
    builtin_constraints, builtin_examples, cvp_to_cover, sat_to_cover, sat_to_uninit_target, Circuit, CnfFormula, Gate,
};
use regverify::roundbased::{solve_prp_roundbased, RoundBasedOptions};
use regverify::roundless::{
    solve_cover_fixed_r, solve_cover_uninitialized, solve_dnfprp_one_register, solve_prp_bounded,
};
use regverify::semantics::{Config, SemanticsError};
use regverify::trace::{parse_trace, write_trace, Trace};
use regverify::{Answer, Verdict};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 66;
const DISTRIBUTE_LIMIT: usize = 4096;

#[derive(Parser)]
#[command(name = "regverify", version, about = "Presence reachability for parameterized register protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a reachability question; exit 0 positive, 1 negative, 2 unknown.
    Check(CheckArgs),
    /// Exhaustive abstract reachability.
    Oracle(OracleArgs),
    /// Replay a witness trace and print the final configuration.
    Replay { protocol: PathBuf, trace: PathBuf },
    /// Generate a benchmark with its ground truth.
    Gen(GenArgs),
    /// Print a protocol, or a constraint over it, in canonical form.
    Fmt { protocol: PathBuf, constraint: Option<PathBuf> },
    /// Print or write the built-in example protocols and constraints.
    Examples {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Cover,
    Target,
    Dnfprp,
    Prp,
    Rbprp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Bounded,
    Saturation,
    FixedR,
    OneReg,
    Oracle,
    Footprint,
}

#[derive(Args)]
struct CheckArgs {
    problem: Problem,
    protocol: PathBuf,
    /// Constraint file, required for dnfprp, prp and rbprp.
    constraint: Option<PathBuf>,
    /// Target state for cover and target.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    /// Write the witness trace of a positive answer to this file.
    #[arg(long)]
    emit_witness: Option<PathBuf>,
    /// Node budget of the round-based search (default: REGVERIFY_BUDGET or 5000000).
    #[arg(long)]
    budget: Option<u64>,
    /// Steps allowed per round in one bridge footprint. The default,
    /// (v+1)|Q|(2v+5), covers the per-round bound of normal-form executions.
    #[arg(long)]
    step_cap: Option<usize>,
    /// Convert a non-DNF constraint to DNF, with a size guard.
    #[arg(long)]
    distribute: bool,
    /// Search independent root branches on separate threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct OracleArgs {
    protocol: PathBuf,
    constraint: Option<PathBuf>,
    /// Answer COVER for this state instead of a constraint.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, default_value_t = 12)]
    cap_states: usize,
    /// Largest round explored for round-based protocols.
    #[arg(long)]
    cap_rounds: Option<u32>,
    /// Write the full reach set, one configuration per line.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    SatCover,
    SatTarget,
    Cvp,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variables of the formula, or inputs of a random circuit.
    #[arg(long, default_value_t = 3)]
    vars: usize,
    /// Clauses of the formula, or gates of a random circuit.
    #[arg(long, default_value_t = 3)]
    clauses: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Circuit file for cvp instead of a random circuit.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Output value to cover for cvp.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    desired: bool,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn data(msg: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_DATA, msg: msg.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: EXIT_IO, msg: format!("{}: {e}", path.display()) })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: EXIT_IO, msg: format!("{}: {e}", path.display()) })
}

fn load_protocol(path: &Path) -> Result<Protocol, Failure> {
    parse_protocol(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn state_arg(p: &Protocol, state: &Option<String>) -> Result<StateId, Failure> {
    let name = state.as_ref().ok_or(Failure { code: EXIT_USAGE, msg: "--state is required".into() })?;
    p.state_id(name).ok_or_else(|| Failure::data(format!("unknown state `{name}`")))
}

fn answer_code(a: Answer) -> u8 {
    match a {
        Answer::Positive => 0,
        Answer::Negative => 1,
        Answer::Unknown => 2,
    }
}

fn report(v: &Verdict, witness_file: Option<&Path>) -> u8 {
    let mut out = json!({
        "schema": 1,
        "answer": v.answer.as_str(),
        "status": v.answer.as_str(),
        "algorithm": v.algorithm,
        "explored_nodes": v.explored_nodes,
    });
    if let Some(f) = witness_file {
        out["witness_file"] = json!(f.display().to_string());
    }
    println!("{out}");
    eprintln!("{} ({}, {} nodes)", v.answer, v.algorithm, v.explored_nodes);
    answer_code(v.answer)
}

fn incompatible(msg: impl std::fmt::Display) -> Failure {
    Failure::data(format!("incompatible algorithm: {msg}"))
}

fn roundless_constraint(p: &Protocol, args: &CheckArgs) -> Result<RoundlessConstraint, Failure> {
    match args.problem {
        Problem::Cover => Ok(cover_constraint(state_arg(p, &args.state)?)),
        Problem::Target => Ok(target_constraint(p, state_arg(p, &args.state)?)),
        _ => {
            let path = args
                .constraint
                .as_ref()
                .ok_or(Failure { code: EXIT_USAGE, msg: "a constraint file is required".into() })?;
            let phi = parse_roundless(p, &read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            if args.distribute {
                distribute(&phi, DISTRIBUTE_LIMIT).map_err(Failure::data)
            } else {
                Ok(phi)
            }
        }
    }
}

fn cmd_check(args: CheckArgs) -> Outcome {
    let p = load_protocol(&args.protocol)?;
    if args.problem == Problem::Rbprp {
        return check_roundbased(&p, &args);
    }
    if p.flavor != Flavor::Roundless {
        return Err(Failure::data("round-based protocols are checked with `check rbprp`"));
    }
    let phi = roundless_constraint(&p, &args)?;
    if args.problem == Problem::Dnfprp {
        dnf_clauses(&p, &phi).map_err(|e| Failure::data(format!("{e}; use --distribute to convert")))?;
    }
    let algo = args.algo.unwrap_or(match args.problem {
        Problem::Dnfprp if p.registers == 1 => Algo::OneReg,
        _ => Algo::Bounded,
    });
    let v = match algo {
        Algo::Bounded => solve_prp_bounded(&p, &phi).map_err(incompatible)?,
        Algo::Oracle => oracle_prp(&p, &AnyConstraint::Roundless(phi.clone()), None, &OracleCaps::default())
            .map_err(Failure::data)?,
        Algo::OneReg => solve_dnfprp_one_register(&p, &phi).map_err(incompatible)?,
        Algo::Saturation | Algo::FixedR => {
            if args.problem != Problem::Cover {
                return Err(incompatible("saturation and fixed-r only decide cover"));
            }
            let q = state_arg(&p, &args.state)?;
            if algo == Algo::Saturation {
                solve_cover_uninitialized(&p, q).map_err(incompatible)?
            } else {
                if p.registers > 6 {
                    eprintln!("warning: fixed-r enumerates register orders; {} registers may take long", p.registers);
                }
                solve_cover_fixed_r(&p, q).map_err(incompatible)?
            }
        }
        Algo::Footprint => return Err(incompatible("footprint is for round-based protocols")),
    };
    let mut witness_file = None;
    if let (Some(path), Answer::Positive) = (&args.emit_witness, v.answer) {
        let w = match &v.witness {
            Some(w) => w.clone(),
            None => solve_prp_bounded(&p, &phi)
                .map_err(Failure::data)?
                .witness
                .ok_or_else(|| Failure::data("no witness found for a positive answer"))?,
        };
        write(path, &write_trace(&p, &Trace::from_abstract(&w)))?;
        witness_file = Some(path.as_path());
    }
    Ok(report(&v, witness_file))
}

fn check_roundbased(p: &Protocol, args: &CheckArgs) -> Outcome {
    if p.flavor != Flavor::RoundBased {
        return Err(Failure::data("rbprp needs a round-based protocol"));
    }
    let path = args.constraint.as_ref().ok_or(Failure { code: EXIT_USAGE, msg: "a constraint file is required".into() })?;
    let psi = parse_roundbased(p, &read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let v = match args.algo.unwrap_or(Algo::Footprint) {
        Algo::Footprint => {
            let mut opts = RoundBasedOptions::default();
            if let Some(b) = args.budget {
                opts.budget = b;
            }
            opts.step_cap = args.step_cap;
            opts.parallel = args.parallel;
            solve_prp_roundbased(p, &psi, &opts).map_err(Failure::data)?
        }
        Algo::Oracle => {
            let k = default_round_cap(p, &psi);
            oracle_prp(p, &AnyConstraint::RoundBased(psi.clone()), Some(k), &OracleCaps::default()).map_err(Failure::data)?
        }
        _ => return Err(incompatible("round-based protocols use footprint or oracle")),
    };
    let mut witness_file = None;
    if let (Some(path), Some(w)) = (&args.emit_witness, &v.witness) {
        write(path, &write_trace(p, &Trace::from_abstract(w)))?;
        witness_file = Some(path.as_path());
    }
    Ok(report(&v, witness_file))
}

fn cmd_oracle(args: OracleArgs) -> Outcome {
    let p = load_protocol(&args.protocol)?;
    let caps = OracleCaps { max_states: args.cap_states, ..OracleCaps::default() };
    let constraint = match (&args.constraint, &args.state, p.flavor) {
        (Some(path), _, Flavor::Roundless) => {
            Some(AnyConstraint::Roundless(parse_roundless(&p, &read(path)?).map_err(Failure::data)?))
        }
        (Some(path), _, Flavor::RoundBased) => {
            Some(AnyConstraint::RoundBased(parse_roundbased(&p, &read(path)?).map_err(Failure::data)?))
        }
        (None, Some(_), Flavor::Roundless) => Some(AnyConstraint::Roundless(cover_constraint(state_arg(&p, &args.state)?))),
        (None, Some(_), Flavor::RoundBased) => {
            let q = state_arg(&p, &args.state)?;
            let text = format!("(exists k (pop {} k))", p.states[q]);
            Some(AnyConstraint::RoundBased(parse_roundbased(&p, &text).map_err(Failure::data)?))
        }
        (None, None, _) => None,
    };
    let cap_rounds = match (&constraint, args.cap_rounds) {
        (_, Some(k)) => Some(k),
        (Some(AnyConstraint::RoundBased(psi)), None) => Some(default_round_cap(&p, psi)),
        _ => None,
    };
    if let Some(path) = &args.export {
        let rs = match p.flavor {
            Flavor::Roundless => reach_roundless(&p, &caps),
            Flavor::RoundBased => {
                let k = cap_rounds.ok_or(Failure { code: EXIT_USAGE, msg: "--cap-rounds is required".into() })?;
                reach_roundbased_capped(&p, k, &caps)
            }
        }
        .map_err(Failure::data)?;
        write(path, &rs.export(&p))?;
        eprintln!("{} configurations written to {}", rs.len(), path.display());
    }
    match constraint {
        Some(c) => {
            let v = oracle_prp(&p, &c, cap_rounds, &caps).map_err(Failure::data)?;
            Ok(report(&v, None))
        }
        None if args.export.is_some() => Ok(0),
        None => Err(Failure { code: EXIT_USAGE, msg: "give a constraint, --state or --export".into() }),
    }
}

fn cmd_replay(protocol: &Path, trace: &Path) -> Outcome {
    let p = load_protocol(protocol)?;
    let t = parse_trace(&p, &read(trace)?).map_err(Failure::data)?;
    match t.replay(&p) {
        Ok(Config::Abstract(c)) => println!("final: {}", c.display(&p)),
        Ok(Config::Concrete(c)) => println!("final: {}", c.display(&p)),
        Err(regverify::trace::TraceError::Replay(SemanticsError::NotEnabled { index, reason })) => {
            println!("step {index} failed: {reason}");
            return Ok(1);
        }
        Err(e) => {
            println!("replay failed: {e}");
            return Ok(1);
        }
    }
    Ok(0)
}

fn random_cnf(rng: &mut ChaCha8Rng, vars: usize, clauses: usize) -> CnfFormula {
    let lit = |rng: &mut ChaCha8Rng| {
        let v = rng.gen_range(1..=vars as i32);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let cs = (0..clauses).map(|_| [lit(rng), lit(rng), lit(rng)]).collect();
    CnfFormula { vars, clauses: cs }
}

fn random_circuit(rng: &mut ChaCha8Rng, inputs: usize, gates: usize) -> Circuit {
    let mut wires: Vec<String> = (1..=inputs).map(|i| format!("x{i}")).collect();
    let ins = wires.iter().map(|w| (w.clone(), rng.gen_bool(0.5))).collect();
    let mut gs = Vec::new();
    for g in 1..=gates {
        let output = format!("g{g}");
        let pick = |rng: &mut ChaCha8Rng| wires[rng.gen_range(0..wires.len())].clone();
        let gate = match rng.gen_range(0..3) {
            0 => Gate::Not { input: pick(rng), output: output.clone() },
            1 => Gate::And { left: pick(rng), right: pick(rng), output: output.clone() },
            _ => Gate::Or { left: pick(rng), right: pick(rng), output: output.clone() },
        };
        gs.push(gate);
        wires.push(output);
    }
    Circuit { inputs: ins, gates: gs, output: wires.last().unwrap().clone() }
}

fn cmd_gen(args: GenArgs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    fs::create_dir_all(&args.out).map_err(|e| Failure { code: EXIT_IO, msg: e.to_string() })?;
    let (p, q, problem, expected, source) = match args.kind {
        GenKind::SatCover | GenKind::SatTarget => {
            if args.vars == 0 || args.clauses == 0 {
                return Err(Failure { code: EXIT_USAGE, msg: "--vars and --clauses must be positive".into() });
            }
            let phi = random_cnf(&mut rng, args.vars, args.clauses);
            let sat = phi.satisfiable().map_err(Failure::data)?;
            let (p, q) = if args.kind == GenKind::SatCover { sat_to_cover(&phi) } else { sat_to_uninit_target(&phi) };
            let problem = if args.kind == GenKind::SatCover { "cover" } else { "target" };
            (p, q, problem, sat, json!({ "formula": phi.to_dimacs(), "ground_truth": "truth table" }))
        }
        GenKind::Cvp => {
            let c = match &args.circuit {
                Some(path) => Circuit::parse(&read(path)?).map_err(Failure::data)?,
                None => random_circuit(&mut rng, args.vars.max(1), args.clauses),
            };
            let value = c.evaluate().map_err(Failure::data)?;
            let (p, q) = cvp_to_cover(&c, args.desired).map_err(Failure::data)?;
            let source = json!({ "circuit": c.to_text(), "desired": args.desired, "ground_truth": "circuit evaluation" });
            (p, q, "cover", value == args.desired, source)
        }
    };
    let phi = if problem == "cover" { cover_constraint(q) } else { target_constraint(&p, q) };
    let kind = match args.kind {
        GenKind::SatCover => "sat-cover",
        GenKind::SatTarget => "sat-target",
        GenKind::Cvp => "cvp",
    };
    write(&args.out.join("protocol.prot"), &p.to_text())?;
    write(&args.out.join("constraint.pc"), &format!("{}\n", roundless_to_text(&p, &phi)))?;
    let mut meta = json!({
        "schema": 1,
        "generator": kind,
        "seed": args.seed,
        "problem": problem,
        "state": p.states[q],
        "answer": Answer::from_bool(expected).as_str(),
    });
    meta["source"] = source;
    write(&args.out.join("expected.json"), &format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()))?;
    eprintln!("wrote protocol.prot, constraint.pc and expected.json to {}", args.out.display());
    Ok(0)
}

fn cmd_fmt(protocol: &Path, constraint: Option<&Path>) -> Outcome {
    let p = load_protocol(protocol)?;
    match constraint {
        None => print!("{}", p.to_text()),
        Some(path) => {
            let text = read(path)?;
            let out = match p.flavor {
                Flavor::Roundless => roundless_to_text(&p, &parse_roundless(&p, &text).map_err(Failure::data)?),
                Flavor::RoundBased => roundbased_to_text(&p, &parse_roundbased(&p, &text).map_err(Failure::data)?),
            };
            println!("{out}");
        }
    }
    Ok(0)
}

fn cmd_examples(out: Option<&Path>) -> Outcome {
    let protocols = builtin_examples();
    let constraints = builtin_constraints();
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure { code: EXIT_IO, msg: e.to_string() })?;
            for (name, p) in &protocols {
                write(&dir.join(format!("{name}.prot")), &p.to_text())?;
            }
            for c in &constraints {
                write(&dir.join(format!("{}_{}.pc", c.protocol, c.name)), &format!("{}\n", c.text))?;
            }
        }
        None => {
            for (name, p) in &protocols {
                println!("# {name}\n{}", p.to_text());
            }
            for c in &constraints {
                println!("# {} over {}\n{}\n", c.name, c.protocol, c.text);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Replay { protocol, trace } => cmd_replay(&protocol, &trace),
        Command::Gen(a) => cmd_gen(a),
        Command::Fmt { protocol, constraint } => cmd_fmt(&protocol, constraint.as_deref()),
        Command::Examples { out } => cmd_examples(out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
