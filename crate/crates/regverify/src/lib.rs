//! Presence reachability for parameterized shared-memory register protocols.
//!
//! A protocol is a finite automaton run by any number of anonymous processes
//! that communicate only through shared registers. The crate decides whether
//! some execution reaches a configuration satisfying a presence constraint,
//! for both the roundless model and the round-based model where every round
//! has a fresh bank of registers.
//!
//! Everything works on the counting-free abstract semantics: a configuration
//! is the set of populated states (or locations) plus the register contents.

pub mod constraints;
pub mod footprint;
pub mod oracle;
mod packed;
pub mod protocol;
pub mod reductions;
pub mod roundbased;
pub mod roundless;
pub mod semantics;
pub mod trace;
pub mod verdict;

pub use constraints::{parse_roundbased, parse_roundless, RoundConstraint, RoundlessConstraint};
pub use protocol::{parse_protocol, Protocol};
pub use verdict::{Answer, Verdict};
