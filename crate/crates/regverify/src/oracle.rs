//! Exhaustive abstract reachability, used as ground truth.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::constraints::{eval_roundbased, eval_roundless, max_constant, RoundConstraint, RoundlessConstraint};
use crate::packed::{Key, Packer};
use crate::protocol::{Flavor, Protocol};
use crate::semantics::{all_initial_configurations, AbstractConfig, Execution, Move};
use crate::verdict::{Answer, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_states: usize,
    /// Bound on `|D|^r` for roundless protocols.
    pub max_valuations: u64,
    pub max_nodes: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_states: 12, max_valuations: 1 << 20, max_nodes: 4_000_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance exceeds the oracle caps: {0}")]
    CapExceeded(String),
    #[error("round-based reachability needs a round cap")]
    MissingRoundCap,
    #[error("constraint flavor does not match the protocol")]
    FlavorMismatch,
}

/// Reachable abstract configurations with first-discovered parent links.
#[derive(Clone, Debug)]
pub struct ReachSet {
    packer: Packer,
    nodes: Vec<Key>,
    parents: Vec<Option<(u32, Move)>>,
    index: FxHashMap<Key, u32>,
}

impl ReachSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn config(&self, i: usize) -> AbstractConfig {
        self.packer.unpack(self.nodes[i])
    }

    pub fn members(&self) -> impl Iterator<Item = AbstractConfig> + '_ {
        self.nodes.iter().map(|k| self.packer.unpack(*k))
    }

    pub fn contains(&self, c: &AbstractConfig) -> bool {
        self.packer.pack(c).is_some_and(|k| self.index.contains_key(&k))
    }

    pub fn position(&self, c: &AbstractConfig) -> Option<usize> {
        self.packer.pack(c).and_then(|k| self.index.get(&k).map(|&i| i as usize))
    }

    /// Path from an initial configuration to member `i`.
    pub fn witness(&self, i: usize) -> Execution<AbstractConfig> {
        let mut steps = Vec::new();
        let mut cur = i;
        while let Some((par, m)) = self.parents[cur] {
            steps.push(m);
            cur = par as usize;
        }
        steps.reverse();
        Execution { start: self.config(cur), steps }
    }

    /// Canonical newline-delimited encoding, sorted, for diffing.
    pub fn export(&self, p: &Protocol) -> String {
        let mut lines: Vec<String> = self.members().map(|c| c.display(p).to_string()).collect();
        lines.sort();
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// BFS over the packed space; stops early at the first member satisfying `stop`.
fn explore(
    p: &Protocol,
    packer: Packer,
    caps: &OracleCaps,
    mut stop: impl FnMut(&AbstractConfig) -> bool,
) -> Result<(ReachSet, Option<usize>), OracleError> {
    let mut rs = ReachSet { packer, nodes: Vec::new(), parents: Vec::new(), index: FxHashMap::default() };
    let mut queue = VecDeque::new();
    for c in all_initial_configurations(p) {
        let key = rs.packer.pack(&c).expect("initial configurations fit");
        if rs.index.contains_key(&key) {
            continue;
        }
        rs.index.insert(key, rs.nodes.len() as u32);
        rs.nodes.push(key);
        rs.parents.push(None);
        queue.push_back(rs.nodes.len() - 1);
    }
    let mut succ = Vec::new();
    let mut checked = 0;
    while let Some(i) = queue.pop_front() {
        while checked <= i {
            if stop(&rs.config(checked)) {
                return Ok((rs, Some(checked)));
            }
            checked += 1;
        }
        rs.packer.successors(&p.transitions, rs.nodes[i], &mut succ);
        for &(m, key) in &succ {
            if rs.index.contains_key(&key) {
                continue;
            }
            if rs.nodes.len() >= caps.max_nodes {
                return Err(OracleError::CapExceeded(format!("more than {} configurations", caps.max_nodes)));
            }
            rs.index.insert(key, rs.nodes.len() as u32);
            rs.nodes.push(key);
            rs.parents.push(Some((i as u32, m)));
            queue.push_back(rs.nodes.len() - 1);
        }
    }
    while checked < rs.nodes.len() {
        if stop(&rs.config(checked)) {
            return Ok((rs, Some(checked)));
        }
        checked += 1;
    }
    Ok((rs, None))
}

fn roundless_packer(p: &Protocol, caps: &OracleCaps) -> Result<Packer, OracleError> {
    if p.num_states() > caps.max_states {
        return Err(OracleError::CapExceeded(format!("{} states > {}", p.num_states(), caps.max_states)));
    }
    let vals = (p.num_symbols() as u64).checked_pow(p.registers as u32).unwrap_or(u64::MAX);
    if vals > caps.max_valuations {
        return Err(OracleError::CapExceeded(format!("{vals} register valuations")));
    }
    Packer::new(p, 1).ok_or_else(|| OracleError::CapExceeded("configuration does not pack".into()))
}

/// The full abstract reach set of a roundless protocol.
pub fn reach_roundless(p: &Protocol, caps: &OracleCaps) -> Result<ReachSet, OracleError> {
    if p.flavor != Flavor::Roundless {
        return Err(OracleError::FlavorMismatch);
    }
    let packer = roundless_packer(p, caps)?;
    explore(p, packer, caps, |_| false).map(|r| r.0)
}

/// Everything reachable using only moves whose effect stays on rounds `0..=k_max`.
pub fn reach_roundbased_capped(p: &Protocol, k_max: u32, caps: &OracleCaps) -> Result<ReachSet, OracleError> {
    if p.flavor != Flavor::RoundBased {
        return Err(OracleError::FlavorMismatch);
    }
    let packer = Packer::new(p, k_max + 1)
        .ok_or_else(|| OracleError::CapExceeded(format!("{} rounds do not pack", k_max + 1)))?;
    explore(p, packer, caps, |_| false).map(|r| r.0)
}

/// Default round cap for checking a round-based constraint: `(v+1)(M+2)+2`.
pub fn default_round_cap(p: &Protocol, psi: &RoundConstraint) -> u32 {
    (p.visibility + 1) * (max_constant(psi) + 2) + 2
}

/// Either constraint language, matched to the protocol flavor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyConstraint {
    Roundless(RoundlessConstraint),
    RoundBased(RoundConstraint),
}

type Check<'a> = Box<dyn Fn(&AbstractConfig) -> bool + 'a>;

/// Decides PRP by exhaustive search; round-based instances need `k_max`.
pub fn oracle_prp(
    p: &Protocol,
    constraint: &AnyConstraint,
    k_max: Option<u32>,
    caps: &OracleCaps,
) -> Result<Verdict, OracleError> {
    let (packer, check): (Packer, Check<'_>) = match (p.flavor, constraint) {
        (Flavor::Roundless, AnyConstraint::Roundless(phi)) => {
            (roundless_packer(p, caps)?, Box::new(move |c: &AbstractConfig| eval_roundless(c, phi)))
        }
        (Flavor::RoundBased, AnyConstraint::RoundBased(psi)) => {
            let k = k_max.ok_or(OracleError::MissingRoundCap)?;
            let packer = Packer::new(p, k + 1)
                .ok_or_else(|| OracleError::CapExceeded(format!("{} rounds do not pack", k + 1)))?;
            (packer, Box::new(move |c: &AbstractConfig| eval_roundbased(c, psi, c.active_bound())))
        }
        _ => return Err(OracleError::FlavorMismatch),
    };
    let (rs, hit) = explore(p, packer, caps, |c| check(c))?;
    let n = rs.len() as u64;
    Ok(match hit {
        Some(i) => Verdict::new(Answer::Positive, "oracle").with_nodes(n).with_witness(rs.witness(i)),
        None => Verdict::new(Answer::Negative, "oracle").with_nodes(n),
    })
}
