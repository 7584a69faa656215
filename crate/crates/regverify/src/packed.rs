//! Bit-packed abstract configurations over a bounded round range, used by the
//! explicit-state searches.

use crate::protocol::{Action, Protocol, Transition, D0};
use crate::semantics::{AbstractConfig, Loc, Move};

pub(crate) type Key = (u128, u128);

#[derive(Clone, Debug)]
pub(crate) struct Packer {
    pub nq: usize,
    pub r: usize,
    pub rounds: u32,
    pub bits: u32,
}

impl Packer {
    /// `None` when the configuration space does not fit in two words.
    pub fn new(p: &Protocol, rounds: u32) -> Option<Packer> {
        let nsym = p.num_symbols().max(2);
        let bits = usize::BITS - (nsym - 1).leading_zeros();
        let pk = Packer { nq: p.num_states(), r: p.registers, rounds, bits };
        if pk.nq * rounds as usize > 128 || (rounds as usize) * pk.r * bits as usize > 128 {
            return None;
        }
        Some(pk)
    }

    #[inline]
    pub fn loc_bit(&self, q: usize, k: u32) -> u128 {
        1u128 << (k as usize * self.nq + q)
    }

    #[inline]
    pub fn reg(&self, regs: u128, k: u32, j: usize) -> usize {
        if k >= self.rounds {
            return D0;
        }
        let shift = (k as usize * self.r + j) * self.bits as usize;
        ((regs >> shift) & ((1u128 << self.bits) - 1)) as usize
    }

    #[inline]
    pub fn set_reg(&self, regs: u128, k: u32, j: usize, s: usize) -> u128 {
        let shift = (k as usize * self.r + j) * self.bits as usize;
        let mask = ((1u128 << self.bits) - 1) << shift;
        (regs & !mask) | ((s as u128) << shift)
    }

    pub fn pack(&self, c: &AbstractConfig) -> Option<Key> {
        let mut locs = 0u128;
        for l in &c.locs {
            if l.round >= self.rounds {
                return None;
            }
            locs |= self.loc_bit(l.state, l.round);
        }
        let mut regs = 0u128;
        for (&(k, j), &s) in &c.regs {
            if k >= self.rounds {
                return None;
            }
            regs = self.set_reg(regs, k, j, s);
        }
        Some((locs, regs))
    }

    pub fn unpack(&self, key: Key) -> AbstractConfig {
        let mut c = AbstractConfig::default();
        for k in 0..self.rounds {
            for q in 0..self.nq {
                if key.0 & self.loc_bit(q, k) != 0 {
                    c.locs.insert(Loc::new(q, k));
                }
            }
            for j in 0..self.r {
                let s = self.reg(key.1, k, j);
                if s != D0 {
                    c.regs.insert((k, j), s);
                }
            }
        }
        c
    }

    /// Successors in canonical order: transitions in declaration order,
    /// source rounds ascending, non-deserting before deserting. Only moves
    /// whose effect stays inside the packed rounds are produced.
    pub fn successors(&self, transitions: &[Transition], key: Key, out: &mut Vec<(Move, Key)>) {
        out.clear();
        let (locs, regs) = key;
        for t in transitions {
            for k in 0..self.rounds {
                let src = self.loc_bit(t.source, k);
                if locs & src == 0 {
                    continue;
                }
                let (dest, nregs) = match t.action {
                    Action::Read { depth, reg, sym } => {
                        if depth > k || self.reg(regs, k - depth, reg) != sym {
                            continue;
                        }
                        (self.loc_bit(t.dest, k), regs)
                    }
                    Action::Write { reg, sym } => (self.loc_bit(t.dest, k), self.set_reg(regs, k, reg, sym)),
                    Action::Inc => {
                        if k + 1 >= self.rounds {
                            continue;
                        }
                        (self.loc_bit(t.dest, k + 1), regs)
                    }
                };
                out.push((Move::new(*t, k, false), (locs | dest, nregs)));
                if src != dest {
                    out.push((Move::new(*t, k, true), ((locs & !src) | dest, nregs)));
                }
            }
        }
    }
}
