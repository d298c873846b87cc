//! Product of an abstraction with an automaton. Successor bounds are never
//! copied: the bound on `(s', z')` from `(s, z)` is the base bound on `s'`
//! when `z' = δ(z, L(s'))` and zero otherwise, and block bounds are the base
//! block bounds. The product therefore only stores the automaton successor
//! of every `(z, s')` and the reachable state set.

use std::collections::VecDeque;

use super::dfa::Dfa;
use crate::abstraction::{BoundsView, UmdpAbstraction};
use crate::error::Result;

pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct ProductUmdp<'a> {
    base: &'a UmdpAbstraction,
    n_z: usize,
    /// `next[z * |S| + s']`
    next: Vec<u32>,
    states: Vec<(u32, u32)>,
    index: Vec<u32>,
    accepting: Vec<bool>,
    lift: Vec<u32>,
}

impl<'a> ProductUmdp<'a> {
    /// `labels[s]` is the automaton label mask of base state `s`.
    pub fn build(base: &'a UmdpAbstraction, labels: &[u32], dfa: &Dfa) -> Result<Self> {
        let n = base.n_states();
        assert_eq!(labels.len(), n, "one label per base state");
        let n_z = dfa.n_states();
        let mut next = vec![0u32; n_z * n];
        for z in 0..n_z {
            for s in 0..n {
                next[z * n + s] = dfa.step(z, labels[s]) as u32;
            }
        }
        let mut index = vec![UNREACHED; n * n_z];
        let mut states = Vec::new();
        let mut queue = VecDeque::new();
        let mut visit = |s: usize, z: usize, states: &mut Vec<(u32, u32)>, queue: &mut VecDeque<u32>| -> u32 {
            let k = s * n_z + z;
            if index[k] == UNREACHED {
                index[k] = states.len() as u32;
                states.push((s as u32, z as u32));
                queue.push_back(index[k]);
            }
            index[k]
        };
        let mut lift = Vec::with_capacity(n);
        for s in 0..n {
            let z = next[dfa.initial() * n + s] as usize;
            lift.push(visit(s, z, &mut states, &mut queue));
        }
        while let Some(i) = queue.pop_front() {
            let (s, z) = states[i as usize];
            let (s, z) = (s as usize, z as usize);
            let mut everything = false;
            for a in 0..base.n_actions() {
                let v = base.get(s, a);
                if v.mass_budget.is_some() || v.default_upper > 0.0 {
                    everything = true;
                    break;
                }
                for e in v.states.iter().filter(|e| e.hi > 0.0) {
                    let s2 = e.state as usize;
                    visit(s2, next[z * n + s2] as usize, &mut states, &mut queue);
                }
            }
            if everything {
                for s2 in 0..n {
                    visit(s2, next[z * n + s2] as usize, &mut states, &mut queue);
                }
            }
        }
        let accepting = states.iter().map(|&(_, z)| dfa.is_accepting(z as usize)).collect();
        Ok(ProductUmdp { base, n_z, next, states, index, accepting, lift })
    }

    pub fn base(&self) -> &'a UmdpAbstraction {
        self.base
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.base.n_actions()
    }

    pub fn n_dfa_states(&self) -> usize {
        self.n_z
    }

    pub fn n_base_states(&self) -> usize {
        self.base.n_states()
    }

    pub fn state(&self, i: usize) -> (usize, usize) {
        let (s, z) = self.states[i];
        (s as usize, z as usize)
    }

    pub fn index_of(&self, s: usize, z: usize) -> Option<usize> {
        let k = self.index[s * self.n_z + z];
        (k != UNREACHED).then_some(k as usize)
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.accepting[i]
    }

    pub fn accepting(&self) -> &[bool] {
        &self.accepting
    }

    /// Product state of base state `s` before any step has been taken.
    pub fn lift(&self, s: usize) -> usize {
        self.lift[s] as usize
    }

    pub fn next_dfa(&self, z: usize, s2: usize) -> usize {
        self.next[z * self.base.n_states() + s2] as usize
    }

    /// Base bounds of the pair; successors carry automaton state `next_dfa(z, s')`.
    pub fn bounds(&self, i: usize, a: usize) -> BoundsView<'a> {
        let (s, _) = self.states[i];
        self.base.get(s as usize, a)
    }

    /// Product index of the successor `s2` reached from automaton state `z`.
    pub fn successor(&self, z: usize, s2: usize) -> Option<usize> {
        self.index_of(s2, self.next_dfa(z, s2))
    }

    /// Dense product values reorganised per automaton state:
    /// `out[z * |S| + s'] = p(s', δ(z, L(s')))`, zero when unreached.
    pub fn successor_values(&self, p: &[f64], out: &mut Vec<f64>) {
        let n = self.base.n_states();
        out.clear();
        out.resize(self.n_z * n, 0.0);
        for z in 0..self.n_z {
            for s2 in 0..n {
                let k = self.index[s2 * self.n_z + self.next[z * n + s2] as usize];
                if k != UNREACHED {
                    out[z * n + s2] = p[k as usize];
                }
            }
        }
    }
}
