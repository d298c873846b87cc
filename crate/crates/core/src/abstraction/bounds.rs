//! Sparse per-(state, action) uncertainty sets.
//!
//! One set holds interval bounds on individual successors, interval bounds on
//! the total mass of coarse blocks, and either a mass budget (the listed
//! successors must carry at least `1 - budget`, everything else is free) or a
//! default upper bound applied to every successor that is not listed.

use serde::{Deserialize, Serialize};

pub const NO_BLOCK: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBound {
    pub state: u32,
    /// Position of this state's block in the block list, or `NO_BLOCK`.
    pub block: u32,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockBound {
    /// Global block id.
    pub block: u32,
    pub lo: f64,
    pub hi: f64,
}

/// Owned uncertainty set for one (state, action) pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionBounds {
    /// Sorted by state id.
    pub states: Vec<StateBound>,
    /// Sorted by global block id.
    pub blocks: Vec<BlockBound>,
    pub mass_budget: Option<f64>,
    pub default_upper: f64,
}

impl TransitionBounds {
    pub fn dirac(state: u32, block: Option<u32>) -> Self {
        let (blocks, local) = match block {
            Some(b) => (vec![BlockBound { block: b, lo: 1.0, hi: 1.0 }], 0),
            None => (Vec::new(), NO_BLOCK),
        };
        TransitionBounds {
            states: vec![StateBound { state, block: local, lo: 1.0, hi: 1.0 }],
            blocks,
            mass_budget: None,
            default_upper: 0.0,
        }
    }

    pub fn view(&self) -> BoundsView<'_> {
        BoundsView { states: &self.states, blocks: &self.blocks, mass_budget: self.mass_budget, default_upper: self.default_upper }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundsView<'a> {
    pub states: &'a [StateBound],
    pub blocks: &'a [BlockBound],
    pub mass_budget: Option<f64>,
    pub default_upper: f64,
}

impl<'a> BoundsView<'a> {
    pub fn to_owned(&self) -> TransitionBounds {
        TransitionBounds {
            states: self.states.to_vec(),
            blocks: self.blocks.to_vec(),
            mass_budget: self.mass_budget,
            default_upper: self.default_upper,
        }
    }

    pub fn find(&self, s: u32) -> Option<&'a StateBound> {
        self.states.binary_search_by_key(&s, |e| e.state).ok().map(|i| &self.states[i])
    }

    /// Upper bound of a successor, including unlisted ones.
    pub fn upper(&self, s: u32) -> f64 {
        match self.find(s) {
            Some(e) => e.hi,
            None if self.mass_budget.is_some() => 1.0,
            None => self.default_upper,
        }
    }

    /// Check the nonemptiness certificates. `n_states` is the size of the
    /// successor space.
    pub fn certificates(&self, n_states: usize, tol: f64) -> Result<(), String> {
        let mut sum_lo = 0.0;
        let mut sum_hi = 0.0;
        let mut prev = None;
        for e in self.states {
            if !(0.0 <= e.lo && e.lo <= e.hi && e.hi <= 1.0) {
                return Err(format!("state {} has bounds [{}, {}]", e.state, e.lo, e.hi));
            }
            if prev.is_some_and(|p| p >= e.state) {
                return Err("state list is not strictly sorted".into());
            }
            if e.block != NO_BLOCK && e.block as usize >= self.blocks.len() {
                return Err(format!("state {} points at missing block {}", e.state, e.block));
            }
            prev = Some(e.state);
            sum_lo += e.lo;
            sum_hi += e.hi;
        }
        if sum_lo > 1.0 + tol {
            return Err(format!("lower bounds sum to {sum_lo}"));
        }
        match self.mass_budget {
            Some(eps_c) => {
                if sum_hi < 1.0 - eps_c - tol {
                    return Err(format!("listed upper bounds sum to {sum_hi} < 1 - {eps_c}"));
                }
            }
            None => {
                let rest = self.default_upper * n_states.saturating_sub(self.states.len()) as f64;
                if sum_hi + rest < 1.0 - tol {
                    return Err(format!("upper bounds sum to {}", sum_hi + rest));
                }
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for e in self.states.iter().filter(|e| e.block as usize == k) {
                lo += e.lo;
                hi += e.hi;
            }
            if !(0.0 <= b.lo && b.lo <= b.hi && b.hi <= 1.0) {
                return Err(format!("block {} has bounds [{}, {}]", b.block, b.lo, b.hi));
            }
            if b.lo > hi + tol || b.hi < lo - tol {
                return Err(format!("block {} bounds [{}, {}] vs member sums [{lo}, {hi}]", b.block, b.lo, b.hi));
            }
        }
        Ok(())
    }

    /// Whether `gamma` (dense over the successor space) lies in the set.
    pub fn contains(&self, gamma: &[f64], tol: f64) -> bool {
        self.violation(gamma) <= tol
    }

    /// Largest constraint violation of a dense distribution.
    pub fn violation(&self, gamma: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        let total: f64 = gamma.iter().sum();
        worst = worst.max((total - 1.0).abs());
        let mut listed = vec![false; gamma.len()];
        let mut sum_listed = 0.0;
        let mut block_sum = vec![0.0; self.blocks.len()];
        for e in self.states {
            let g = gamma[e.state as usize];
            listed[e.state as usize] = true;
            sum_listed += g;
            worst = worst.max(e.lo - g).max(g - e.hi);
            if e.block != NO_BLOCK {
                block_sum[e.block as usize] += g;
            }
        }
        for (b, s) in self.blocks.iter().zip(&block_sum) {
            worst = worst.max(b.lo - s).max(s - b.hi);
        }
        for (s, g) in gamma.iter().enumerate() {
            worst = worst.max(-g);
            if !listed[s] && self.mass_budget.is_none() {
                worst = worst.max(g - self.default_upper);
            }
        }
        if let Some(eps_c) = self.mass_budget {
            worst = worst.max(1.0 - eps_c - sum_listed);
        }
        worst
    }
}

/// Flattened storage of all (state, action) sets, indexed by `s * n_actions + a`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsStore {
    pub n_states: usize,
    pub n_actions: usize,
    state_offsets: Vec<usize>,
    block_offsets: Vec<usize>,
    states: Vec<StateBound>,
    blocks: Vec<BlockBound>,
    budget: Vec<Option<f64>>,
    default_upper: Vec<f64>,
}

impl BoundsStore {
    pub fn from_sets(n_states: usize, n_actions: usize, sets: Vec<TransitionBounds>) -> Self {
        assert_eq!(sets.len(), n_states * n_actions);
        let mut st = BoundsStore {
            n_states,
            n_actions,
            state_offsets: vec![0],
            block_offsets: vec![0],
            ..Default::default()
        };
        for t in sets {
            st.states.extend_from_slice(&t.states);
            st.blocks.extend_from_slice(&t.blocks);
            st.state_offsets.push(st.states.len());
            st.block_offsets.push(st.blocks.len());
            st.budget.push(t.mass_budget);
            st.default_upper.push(t.default_upper);
        }
        st
    }

    pub fn get(&self, s: usize, a: usize) -> BoundsView<'_> {
        let k = s * self.n_actions + a;
        BoundsView {
            states: &self.states[self.state_offsets[k]..self.state_offsets[k + 1]],
            blocks: &self.blocks[self.block_offsets[k]..self.block_offsets[k + 1]],
            mass_budget: self.budget[k],
            default_upper: self.default_upper[k],
        }
    }

    /// Rebuild with every set passed through `f`.
    pub fn map(&self, f: impl Fn(usize, usize, BoundsView<'_>) -> TransitionBounds) -> BoundsStore {
        let sets = (0..self.n_states)
            .flat_map(|s| (0..self.n_actions).map(move |a| (s, a)))
            .map(|(s, a)| f(s, a, self.get(s, a)))
            .collect();
        BoundsStore::from_sets(self.n_states, self.n_actions, sets)
    }

    pub fn n_entries(&self) -> usize {
        self.states.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_lookup_and_violation() {
        let t = TransitionBounds {
            states: vec![
                StateBound { state: 0, block: NO_BLOCK, lo: 0.1, hi: 0.5 },
                StateBound { state: 2, block: 0, lo: 0.2, hi: 0.6 },
            ],
            blocks: vec![BlockBound { block: 7, lo: 0.3, hi: 0.9 }],
            mass_budget: None,
            default_upper: 0.4,
        };
        let v = t.view();
        assert_eq!(v.upper(2), 0.6);
        assert_eq!(v.upper(1), 0.4);
        assert!(v.certificates(3, 1e-12).is_ok());
        assert!(v.contains(&[0.3, 0.3, 0.4], 1e-12));
        assert!(!v.contains(&[0.5, 0.45, 0.05], 1e-12));
    }

    #[test]
    fn store_round_trip() {
        let sets = vec![TransitionBounds::dirac(0, Some(0)), TransitionBounds::dirac(1, None)];
        let st = BoundsStore::from_sets(2, 1, sets.clone());
        assert_eq!(st.get(1, 0).to_owned(), sets[1]);
        assert_eq!(st.get(0, 0).blocks.len(), 1);
    }
}
