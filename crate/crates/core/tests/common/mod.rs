#![allow(dead_code)]

use rand::Rng;
use umdp_core::abstraction::{
    BlockBound, BoundsStore, ConfidenceLedger, Mode, StateBound, TransitionBounds, UmdpAbstraction, NO_BLOCK,
};

pub fn entry(state: u32, lo: f64, hi: f64) -> StateBound {
    StateBound { state, block: NO_BLOCK, lo, hi }
}

pub fn intervals(entries: &[(u32, f64, f64)]) -> TransitionBounds {
    TransitionBounds {
        states: entries.iter().map(|&(s, lo, hi)| entry(s, lo, hi)).collect(),
        blocks: Vec::new(),
        mass_budget: None,
        default_upper: 0.0,
    }
}

/// Hand-built abstraction; `sets` is in `s * n_actions + a` order and the
/// last state must be the absorbing unsafe sentinel.
pub fn umdp(n_actions: usize, sets: Vec<TransitionBounds>, block_of: Vec<u32>) -> UmdpAbstraction {
    let n = sets.len() / n_actions;
    assert_eq!(block_of.len(), n);
    let learned = vec![(1, 1); (n - 1) * n_actions];
    UmdpAbstraction {
        mode: Mode::Full,
        bounds: BoundsStore::from_sets(n, n_actions, sets),
        ledger: ConfidenceLedger::new(0.01, 0.001, 0.01, 1 + 2 * ((n - 1) * n_actions) as u64, 1000),
        learned,
        block_of,
        support_radius: 0.0,
    }
}

/// Random abstraction with a mass budget: a hidden distribution puts mass at
/// least `1 - eps_c` on the listed successors, and every listed interval and
/// block bound brackets it. Blocks pair up consecutive states; the unsafe
/// state (last) has a block of its own.
pub fn random_budget_umdp<R: Rng>(rng: &mut R, n: usize, n_actions: usize, eps_c: f64) -> UmdpAbstraction {
    let unsafe_state = n - 1;
    let block_of: Vec<u32> = (0..n).map(|s| if s == unsafe_state { ((n - 1) / 2 + 1) as u32 } else { (s / 2) as u32 }).collect();
    let mut sets = Vec::new();
    for s in 0..n {
        for _ in 0..n_actions {
            if s == unsafe_state {
                sets.push(TransitionBounds::dirac(s as u32, Some(block_of[s])));
                continue;
            }
            let listed: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
            let listed = if listed.is_empty() { vec![rng.random_range(0..n)] } else { listed };
            let outside = rng.random::<f64>() * eps_c;
            let mut hidden: Vec<f64> = listed.iter().map(|_| rng.random::<f64>() + 0.01).collect();
            let total: f64 = hidden.iter().sum();
            hidden.iter_mut().for_each(|h| *h *= (1.0 - outside) / total);
            let mut states = Vec::new();
            let mut blocks: Vec<BlockBound> = Vec::new();
            let mut block_mass: Vec<f64> = Vec::new();
            for (&t, &h) in listed.iter().zip(&hidden) {
                let g = block_of[t];
                let local = match blocks.iter().position(|b| b.block == g) {
                    Some(k) => k,
                    None => {
                        blocks.push(BlockBound { block: g, lo: 0.0, hi: 0.0 });
                        block_mass.push(0.0);
                        blocks.len() - 1
                    }
                };
                block_mass[local] += h;
                let lo = h * rng.random::<f64>();
                let hi = (h + (1.0 - h) * rng.random::<f64>() * 0.3).min(1.0);
                states.push(StateBound { state: t as u32, block: local as u32, lo, hi });
            }
            for (b, &m) in blocks.iter_mut().zip(&block_mass) {
                b.lo = m * rng.random::<f64>();
                b.hi = (m + (1.0 - m) * rng.random::<f64>() * 0.3).min(1.0);
            }
            // block list must be sorted by global id with states pointing at local positions
            let mut perm: Vec<usize> = (0..blocks.len()).collect();
            perm.sort_by_key(|&k| blocks[k].block);
            let mut inv = vec![0u32; perm.len()];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = new as u32;
            }
            let blocks = perm.iter().map(|&k| blocks[k]).collect();
            for e in &mut states {
                e.block = inv[e.block as usize];
            }
            sets.push(TransitionBounds { states, blocks, mass_budget: Some(eps_c), default_upper: 0.0 });
        }
    }
    umdp(n_actions, sets, block_of)
}

/// Label masks for the reach-avoid automaton (`goal` = bit 0, `unsafe` = bit 1).
pub fn reach_avoid_labels(n: usize, goals: &[usize]) -> Vec<u32> {
    (0..n).map(|s| if s == n - 1 { 2 } else if goals.contains(&s) { 1 } else { 0 }).collect()
}

pub mod toy {
    //! `x' = 0.8 x + u + w` on `[-1, 1]` with `w ~ N(0, 0.1²)` truncated to
    //! `[-0.3, 0.3]`; true transition probabilities by Simpson's rule.

    use umdp_core::dynamics::Affine;
    use umdp_core::geometry::{AxisBox, Partition};
    use umdp_core::samples::NoiseDistribution;

    pub const A: f64 = 0.8;
    pub const INPUTS: [f64; 3] = [-0.2, 0.0, 0.2];
    pub const SIGMA: f64 = 0.1;
    pub const CAP: f64 = 0.3;

    pub fn model() -> Affine {
        Affine::scalar(A, 0.0, &INPUTS)
    }

    pub fn partition(cells: usize, block: usize) -> Partition {
        Partition::build_grid(AxisBox::new(vec![-1.0], vec![1.0]).unwrap(), &[cells], &[], &[block], &[false]).unwrap()
    }

    pub fn noise() -> NoiseDistribution {
        NoiseDistribution::truncated_box(vec![0.0], vec![SIGMA], vec![-CAP], vec![CAP])
    }

    fn density(w: f64) -> f64 {
        (-0.5 * (w / SIGMA).powi(2)).exp()
    }

    pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let n = panels + panels % 2;
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Probability that `x'` lands in `[lo, hi]` from `x` under input `a`.
    pub fn transition(x: f64, a: usize, lo: f64, hi: f64) -> f64 {
        let shift = A * x + INPUTS[a];
        let z = simpson(density, -CAP, CAP, 4000);
        let wl = (lo - shift).max(-CAP);
        let wh = (hi - shift).min(CAP);
        simpson(density, wl, wh, 4000) / z
    }
}
