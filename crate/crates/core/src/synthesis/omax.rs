//! Greedy inner optimisation over a two-layer interval set: start from the
//! lower bounds, fill every block up to its own lower bound, then pour the
//! remaining mass into successors in value order under state and block caps.

use crate::abstraction::{BoundsView, NO_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Residual mass above which the greedy pass reports an empty set.
pub const MASS_TOL: f64 = 1e-9;

/// Monotone map of an f64 onto u64 (total order, -0.0 below +0.0).
#[inline]
pub fn order_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

/// All states sorted ascending by `(value, state)`.
pub fn ascending_order(values: &[f64], out: &mut Vec<u32>) {
    let mut keys: Vec<u128> = values.iter().enumerate().map(|(s, &v)| (order_key(v) as u128) << 32 | s as u128).collect();
    keys.sort_unstable();
    out.clear();
    out.extend(keys.iter().map(|k| *k as u32));
}

/// Reusable buffers. After a successful `solve`, `gamma[i]` is the mass on
/// `view.states[i]` and `extra` holds mass placed on unlisted states.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    keys: Vec<u128>,
    pub gamma: Vec<f64>,
    block_mass: Vec<f64>,
    mark: Vec<u32>,
    generation: u32,
    pub extra: Vec<(u32, f64)>,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dense copy of the last solution over `n` states.
    pub fn dense(&self, view: &BoundsView<'_>, n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        for (e, m) in view.states.iter().zip(&self.gamma) {
            g[e.state as usize] += m;
        }
        for &(s, m) in &self.extra {
            g[s as usize] += m;
        }
        g
    }
}

/// Optimise `Σ γ(s) values[s]` over the set. `values` covers the whole
/// successor space. Unlisted states with a positive default upper bound are
/// merged in through `ascending`, the ascending `(value, state)` order of all
/// states; it must be supplied whenever `view.default_upper > 0`.
/// Sets carrying a mass budget must be simplified first.
pub fn solve(
    view: &BoundsView<'_>,
    values: &[f64],
    dir: Direction,
    scratch: &mut Scratch,
    ascending: Option<&[u32]>,
) -> Result<f64, String> {
    if view.mass_budget.is_some() {
        return Err("set still carries a mass budget".into());
    }
    let st = view.states;
    let m = st.len();
    let Scratch { keys, gamma, block_mass, mark, generation, extra } = scratch;
    keys.clear();
    keys.extend(st.iter().enumerate().map(|(i, e)| (order_key(values[e.state as usize]) as u128) << 32 | i as u128));
    keys.sort_unstable();
    if dir == Direction::Maximize {
        keys.reverse();
    }
    gamma.clear();
    gamma.extend(st.iter().map(|e| e.lo));
    extra.clear();
    block_mass.clear();
    block_mass.resize(view.blocks.len(), 0.0);
    let mut mass = 1.0;
    for e in st {
        mass -= e.lo;
        if e.block != NO_BLOCK {
            block_mass[e.block as usize] += e.lo;
        }
    }
    // blocks up to their lower bounds
    if !view.blocks.is_empty() {
        for &k in keys.iter() {
            let i = k as u32 as usize;
            let e = &st[i];
            if e.block == NO_BLOCK {
                continue;
            }
            let b = e.block as usize;
            let need = view.blocks[b].lo - block_mass[b];
            if need > 0.0 {
                let g = need.min(e.hi - gamma[i]).max(0.0);
                gamma[i] += g;
                block_mass[b] += g;
                mass -= g;
            }
        }
    }
    let cap = |i: usize, gamma: &[f64], block_mass: &[f64]| -> f64 {
        let e = &st[i];
        let mut c = e.hi - gamma[i];
        if e.block != NO_BLOCK {
            let b = e.block as usize;
            c = c.min(view.blocks[b].hi - block_mass[b]);
        }
        c.max(0.0)
    };
    let pour = |i: usize, mass: &mut f64, gamma: &mut [f64], block_mass: &mut [f64]| {
        let g = cap(i, gamma, block_mass).min(*mass);
        if g > 0.0 {
            gamma[i] += g;
            if st[i].block != NO_BLOCK {
                block_mass[st[i].block as usize] += g;
            }
            *mass -= g;
        }
    };
    let du = view.default_upper;
    if du > 0.0 {
        let asc = ascending.ok_or_else(|| "global value order required for default bounds".to_string())?;
        let gen = scratch_mark(mark, generation, values.len());
        for e in st {
            mark[e.state as usize] = gen;
        }
        let n = asc.len();
        let global = |j: usize| if dir == Direction::Minimize { asc[j] } else { asc[n - 1 - j] };
        let (mut i, mut j) = (0usize, 0usize);
        while mass > 0.0 && (i < m || j < n) {
            while j < n && mark[global(j) as usize] == gen {
                j += 1;
            }
            let take_listed = if i >= m {
                false
            } else if j >= n {
                true
            } else {
                let li = keys[i] as u32 as usize;
                let a = (order_key(values[st[li].state as usize]), st[li].state);
                let g = global(j);
                let b = (order_key(values[g as usize]), g);
                match dir {
                    Direction::Minimize => a <= b,
                    Direction::Maximize => a >= b,
                }
            };
            if take_listed {
                let li = keys[i] as u32 as usize;
                pour(li, &mut mass, gamma, block_mass);
                i += 1;
            } else {
                let g = global(j);
                let put = du.min(mass);
                extra.push((g, put));
                mass -= put;
                j += 1;
            }
        }
    } else {
        for &k in keys.iter() {
            if mass <= 0.0 {
                break;
            }
            pour(k as u32 as usize, &mut mass, gamma, block_mass);
        }
    }
    if mass.abs() > MASS_TOL {
        return Err(format!("greedy fill left residual mass {mass:e}"));
    }
    let mut obj = 0.0;
    for (e, g) in st.iter().zip(gamma.iter()) {
        obj += g * values[e.state as usize];
    }
    for &(s, g) in extra.iter() {
        obj += g * values[s as usize];
    }
    Ok(obj)
}

fn scratch_mark(mark: &mut Vec<u32>, generation: &mut u32, n: usize) -> u32 {
    if mark.len() < n {
        mark.resize(n, 0);
    }
    *generation = generation.wrapping_add(1);
    if *generation == 0 {
        mark.iter_mut().for_each(|m| *m = 0);
        *generation = 1;
    }
    *generation
}

/// One-shot convenience wrapper returning the objective and a dense optimum.
pub fn solve_dense(view: &BoundsView<'_>, values: &[f64], dir: Direction) -> Result<(f64, Vec<f64>), String> {
    let mut sc = Scratch::new();
    let mut asc = Vec::new();
    let order = if view.default_upper > 0.0 {
        ascending_order(values, &mut asc);
        Some(asc.as_slice())
    } else {
        None
    };
    let obj = solve(view, values, dir, &mut sc, order)?;
    Ok((obj, sc.dense(view, values.len())))
}
