//! Robust dynamic programming on a product abstraction: Jacobi sweeps of
//! `max_a min_γ` (lower values) and `max_a max_γ` (upper values).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lp::solve_lp;
use super::omax::{ascending_order, solve, Direction, Scratch};
use crate::automata::ProductUmdp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Reach an accepting product state; accepting states are pinned to one.
    Reach,
    /// Remain in accepting product states; the rest are pinned to zero.
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Unbounded { tol: f64, max_iters: usize },
    Bounded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    TwoLayer,
    Lp,
}

impl std::str::FromStr for Adversary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two-layer" | "greedy" => Ok(Adversary::TwoLayer),
            "lp" => Ok(Adversary::Lp),
            _ => Err(format!("unknown adversary `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpOptions {
    pub objective: Objective,
    pub horizon: Horizon,
    pub adversary: Adversary,
    /// Also iterate the optimistic values.
    pub compute_upper: bool,
}

impl Default for RdpOptions {
    fn default() -> Self {
        RdpOptions {
            objective: Objective::Reach,
            horizon: Horizon::Unbounded { tol: 1e-6, max_iters: 10_000 },
            adversary: Adversary::TwoLayer,
            compute_upper: true,
        }
    }
}

/// Values are indexed by product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub lower: Vec<f64>,
    pub upper: Option<Vec<f64>>,
    pub strategy: Vec<u32>,
    pub iterations: usize,
    pub residual: f64,
    /// False when an unbounded run hit `max_iters` first; values are partial.
    pub converged: bool,
    /// Largest per-sweep move against the expected monotone direction.
    pub monotone_violation: f64,
}

/// Gain a new action needs over the current one before the strategy switches.
const SWITCH_TOL: f64 = 1e-12;

pub fn robust_dp(product: &ProductUmdp<'_>, opts: &RdpOptions) -> Result<ValueFunction> {
    let np = product.n_states();
    let n = product.n_base_states();
    let n_z = product.n_dfa_states();
    let n_a = product.n_actions();
    let base = product.base();
    let needs_order = opts.adversary == Adversary::TwoLayer
        && (0..n).any(|s| (0..n_a).any(|a| base.get(s, a).default_upper > 0.0));
    let init = |i: usize| if product.is_accepting(i) { 1.0 } else { 0.0 };
    let mut lower: Vec<f64> = (0..np).map(init).collect();
    let mut upper: Vec<f64> = if opts.compute_upper { lower.clone() } else { Vec::new() };
    let mut strategy = vec![u32::MAX; np];
    let (mut val_lo, mut val_hi) = (Vec::new(), Vec::new());
    let mut ord_lo: Vec<Vec<u32>> = vec![Vec::new(); if needs_order { n_z } else { 0 }];
    let mut ord_hi: Vec<Vec<u32>> = ord_lo.clone();
    let (max_sweeps, tol) = match opts.horizon {
        Horizon::Unbounded { tol, max_iters } => (max_iters, Some(tol)),
        Horizon::Bounded(k) => (k, None),
    };
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut violation: f64 = 0.0;
    if max_sweeps == 0 {
        residual = 0.0;
    }
    while iterations < max_sweeps {
        product.successor_values(&lower, &mut val_lo);
        if opts.compute_upper {
            product.successor_values(&upper, &mut val_hi);
        }
        if needs_order {
            for z in 0..n_z {
                ascending_order(&val_lo[z * n..(z + 1) * n], &mut ord_lo[z]);
                if opts.compute_upper {
                    ascending_order(&val_hi[z * n..(z + 1) * n], &mut ord_hi[z]);
                }
            }
        }
        let inner = |sc: &mut Scratch, i: usize, a: usize, vals: &[f64], ords: &[Vec<u32>], dir: Direction| -> Result<f64> {
            let (s, z) = product.state(i);
            let view = product.bounds(i, a);
            let v = &vals[z * n..(z + 1) * n];
            match opts.adversary {
                Adversary::TwoLayer => {
                    let ord = if needs_order { Some(ords[z].as_slice()) } else { None };
                    solve(&view, v, dir, sc, ord).map_err(|reason| Error::InfeasibleGamma { state: s, action: a, reason })
                }
                Adversary::Lp => solve_lp(&view, v, dir).map(|r| r.0),
            }
        };
        let rows: Vec<(f64, f64, u32)> = (0..np)
            .into_par_iter()
            .map_init(Scratch::new, |sc, i| -> Result<(f64, f64, u32)> {
                let pinned = match opts.objective {
                    Objective::Reach => product.is_accepting(i),
                    Objective::Stay => !product.is_accepting(i),
                };
                if pinned {
                    let v = init(i);
                    return Ok((v, v, strategy[i]));
                }
                let mut q = [0.0f64; 64];
                let mut qv = Vec::new();
                let qs: &mut [f64] = if n_a <= 64 {
                    &mut q[..n_a]
                } else {
                    qv.resize(n_a, 0.0);
                    &mut qv
                };
                let mut hi = f64::NEG_INFINITY;
                for a in 0..n_a {
                    qs[a] = inner(sc, i, a, &val_lo, &ord_lo, Direction::Minimize)?;
                    if opts.compute_upper {
                        hi = hi.max(inner(sc, i, a, &val_hi, &ord_hi, Direction::Maximize)?);
                    }
                }
                let mut best = 0;
                for a in 1..n_a {
                    if qs[a] > qs[best] {
                        best = a;
                    }
                }
                let prev = strategy[i];
                let act = if prev != u32::MAX && qs[best] <= qs[prev as usize] + SWITCH_TOL { prev } else { best as u32 };
                Ok((qs[best], hi, act))
            })
            .collect::<Result<_>>()?;
        let mut res: f64 = 0.0;
        for (i, &(lo, hi, act)) in rows.iter().enumerate() {
            let d = lo - lower[i];
            res = res.max(d.abs());
            violation = violation.max(match opts.objective {
                Objective::Reach => -d,
                Objective::Stay => d,
            });
            lower[i] = lo;
            if opts.compute_upper {
                let d = hi - upper[i];
                res = res.max(d.abs());
                upper[i] = hi;
            }
            strategy[i] = act;
        }
        residual = res;
        iterations += 1;
        debug_assert!(violation <= 1e-9, "value iteration lost monotonicity by {violation}");
        if tol.is_some_and(|t| res < t) {
            break;
        }
    }
    let converged = tol.is_none_or(|t| residual < t);
    for s in strategy.iter_mut().filter(|s| **s == u32::MAX) {
        *s = 0;
    }
    Ok(ValueFunction { lower, upper: opts.compute_upper.then_some(upper), strategy, iterations, residual, converged, monotone_violation: violation })
}

impl ValueFunction {
    /// Turn a non-converged run into `NoConvergence`.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { iterations: self.iterations, residual: self.residual })
        }
    }

    /// Lower value of base state `s` before any step.
    pub fn lower_at(&self, product: &ProductUmdp<'_>, s: usize) -> f64 {
        self.lower[product.lift(s)]
    }

    pub fn upper_at(&self, product: &ProductUmdp<'_>, s: usize) -> Option<f64> {
        self.upper.as_ref().map(|u| u[product.lift(s)])
    }

    /// Mean upper-minus-lower gap over the safe base states.
    pub fn average_gap(&self, product: &ProductUmdp<'_>) -> Option<f64> {
        let up = self.upper.as_ref()?;
        let safe = product.n_base_states() - 1;
        let total: f64 = (0..safe).map(|s| up[product.lift(s)] - self.lower[product.lift(s)]).sum();
        Some(total / safe.max(1) as f64)
    }
}
