//! Reference adversary: the inner problem as a dense linear program.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::omax::Direction;
use crate::abstraction::{BoundsView, NO_BLOCK};
use crate::error::{Error, Result};

/// Optimise `Σ γ(s) values[s]` over the set by linear programming. Handles
/// mass budgets and default upper bounds directly; `values.len()` is the
/// size of the successor space. Returns the objective and a dense optimum.
pub fn solve_lp(view: &BoundsView<'_>, values: &[f64], dir: Direction) -> Result<(f64, Vec<f64>)> {
    let n = values.len();
    let mut p = Problem::new(match dir {
        Direction::Minimize => OptimizationDirection::Minimize,
        Direction::Maximize => OptimizationDirection::Maximize,
    });
    let listed: Vec<_> = view.states.iter().map(|e| p.add_var(values[e.state as usize], (e.lo, e.hi))).collect();
    let free_hi = if view.mass_budget.is_some() { 1.0 } else { view.default_upper };
    let mut others = Vec::new();
    if free_hi > 0.0 {
        let mut k = 0;
        for s in 0..n as u32 {
            if k < view.states.len() && view.states[k].state == s {
                k += 1;
                continue;
            }
            others.push((s, p.add_var(values[s as usize], (0.0, free_hi))));
        }
    }
    let total: Vec<_> = listed.iter().chain(others.iter().map(|(_, v)| v)).map(|&v| (v, 1.0)).collect();
    p.add_constraint(total.as_slice(), ComparisonOp::Eq, 1.0);
    for (k, b) in view.blocks.iter().enumerate() {
        let members: Vec<_> =
            view.states.iter().zip(&listed).filter(|(e, _)| e.block != NO_BLOCK && e.block as usize == k).map(|(_, &v)| (v, 1.0)).collect();
        if members.is_empty() {
            continue;
        }
        p.add_constraint(members.as_slice(), ComparisonOp::Ge, b.lo);
        p.add_constraint(members.as_slice(), ComparisonOp::Le, b.hi);
    }
    if let Some(eps_c) = view.mass_budget {
        let all: Vec<_> = listed.iter().map(|&v| (v, 1.0)).collect();
        p.add_constraint(all.as_slice(), ComparisonOp::Ge, 1.0 - eps_c);
    }
    let sol = p.solve().map_err(|e| match e {
        microlp::Error::Infeasible => Error::LpInfeasible,
        other => Error::Config(format!("lp solver: {other}")),
    })?;
    let mut gamma = vec![0.0; n];
    for (e, v) in view.states.iter().zip(&listed) {
        gamma[e.state as usize] = *sol.var_value(*v);
    }
    for (s, v) in &others {
        gamma[*s as usize] = *sol.var_value(*v);
    }
    let obj = gamma.iter().zip(values).map(|(g, v)| g * v).sum();
    Ok((obj, gamma))
}
