use crate::abstraction::{BoundsView, StateBound, TransitionBounds, UmdpAbstraction, NO_BLOCK};

/// Replace the mass-budget constraint by moving the budget onto the unsafe
/// state: its upper bound (and that of its block) grows by the budget, every
/// unlisted successor gets upper bound zero, and the result is clamped.
/// Sets without a budget are returned unchanged.
pub fn simplify_bounds(v: BoundsView<'_>, unsafe_state: u32, unsafe_block: u32) -> TransitionBounds {
    let mut t = v.to_owned();
    let Some(eps_c) = v.mass_budget else {
        return t;
    };
    let local_block = t.blocks.iter().position(|b| b.block == unsafe_block).map(|k| k as u32).unwrap_or(NO_BLOCK);
    match t.states.binary_search_by_key(&unsafe_state, |e| e.state) {
        Ok(i) => t.states[i].hi = (t.states[i].hi + eps_c).min(1.0),
        Err(i) => t.states.insert(i, StateBound { state: unsafe_state, block: local_block, lo: 0.0, hi: eps_c.min(1.0) }),
    }
    if local_block != NO_BLOCK {
        let b = &mut t.blocks[local_block as usize];
        b.hi = (b.hi + eps_c).min(1.0);
    }
    t.mass_budget = None;
    t.default_upper = 0.0;
    t
}

pub fn simplify(abs: &UmdpAbstraction) -> UmdpAbstraction {
    let us = abs.unsafe_index() as u32;
    let ub = abs.block_of[abs.unsafe_index()];
    UmdpAbstraction { bounds: abs.bounds.map(|_, _, v| simplify_bounds(v, us, ub)), ..abs.clone_without_bounds() }
}

impl UmdpAbstraction {
    fn clone_without_bounds(&self) -> UmdpAbstraction {
        UmdpAbstraction {
            mode: self.mode,
            bounds: Default::default(),
            ledger: self.ledger,
            learned: self.learned.clone(),
            block_of: self.block_of.clone(),
            support_radius: self.support_radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::BlockBound;

    fn sample() -> TransitionBounds {
        TransitionBounds {
            states: vec![
                StateBound { state: 0, block: 0, lo: 0.3, hi: 0.7 },
                StateBound { state: 4, block: 1, lo: 0.0, hi: 0.02 },
            ],
            blocks: vec![BlockBound { block: 0, lo: 0.3, hi: 0.7 }, BlockBound { block: 9, lo: 0.0, hi: 0.02 }],
            mass_budget: Some(0.01),
            default_upper: 0.0,
        }
    }

    #[test]
    fn budget_moves_to_unsafe() {
        let t = simplify_bounds(sample().view(), 4, 9);
        assert!((t.states[1].hi - 0.03).abs() < 1e-15);
        assert!((t.blocks[1].hi - 0.03).abs() < 1e-15);
        assert_eq!(t.mass_budget, None);
        assert_eq!(t.default_upper, 0.0);
    }

    #[test]
    fn zero_budget_only_drops_constraint() {
        let mut s = sample();
        s.mass_budget = Some(0.0);
        let t = simplify_bounds(s.view(), 4, 9);
        assert_eq!(t.states, s.states);
        assert_eq!(t.blocks, s.blocks);
        assert_eq!(t.mass_budget, None);
    }

    #[test]
    fn missing_unsafe_entry_is_created() {
        let mut s = sample();
        s.states.pop();
        s.blocks.pop();
        let t = simplify_bounds(s.view(), 4, 9);
        assert_eq!(t.states[1], StateBound { state: 4, block: NO_BLOCK, lo: 0.0, hi: 0.01 });
    }
}
