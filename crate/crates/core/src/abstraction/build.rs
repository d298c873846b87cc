use std::collections::HashMap;

use rayon::prelude::*;

use super::bounds::{BlockBound, BoundsStore, StateBound, TransitionBounds, NO_BLOCK};
use super::{AbstractionParams, ConfidenceLedger, Mode, UmdpAbstraction};
use crate::dynamics::{reach_overapprox, Dynamics};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Partition};
use crate::samples::{support_sample_count, NoiseModel};

/// Fractions of weighted boxes inside, and touching, a union of states.
/// Containment is decided on the grid: a box is inside the union when every
/// cell it overlaps belongs to it (and the union holds the unsafe state if the
/// box leaves the safe box).
pub fn empirical_counts(p: &Partition, boxes: &[(AxisBox, f64)], target: &[usize]) -> (f64, f64) {
    let mut member = vec![false; p.n_states()];
    for &t in target {
        member[t] = true;
    }
    let unsafe_in = member[p.unsafe_index()];
    let (mut inside, mut touch) = (0.0, 0.0);
    for (b, w) in boxes {
        let cov = p.cover(b);
        let (mut all, mut any) = (true, false);
        if !cov.outside {
            p.for_each_cell(&cov.spans, |c| {
                all &= member[c];
                any |= member[c];
            });
        }
        if cov.escapes {
            all &= unsafe_in;
            any |= unsafe_in;
        }
        if all {
            inside += w;
        }
        if any {
            touch += w;
        }
    }
    (inside, touch)
}

/// Raw sample counts for one (state, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    /// Successor states covered by the chosen blocks, sorted.
    pub c_states: Vec<u32>,
    /// Blocks touched by the reach set under the learned support, sorted.
    pub q_blocks: Vec<u32>,
    /// `(state, contained, intersecting)` for every state any cluster touches.
    pub states: Vec<(u32, u64, u64)>,
    /// `(block, contained, intersecting)` for every block any cluster touches.
    pub blocks: Vec<(u32, u64, u64)>,
    pub n: u64,
}

fn support_cover(p: &Partition, model: &dyn Dynamics, noise: &NoiseModel, region: &AxisBox, a: usize) -> Vec<u32> {
    let zero = vec![0.0; noise.dim()];
    let hat = reach_overapprox(model, region, a, &zero, noise.support.radius);
    let cov = p.cover(&hat);
    let mut q = Vec::new();
    if !cov.outside {
        p.for_each_cell(&cov.spans, |c| q.push(p.block_of(c) as u32));
    }
    if cov.escapes {
        q.push(p.unsafe_block() as u32);
    }
    q.sort_unstable();
    q.dedup();
    q
}

fn block_len(p: &Partition, q: u32) -> u32 {
    if q as usize == p.unsafe_block() {
        1
    } else {
        p.block_shape().iter().product::<usize>() as u32
    }
}

pub fn pair_counts(p: &Partition, model: &dyn Dynamics, noise: &NoiseModel, s: usize, a: usize) -> PairCounts {
    let region = p.cell_box(s).expect("safe state");
    let q_blocks = support_cover(p, model, noise, &region, a);
    let mut c_states: Vec<u32> = q_blocks.iter().flat_map(|&q| p.block_states(q as usize)).map(|v| v as u32).collect();
    c_states.sort_unstable();

    let mut st: HashMap<u32, (u64, u64)> = HashMap::new();
    let mut bl: HashMap<u32, (u64, u64)> = HashMap::new();
    let unsafe_s = p.unsafe_index() as u32;
    let unsafe_b = p.unsafe_block() as u32;
    let mut touched_blocks = Vec::new();
    for cl in &noise.clusters {
        let b = reach_overapprox(model, &region, a, &cl.center, 0.5 * cl.diameter);
        let cov = p.cover(&b);
        let n = cl.count as u64;
        let single = cov.single_cell();
        touched_blocks.clear();
        if !cov.outside {
            p.for_each_cell(&cov.spans, |c| {
                let e = st.entry(c as u32).or_default();
                e.1 += n;
                if single {
                    e.0 += n;
                }
                touched_blocks.push(p.block_of(c) as u32);
            });
        }
        touched_blocks.sort_unstable();
        touched_blocks.dedup();
        let one_block = !cov.escapes && touched_blocks.len() == 1;
        for &q in &touched_blocks {
            let e = bl.entry(q).or_default();
            e.1 += n;
            if one_block {
                e.0 += n;
            }
        }
        if cov.escapes {
            let e = st.entry(unsafe_s).or_default();
            e.1 += n;
            if cov.outside {
                e.0 += n;
            }
            let e = bl.entry(unsafe_b).or_default();
            e.1 += n;
            if cov.outside {
                e.0 += n;
            }
        }
    }
    let mut states: Vec<(u32, u64, u64)> = st.into_iter().map(|(k, (c, i))| (k, c, i)).collect();
    states.sort_unstable();
    let mut blocks: Vec<(u32, u64, u64)> = bl.into_iter().map(|(k, (c, i))| (k, c, i)).collect();
    blocks.sort_unstable();
    PairCounts { c_states, q_blocks, states, blocks, n: noise.n() as u64 }
}

fn lookup(v: &[(u32, u64, u64)], k: u32) -> (u64, u64) {
    match v.binary_search_by_key(&k, |e| e.0) {
        Ok(i) => (v[i].1, v[i].2),
        Err(_) => (0, 0),
    }
}

fn interval(cont: u64, inter: u64, n: u64, eps: f64) -> (f64, f64) {
    let lo = (cont as f64 / n as f64 - eps).max(0.0);
    let hi = (inter as f64 / n as f64 + eps).min(1.0);
    (lo, hi)
}

/// Uncertainty set of one pair under `mode`.
pub(crate) fn bounds_from_counts(p: &Partition, pc: &PairCounts, mode: Mode, eps: f64, eps_c: f64) -> TransitionBounds {
    match mode {
        Mode::Full | Mode::SupportOnlyImdp => {
            let with_blocks = mode == Mode::Full;
            let states = pc
                .c_states
                .iter()
                .map(|&s2| {
                    let (c, i) = lookup(&pc.states, s2);
                    let (lo, hi) = interval(c, i, pc.n, eps);
                    let block = if with_blocks {
                        let q = p.block_of(s2 as usize) as u32;
                        pc.q_blocks.binary_search(&q).expect("C is the union of Q") as u32
                    } else {
                        NO_BLOCK
                    };
                    StateBound { state: s2, block, lo, hi }
                })
                .collect();
            let blocks = if with_blocks {
                pc.q_blocks
                    .iter()
                    .map(|&q| {
                        let (c, i) = lookup(&pc.blocks, q);
                        let (lo, hi) = interval(c, i, pc.n, eps);
                        BlockBound { block: q, lo, hi }
                    })
                    .collect()
            } else {
                Vec::new()
            };
            TransitionBounds { states, blocks, mass_budget: Some(eps_c), default_upper: 0.0 }
        }
        Mode::NaiveImdp => {
            let mut ids: Vec<u32> = pc.c_states.iter().copied().chain(pc.states.iter().map(|e| e.0)).collect();
            ids.sort_unstable();
            ids.dedup();
            let states = ids
                .into_iter()
                .map(|s2| {
                    let (c, i) = lookup(&pc.states, s2);
                    let (lo, hi) = interval(c, i, pc.n, eps);
                    StateBound { state: s2, block: NO_BLOCK, lo, hi }
                })
                .collect();
            TransitionBounds { states, blocks: Vec::new(), mass_budget: None, default_upper: eps.min(1.0) }
        }
    }
}

fn unsafe_dirac(p: &Partition, mode: Mode) -> TransitionBounds {
    let block = (mode == Mode::Full).then_some(p.unsafe_block() as u32);
    TransitionBounds::dirac(p.unsafe_index() as u32, block)
}

/// Build the abstraction. A first pass sizes the learned intervals so the
/// confidence budget can be split evenly; the second pass fills the bounds.
/// The interval width comes from the full-mode interval count for every mode
/// so that modes built from the same samples are comparable.
pub fn build_abstraction(
    p: &Partition,
    model: &dyn Dynamics,
    noise: &NoiseModel,
    params: &AbstractionParams,
) -> Result<UmdpAbstraction> {
    if model.state_dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: model.state_dim() });
    }
    if model.noise_dim() != noise.dim() {
        return Err(Error::DimensionMismatch { expected: model.noise_dim(), found: noise.dim() });
    }
    if !(params.alpha > params.beta_c && params.alpha < 1.0 && params.beta_c > 0.0) {
        return Err(Error::Config(format!("need 0 < beta_c < alpha < 1, got beta_c {} alpha {}", params.beta_c, params.alpha)));
    }
    if !(params.eps_c > 0.0 && params.eps_c < 1.0) {
        return Err(Error::Config(format!("eps_c must lie in (0, 1), got {}", params.eps_c)));
    }
    let need = support_sample_count(params.eps_c, params.beta_c);
    if params.mode != Mode::NaiveImdp && (noise.n() as u64) < need {
        return Err(Error::InsufficientSamples { have: noise.n(), need: need as usize });
    }
    let n_cells = p.n_cells();
    let n_actions = model.n_controls();
    let pairs: Vec<(usize, usize)> = (0..n_cells).flat_map(|s| (0..n_actions).map(move |a| (s, a))).collect();

    let learned: Vec<(u32, u32)> = pairs
        .par_iter()
        .map(|&(s, a)| {
            let region = p.cell_box(s).expect("safe state");
            let q = support_cover(p, model, noise, &region, a);
            let c: u32 = q.iter().map(|&b| block_len(p, b)).sum();
            (c, q.len() as u32)
        })
        .collect();
    let n_learn = 1 + learned.iter().map(|&(c, q)| c as u64 + q as u64).sum::<u64>();
    let ledger = ConfidenceLedger::new(params.alpha, params.beta_c, params.eps_c, n_learn, noise.n());

    let mut sets: Vec<TransitionBounds> = pairs
        .par_iter()
        .map(|&(s, a)| {
            let pc = pair_counts(p, model, noise, s, a);
            let t = bounds_from_counts(p, &pc, params.mode, ledger.eps, params.eps_c);
            t.view()
                .certificates(p.n_states(), 1e-9)
                .map_err(|reason| Error::InfeasibleGamma { state: s, action: a, reason })?;
            Ok(t)
        })
        .collect::<Result<_>>()?;
    for _ in 0..n_actions {
        sets.push(unsafe_dirac(p, params.mode));
    }
    let block_of = (0..p.n_states()).map(|s| p.block_of(s) as u32).collect();
    Ok(UmdpAbstraction {
        mode: params.mode,
        bounds: BoundsStore::from_sets(p.n_states(), n_actions, sets),
        ledger,
        learned,
        block_of,
        support_radius: noise.support.radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Affine;
    use crate::samples::Samples;

    fn line(n: usize) -> Partition {
        let b = AxisBox::new(vec![0.0], vec![1.0]).unwrap();
        Partition::build_grid(b, &[n], &[], &[1], &[false]).unwrap()
    }

    #[test]
    fn hand_enumerated_counts() {
        let p = line(10);
        let boxes: Vec<(AxisBox, f64)> = [(0.1, 0.2), (0.3, 0.4), (0.45, 0.55), (0.9, 1.1)]
            .iter()
            .map(|&(l, u)| (AxisBox { lower: vec![l], upper: vec![u] }, 0.25))
            .collect();
        let target: Vec<usize> = (0..5).collect();
        assert_eq!(empirical_counts(&p, &boxes, &target), (0.5, 0.75));
        let all: Vec<usize> = (0..p.n_states()).collect();
        assert_eq!(empirical_counts(&p, &boxes, &all), (1.0, 1.0));
        let far: Vec<(AxisBox, f64)> = vec![(AxisBox { lower: vec![2.0], upper: vec![3.0] }, 1.0)];
        assert_eq!(empirical_counts(&p, &far, &target), (0.0, 0.0));
    }

    #[test]
    fn deterministic_point_mass() {
        // x' = 0.3 + w with w = 0: every cell of [0, 1] maps into cell 2 of 8
        let p = Partition::build_grid(AxisBox::new(vec![0.0], vec![1.0]).unwrap(), &[8], &[], &[2], &[false]).unwrap();
        let m = Affine::scalar(0.0, 0.3, &[0.0]);
        let noise = NoiseModel::new(Samples::from_rows(&vec![vec![0.0]; 500]).unwrap(), 1, 0.01, 0.01);
        let params = AbstractionParams { mode: Mode::Full, alpha: 0.05, beta_c: 0.01, eps_c: 0.01 };
        let abs = build_abstraction(&p, &m, &noise, &params).unwrap();
        let eps = abs.ledger.eps;
        let v = abs.get(5, 0);
        let e = v.find(2).unwrap();
        assert!((e.lo - (1.0 - eps)).abs() < 1e-15 && e.hi == 1.0);
        let b = v.blocks[e.block as usize];
        assert_eq!(b.block, 1);
        assert!((b.lo - (1.0 - eps)).abs() < 1e-15 && b.hi == 1.0);
        assert!((abs.ledger.recomputed_alpha() - 0.05).abs() < 1e-12);
        assert_eq!(abs.n_learn(), abs.ledger.n_learn);
    }
}
