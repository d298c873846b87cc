mod common;

use common::toy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umdp_core::abstraction::{
    build_abstraction, hoeffding_eps, sample_complexity_closed_form, sufficient_samples, AbstractionParams,
    ConfidenceLedger, Mode, UmdpAbstraction, NO_BLOCK,
};
use umdp_core::geometry::Partition;
use umdp_core::pipeline;
use umdp_core::presets;
use umdp_core::samples::{smallest_support_eps, support_sample_count, NoiseModel};
use umdp_core::synthesis::{solve_lp, Direction};

#[test]
fn hoeffding_width_examples() {
    assert!((hoeffding_eps(0.02, 5000) - (100f64.ln() / 1e4).sqrt()).abs() < 1e-15);
    assert!((hoeffding_eps(0.02, 5000) - 0.021460).abs() < 5e-7);
    let beta = 2.0 / std::f64::consts::E.powi(2);
    assert!((hoeffding_eps(beta, 1) - 1.0).abs() < 1e-12);
    for n in [10, 1000, 12345] {
        assert!((hoeffding_eps(0.05, 4 * n) - hoeffding_eps(0.05, n) / 2.0).abs() < 1e-15);
    }
}

#[test]
fn confidence_ledger_examples() {
    // beta_c 0.005 plus 1e4 learned intervals at 1e-6 each
    let l = ConfidenceLedger::new(0.015, 0.005, 0.01, 10_001, 1000);
    assert!((l.beta - 1e-6).abs() < 1e-18);
    assert!((l.recomputed_alpha() - 0.015).abs() < 1e-15);
    let single = common::umdp(1, vec![common::intervals(&[(0, 0.0, 1.0)]), common::intervals(&[(1, 1.0, 1.0)])], vec![0, 1]);
    assert_eq!(single.n_learn(), 3);
}

#[test]
fn sample_requirements() {
    assert_eq!(support_sample_count(0.01, 0.01), 459);
    assert_eq!(support_sample_count(0.5, 0.5), 1);
    let (alpha, eps, eps_c, n_learn) = (0.01, 0.05, 0.01, 200u64);
    let n = sufficient_samples(alpha, eps, eps_c, n_learn);
    let beta = alpha / n_learn as f64;
    assert!(hoeffding_eps(beta, n as usize) <= eps);
    assert!(hoeffding_eps(beta, n as usize - 1) > eps || support_sample_count(eps_c, beta) == n);
    assert!(support_sample_count(eps_c, beta) <= n);
    // the closed form evaluated as printed
    let r = n_learn as f64 / alpha;
    let literal = (r / (2.0 * eps * eps)).ln().max((r / -(1.0 - eps_c).ln()).ln());
    assert!((sample_complexity_closed_form(alpha, eps, eps_c, n_learn) - literal).abs() < 1e-12);
}

fn toy_abstraction(mode: Mode, n: usize, seed: u64) -> (Partition, UmdpAbstraction) {
    let p = toy::partition(20, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = toy::noise().draw(&mut rng, n);
    let beta_c = 0.001;
    let eps_c = smallest_support_eps(n, beta_c);
    let noise = NoiseModel::new(samples, 40, eps_c, beta_c);
    let params = AbstractionParams { mode, alpha: 0.01, beta_c, eps_c };
    let abs = build_abstraction(&p, &toy::model(), &noise, &params).unwrap();
    (p, abs)
}

fn check_invariants(abs: &UmdpAbstraction) {
    let n = abs.n_states();
    for s in 0..n {
        for a in 0..abs.n_actions() {
            let v = abs.get(s, a);
            v.certificates(n, 1e-9).unwrap_or_else(|e| panic!("({s}, {a}): {e}"));
            for e in v.states {
                assert!(0.0 <= e.lo && e.lo <= e.hi && e.hi <= 1.0);
            }
            for b in v.blocks {
                assert!(0.0 <= b.lo && b.lo <= b.hi && b.hi <= 1.0);
            }
        }
    }
    let u = abs.unsafe_index();
    for a in 0..abs.n_actions() {
        let v = abs.get(u, a);
        assert_eq!(v.states.len(), 1);
        assert_eq!((v.states[0].state as usize, v.states[0].lo, v.states[0].hi), (u, 1.0, 1.0));
    }
    assert_eq!(abs.n_learn(), abs.ledger.n_learn);
    assert!((abs.ledger.recomputed_alpha() - abs.ledger.alpha).abs() < 1e-12);
}

#[test]
fn benchmark_builds_satisfy_set_invariants() {
    for mode in [Mode::Full, Mode::SupportOnlyImdp, Mode::NaiveImdp] {
        let cfg = {
            let mut c = presets::unicycle2d_phi2(20);
            c.synthesis.mode = mode;
            c
        };
        let prep = pipeline::prepare(&cfg, None).unwrap();
        let (abs, _) = pipeline::abstract_stage(&cfg, &prep, pipeline::noise_samples(&cfg, None).unwrap()).unwrap();
        check_invariants(&abs);
        check_invariants(&toy_abstraction(mode, 2000, 1).1);
    }
}

#[test]
fn naive_mode_keeps_intervals_and_widens_the_set() {
    let (_, full) = toy_abstraction(Mode::Full, 5000, 3);
    let (_, naive) = toy_abstraction(Mode::NaiveImdp, 5000, 3);
    assert!(full.ledger.eps_c <= naive.ledger.eps, "superset needs the support budget below the interval width");
    let n = full.n_states();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for s in 0..n - 1 {
        for a in 0..full.n_actions() {
            let (f, v) = (full.get(s, a), naive.get(s, a));
            for e in f.states {
                let m = v.find(e.state).expect("naive lists every state of C");
                assert_eq!((m.lo, m.hi), (e.lo, e.hi));
            }
            // vertices of the full set from random objectives
            for _ in 0..5 {
                let vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                for dir in [Direction::Minimize, Direction::Maximize] {
                    let (_, gamma) = solve_lp(&f, &vals, dir).unwrap();
                    assert!(v.violation(&gamma) <= 1e-9, "({s}, {a}) violation {}", v.violation(&gamma));
                }
            }
        }
    }
}

#[test]
fn true_probabilities_fall_inside_learned_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..3 {
        let (p, abs) = toy_abstraction(Mode::Full, 10_000, 100 + seed);
        for _ in 0..30 {
            let s = rng.random_range(0..p.n_cells());
            let a = rng.random_range(0..abs.n_actions());
            let b = p.cell_box(s).unwrap();
            let x = rng.random_range(b.lower[0]..b.upper[0]);
            let v = abs.get(s, a);
            for e in v.states {
                let t = e.state as usize;
                let prob = match p.cell_box(t) {
                    Some(c) => toy::transition(x, a, c.lower[0], c.upper[0]),
                    None => 1.0 - toy::transition(x, a, -1.0, 1.0),
                };
                assert!(e.lo - 1e-9 <= prob && prob <= e.hi + 1e-9, "state {t}: {prob} not in [{}, {}]", e.lo, e.hi);
            }
            for blk in v.blocks {
                let members: Vec<usize> = v.states.iter().filter(|e| e.block != NO_BLOCK && v.blocks[e.block as usize].block == blk.block).map(|e| e.state as usize).collect();
                let prob: f64 = members
                    .iter()
                    .map(|&t| match p.cell_box(t) {
                        Some(c) => toy::transition(x, a, c.lower[0], c.upper[0]),
                        None => 1.0 - toy::transition(x, a, -1.0, 1.0),
                    })
                    .sum();
                assert!(blk.lo - 1e-9 <= prob && prob <= blk.hi + 1e-9, "block {}: {prob} not in [{}, {}]", blk.block, blk.lo, blk.hi);
            }
        }
    }
}

#[test]
fn widths_shrink_as_samples_grow() {
    let mean_width = |n: usize| -> f64 {
        let mut total = 0.0;
        for seed in 0..10 {
            let (_, abs) = toy_abstraction(Mode::Full, n, 1000 + seed);
            let (mut w, mut k) = (0.0, 0usize);
            for s in 0..abs.n_states() - 1 {
                for a in 0..abs.n_actions() {
                    for e in abs.get(s, a).states {
                        w += e.hi - e.lo;
                        k += 1;
                    }
                }
            }
            total += w / k as f64;
        }
        total / 10.0
    };
    let widths: Vec<f64> = [100, 1000, 10_000].map(mean_width).to_vec();
    assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
}
