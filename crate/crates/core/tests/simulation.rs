mod common;

use common::{intervals, umdp};
use statrs::distribution::{ContinuousCDF, Normal};
use umdp_core::abstraction::TransitionBounds;
use umdp_core::automata::{bundled, Dfa, ProductUmdp};
use umdp_core::dynamics::Affine;
use umdp_core::geometry::{AxisBox, Partition};
use umdp_core::samples::NoiseDistribution;
use umdp_core::sim::{cell_seed, simulate, sweep_initial_states, EpisodeSettings, SimOutcome};
use umdp_core::synthesis::{robust_dp, Controller, Objective, RdpOptions, StrategyTable};

const MEAN: f64 = 0.1;
const SIGMA: f64 = 0.6;
const CAP: f64 = 1.5;

/// `[-1, 0)` plain, `[0, 1]` goal; the next state is pure noise.
fn partition() -> Partition {
    let goal = (AxisBox::new(vec![0.0], vec![1.0]).unwrap(), vec!["goal".to_string()]);
    Partition::build_grid(AxisBox::new(vec![-1.0], vec![1.0]).unwrap(), &[2], &[goal], &[1], &[false]).unwrap()
}

fn noise() -> NoiseDistribution {
    NoiseDistribution::truncated_box(vec![MEAN], vec![SIGMA], vec![-CAP], vec![CAP])
}

fn model() -> Affine {
    Affine::scalar(0.0, 0.0, &[0.0])
}

fn controller(dfa_name: &str) -> Controller {
    let p = partition();
    let abs = umdp(
        1,
        vec![
            intervals(&[(0, 0.0, 1.0), (1, 0.0, 1.0), (2, 0.0, 1.0)]),
            intervals(&[(0, 0.0, 1.0), (1, 0.0, 1.0), (2, 0.0, 1.0)]),
            TransitionBounds::dirac(2, None),
        ],
        vec![0, 1, 2],
    );
    let dfa = Dfa::from_json(bundled(dfa_name).unwrap()).unwrap();
    let product = ProductUmdp::build(&abs, &dfa.state_labels(&p).unwrap(), &dfa).unwrap();
    let vf = robust_dp(&product, &RdpOptions::default()).unwrap();
    Controller::new(p, dfa, StrategyTable::from_product(&product, &vf)).unwrap()
}

fn reach(max_steps: usize) -> EpisodeSettings {
    EpisodeSettings { max_steps, objective: Objective::Reach }
}

/// Success within `k` steps from the plain cell: each step lands in the goal,
/// stays plain or leaves `[-1, 1]` independently of the past.
fn analytic_reach(k: usize) -> f64 {
    let n = Normal::new(MEAN, SIGMA).unwrap();
    let z = n.cdf(CAP) - n.cdf(-CAP);
    let goal = (n.cdf(1.0) - n.cdf(0.0)) / z;
    let plain = (n.cdf(0.0) - n.cdf(-1.0)) / z;
    goal * (1.0 - plain.powi(k as i32)) / (1.0 - plain)
}

#[test]
fn closed_loop_rate_matches_analytic_chain() {
    let ctl = controller("phi1");
    for k in [1, 3, 8] {
        let runs = 20_000;
        let (out, _) = simulate(&ctl, &model(), &noise(), &[-0.5], reach(k), runs, 7, false);
        let expected = analytic_reach(k);
        let sd = (expected * (1.0 - expected) / runs as f64).sqrt();
        assert!((out.rate - expected).abs() <= 4.0 * sd, "k={k}: {} vs {expected}", out.rate);
        assert!(out.ci_low <= out.rate && out.rate <= out.ci_high);
    }
}

#[test]
fn trivial_spec_always_succeeds_and_unsafe_start_never_does() {
    let (out, _) = simulate(&controller("trivial"), &model(), &noise(), &[-0.5], reach(5), 200, 1, false);
    assert_eq!(out.rate, 1.0);
    let (out, recs) = simulate(&controller("phi1"), &model(), &noise(), &[3.0], reach(5), 200, 1, true);
    assert_eq!(out.rate, 0.0);
    assert!(recs.iter().all(|r| r.steps == 0 && r.labels[0] == vec!["unsafe".to_string()]));
}

#[test]
fn same_seed_gives_identical_trajectories() {
    let ctl = controller("phi1");
    let a = simulate(&ctl, &model(), &noise(), &[-0.3], reach(6), 300, 42, true);
    let b = simulate(&ctl, &model(), &noise(), &[-0.3], reach(6), 300, 42, true);
    assert_eq!(a, b);
    let c = simulate(&ctl, &model(), &noise(), &[-0.3], reach(6), 300, 43, true);
    assert_ne!(a.1, c.1);
}

#[test]
fn trajectories_are_well_formed() {
    let ctl = controller("phi1");
    let (out, recs) = simulate(&ctl, &model(), &noise(), &[-0.7], reach(4), 500, 3, true);
    assert_eq!(recs.len(), 500);
    assert_eq!(recs.iter().filter(|r| r.accepted).count(), out.successes);
    for r in &recs {
        assert_eq!(r.states.len(), r.actions.len() + 1);
        assert_eq!(r.labels.len(), r.states.len());
        assert_eq!(r.steps, r.actions.len());
        assert!(r.steps <= 4);
        if r.accepted {
            assert_eq!(r.labels.last().unwrap(), &vec!["goal".to_string()]);
        }
    }
}

#[test]
fn sweep_rows_match_independent_runs() {
    let ctl = controller("phi1");
    let cells = [0, 1, 2];
    let rows = sweep_initial_states(&ctl, &model(), &noise(), &cells, reach(5), 400, 9);
    assert_eq!(rows.len(), 3);
    for row in &rows[..2] {
        let x = ctl.partition().cell_center(row.cell_index).unwrap();
        let (out, _) = simulate(&ctl, &model(), &noise(), &x, reach(5), 400, cell_seed(9, row.cell_index), false);
        assert_eq!(row.x_center, x);
        assert_eq!(row.empirical, out.rate);
        assert_eq!((row.ci_low, row.ci_high), (out.ci_low, out.ci_high));
    }
    assert_eq!(rows[1].empirical, 1.0);
    assert_eq!((rows[2].empirical, rows[2].p_lower), (0.0, 0.0));
}

#[test]
fn longer_horizons_never_lower_the_reach_rate() {
    let ctl = controller("phi1");
    for seed in 0..10 {
        let rates: Vec<f64> =
            (1..=6).map(|k| simulate(&ctl, &model(), &noise(), &[-0.5], reach(k), 200, seed, false).0.rate).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]), "seed {seed}: {rates:?}");
    }
}

#[test]
fn confidence_interval_examples() {
    let o = SimOutcome::new(50, 100);
    assert!((o.ci_low - (0.5 - 1.96 * 0.05)).abs() < 1e-12);
    assert!((o.ci_high - (0.5 + 1.96 * 0.05)).abs() < 1e-12);
    let all = SimOutcome::new(10, 10);
    assert_eq!((all.rate, all.ci_low, all.ci_high), (1.0, 1.0, 1.0));
    assert_eq!(SimOutcome::new(0, 0).rate, 0.0);
}
