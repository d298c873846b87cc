//! Closed-loop Monte Carlo runs of a synthesized controller.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::Result;
use crate::samples::NoiseDistribution;
use crate::synthesis::{Controller, Objective};

/// Episode settings shared by every run of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSettings {
    pub max_steps: usize,
    /// `Reach`: succeed on acceptance. `Stay`: succeed when every visited
    /// automaton state is accepting for `max_steps` steps.
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub x0: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub labels: Vec<Vec<String>>,
    pub accepted: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub runs: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SimOutcome {
    /// Rate with a two-sided 95% normal-approximation interval.
    pub fn new(successes: usize, runs: usize) -> Self {
        let rate = if runs == 0 { 0.0 } else { successes as f64 / runs as f64 };
        let half = if runs == 0 { 0.0 } else { 1.96 * (rate * (1.0 - rate) / runs as f64).sqrt() };
        SimOutcome { runs, successes, rate, ci_low: (rate - half).max(0.0), ci_high: (rate + half).min(1.0) }
    }
}

/// RNG for one episode, independent of scheduling.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// One episode: stops on acceptance, on entering the unsafe region or a
/// rejecting automaton sink, or after `max_steps` steps (failure).
pub fn run_episode(
    controller: &Controller,
    model: &dyn Dynamics,
    noise: &NoiseDistribution,
    x0: &[f64],
    settings: EpisodeSettings,
    rng: &mut ChaCha8Rng,
    record: bool,
) -> (bool, Option<TrajectoryRecord>) {
    let max_steps = settings.max_steps;
    let stay = settings.objective == Objective::Stay;
    let mut ctl = controller.clone();
    let p = controller.partition();
    let names = |s: usize| p.label_names(s).into_iter().map(String::from).collect::<Vec<_>>();
    let mut x = x0.to_vec();
    p.wrap(&mut x);
    ctl.reset(&x);
    let mut rec = record.then(|| TrajectoryRecord {
        x0: x0.to_vec(),
        states: vec![x.clone()],
        actions: Vec::new(),
        labels: vec![names(ctl.cell())],
        accepted: false,
        steps: 0,
    });
    let mut w = vec![0.0; noise.dim()];
    let mut next = vec![0.0; x.len()];
    let mut steps = 0;
    let unsafe_state = p.unsafe_index();
    let running = |c: &Controller| {
        if stay {
            c.accepted()
        } else {
            !c.accepted() && c.cell() != unsafe_state && !c.rejected()
        }
    };
    while running(&ctl) && steps < max_steps {
        let a = ctl.action();
        noise.sample_into(rng, &mut w);
        model.step(&x, a, &w, &mut next);
        std::mem::swap(&mut x, &mut next);
        p.wrap(&mut x);
        ctl.observe(&x);
        steps += 1;
        if let Some(r) = rec.as_mut() {
            r.states.push(x.clone());
            r.actions.push(a);
            r.labels.push(names(ctl.cell()));
        }
    }
    let ok = ctl.accepted() && (!stay || steps == max_steps);
    if let Some(r) = rec.as_mut() {
        r.accepted = ok;
        r.steps = steps;
    }
    (ok, rec)
}

/// `n_runs` episodes from `x0`; episode `k` draws from `episode_rng(seed, k)`.
pub fn simulate(
    controller: &Controller,
    model: &dyn Dynamics,
    noise: &NoiseDistribution,
    x0: &[f64],
    settings: EpisodeSettings,
    n_runs: usize,
    seed: u64,
    record: bool,
) -> (SimOutcome, Vec<TrajectoryRecord>) {
    let results: Vec<(bool, Option<TrajectoryRecord>)> = (0..n_runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = episode_rng(seed, k as u64);
            run_episode(controller, model, noise, x0, settings, &mut rng, record)
        })
        .collect();
    let successes = results.iter().filter(|r| r.0).count();
    (SimOutcome::new(successes, n_runs), results.into_iter().filter_map(|r| r.1).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell_index: usize,
    pub x_center: Vec<f64>,
    pub p_lower: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Seed used for the episodes started in `cell`.
pub fn cell_seed(seed: u64, cell: usize) -> u64 {
    seed ^ (cell as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulate from the center of every listed cell; the unsafe state is
/// reported with rate 0.
pub fn sweep_initial_states(
    controller: &Controller,
    model: &dyn Dynamics,
    noise: &NoiseDistribution,
    cells: &[usize],
    settings: EpisodeSettings,
    n_runs: usize,
    seed: u64,
) -> Vec<SweepRow> {
    let p = controller.partition();
    cells
        .iter()
        .map(|&c| {
            let Some(x) = p.cell_center(c) else {
                let out = SimOutcome::new(0, n_runs);
                return SweepRow { cell_index: c, x_center: Vec::new(), p_lower: 0.0, empirical: 0.0, ci_low: out.ci_low, ci_high: out.ci_high };
            };
            let mut ctl = controller.clone();
            let bound = ctl.reset(&x);
            let (out, _) = simulate(controller, model, noise, &x, settings, n_runs, cell_seed(seed, c), false);
            SweepRow { cell_index: c, x_center: x, p_lower: bound, empirical: out.rate, ci_low: out.ci_low, ci_high: out.ci_high }
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], dim: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["cell_index".to_string()];
    header.extend((0..dim).map(|i| format!("x_center_{i}")));
    header.extend(["p_lower", "empirical", "ci_low", "ci_high"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.cell_index.to_string()];
        rec.extend((0..dim).map(|i| r.x_center.get(i).map(|v| v.to_string()).unwrap_or_default()));
        rec.extend([r.p_lower, r.empirical, r.ci_low, r.ci_high].map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per time step: `step, x_0.., action, labels, accepted`; the
/// final row has an empty action.
pub fn write_trajectory_csv(r: &TrajectoryRecord, path: &Path) -> Result<()> {
    let dim = r.x0.len();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["step".to_string()];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    header.extend(["action", "labels", "accepted"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for (k, x) in r.states.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(x.iter().map(|v| v.to_string()));
        rec.push(r.actions.get(k).map(|a| a.to_string()).unwrap_or_default());
        rec.push(r.labels[k].join(";"));
        rec.push(r.accepted.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}
