//! Stage orchestration: abstraction, product, synthesis, simulation, export.

use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::{build_abstraction, AbstractionParams, UmdpAbstraction};
use crate::automata::{Dfa, ProductUmdp};
use crate::config::RunConfig;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::geometry::Partition;
use crate::samples::{load_samples, NoiseModel, Samples};
use crate::sim::{self, EpisodeSettings, SweepRow};
use crate::synthesis::{robust_dp, simplify, Controller, RdpOptions, StrategyTable};

pub struct Prepared {
    pub partition: Partition,
    pub model: Box<dyn Dynamics>,
    pub dfa: Dfa,
}

pub fn prepare(cfg: &RunConfig, base_dir: Option<&Path>) -> Result<Prepared> {
    let partition = Partition::from_config(&cfg.partition)?;
    let model = cfg.model.build();
    let dfa = cfg.load_dfa(base_dir)?;
    dfa.state_labels(&partition)?;
    Ok(Prepared { partition, model, dfa })
}

/// Samples from the configured file, or drawn from the ground truth.
pub fn noise_samples(cfg: &RunConfig, base_dir: Option<&Path>) -> Result<Samples> {
    let d = cfg.noise.distribution.dim();
    match &cfg.noise.samples {
        Some(p) => {
            let p = match base_dir {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.clone(),
            };
            let s = load_samples(&p, d)?;
            Ok(if s.len() > cfg.noise.n_samples { s.prefix(cfg.noise.n_samples) } else { s })
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
            Ok(cfg.noise.distribution.draw(&mut rng, cfg.noise.n_samples))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstractionStats {
    pub n_samples: usize,
    pub n_clusters: usize,
    pub support_radius: f64,
    pub eps: f64,
    pub eps_c: f64,
    pub minutes: f64,
}

pub fn abstract_stage(cfg: &RunConfig, prep: &Prepared, samples: Samples) -> Result<(UmdpAbstraction, AbstractionStats)> {
    let t = Instant::now();
    let eps_c = cfg.eps_c();
    let noise = NoiseModel::new(samples, cfg.noise.clusters, eps_c, cfg.noise.beta_c);
    let params = AbstractionParams { mode: cfg.synthesis.mode, alpha: cfg.noise.alpha, beta_c: cfg.noise.beta_c, eps_c };
    let abs = build_abstraction(&prep.partition, prep.model.as_ref(), &noise, &params)?;
    let stats = AbstractionStats {
        n_samples: noise.n(),
        n_clusters: noise.clusters.len(),
        support_radius: noise.support.radius,
        eps: abs.ledger.eps,
        eps_c,
        minutes: t.elapsed().as_secs_f64() / 60.0,
    };
    Ok((abs, stats))
}

/// Synthesis output projected onto base cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub table: StrategyTable,
    /// Per base state, at its lifted product state.
    pub p_lower: Vec<f64>,
    pub p_upper: Vec<f64>,
    pub action: Vec<u32>,
    pub e_avg: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub product_states: usize,
    pub minutes: f64,
}

pub fn synthesize_stage(cfg: &RunConfig, prep: &Prepared, abs: &UmdpAbstraction) -> Result<Synthesis> {
    let t = Instant::now();
    let simple = simplify(abs);
    let labels = prep.dfa.state_labels(&prep.partition)?;
    let product = ProductUmdp::build(&simple, &labels, &prep.dfa)?;
    let opts = RdpOptions { objective: cfg.spec.objective, horizon: cfg.horizon(), adversary: cfg.synthesis.adversary, compute_upper: true };
    let vf = robust_dp(&product, &opts)?;
    let n = abs.n_states();
    let p_lower: Vec<f64> = (0..n).map(|s| vf.lower[product.lift(s)]).collect();
    let upper = vf.upper.as_ref().expect("upper values requested");
    let p_upper: Vec<f64> = (0..n).map(|s| upper[product.lift(s)]).collect();
    let action: Vec<u32> = (0..n).map(|s| vf.strategy[product.lift(s)]).collect();
    Ok(Synthesis {
        table: StrategyTable::from_product(&product, &vf),
        e_avg: vf.average_gap(&product).unwrap_or(0.0),
        p_lower,
        p_upper,
        action,
        iterations: vf.iterations,
        residual: vf.residual,
        converged: vf.converged,
        product_states: product.n_states(),
        minutes: t.elapsed().as_secs_f64() / 60.0,
    })
}

/// Safe cells without the unsafe label.
pub fn candidate_cells(p: &Partition) -> Vec<usize> {
    (0..p.n_cells()).filter(|&s| p.label(s) & 1 == 0).collect()
}

/// `k` distinct cells drawn uniformly with a fixed seed, in ascending order.
pub fn pick_cells(p: &Partition, k: usize, seed: u64) -> Vec<usize> {
    let cand = candidate_cells(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = sample(&mut rng, cand.len(), k.min(cand.len())).into_iter().map(|i| cand[i]).collect();
    idx.sort_unstable();
    idx
}

pub fn max_steps(cfg: &RunConfig, syn: &Synthesis) -> usize {
    cfg.simulation.max_steps.unwrap_or((10 * syn.iterations).max(1))
}

pub fn controller(prep: &Prepared, syn: &Synthesis) -> Result<Controller> {
    Controller::new(prep.partition.clone(), prep.dfa.clone(), syn.table.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rows: Vec<SweepRow>,
    pub trajectories: Vec<sim::TrajectoryRecord>,
    pub minutes: f64,
}

pub fn simulate_stage(cfg: &RunConfig, prep: &Prepared, syn: &Synthesis) -> Result<SimulationReport> {
    let t = Instant::now();
    let ctl = controller(prep, syn)?;
    let sc = &cfg.simulation;
    let cells = pick_cells(&prep.partition, sc.cells, sc.seed);
    let settings = EpisodeSettings { max_steps: max_steps(cfg, syn), objective: cfg.spec.objective };
    let rows = sim::sweep_initial_states(&ctl, prep.model.as_ref(), &cfg.noise.distribution, &cells, settings, sc.episodes, sc.seed);
    let mut trajectories = Vec::new();
    if sc.record > 0 {
        for &c in &cells {
            let x = prep.partition.cell_center(c).expect("safe cell");
            let (_, recs) = sim::simulate(&ctl, prep.model.as_ref(), &cfg.noise.distribution, &x, settings, sc.record, sim::cell_seed(sc.seed, c), true);
            trajectories.extend(recs);
        }
    }
    Ok(SimulationReport { rows, trajectories, minutes: t.elapsed().as_secs_f64() / 60.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub abstraction_min: f64,
    pub synthesis_min: f64,
    pub simulation_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub alpha: f64,
    pub e_avg: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub timings: Timings,
    pub mode: crate::abstraction::Mode,
    pub n_states: usize,
    pub n_actions: usize,
    pub product_states: usize,
    pub abstraction: AbstractionStats,
    pub mean_p_lower: f64,
    /// Upper values use the maximising adversary over the same sets.
    pub upper_adversary: String,
}

pub fn summary(cfg: &RunConfig, abs: &UmdpAbstraction, stats: &AbstractionStats, syn: &Synthesis, sim_minutes: f64) -> Summary {
    let safe = abs.n_states() - 1;
    Summary {
        name: cfg.name.clone(),
        alpha: abs.ledger.recomputed_alpha(),
        e_avg: syn.e_avg,
        iterations: syn.iterations,
        residual: syn.residual,
        converged: syn.converged,
        timings: Timings { abstraction_min: stats.minutes, synthesis_min: syn.minutes, simulation_min: sim_minutes },
        mode: abs.mode,
        n_states: abs.n_states(),
        n_actions: abs.n_actions(),
        product_states: syn.product_states,
        abstraction: *stats,
        mean_p_lower: syn.p_lower[..safe].iter().sum::<f64>() / safe.max(1) as f64,
        upper_adversary: "max over the simplified sets".into(),
    }
}

/// `state_index, region_lower_*, region_upper_*, p_lower, p_upper, action`
/// for every safe cell.
pub fn write_results_csv(p: &Partition, syn: &Synthesis, path: &Path) -> Result<()> {
    let d = p.dim();
    let mut w = csv::Writer::from_path(path).map_err(sim::csv_err)?;
    let mut header = vec!["state_index".to_string()];
    header.extend((0..d).map(|i| format!("region_lower_{i}")));
    header.extend((0..d).map(|i| format!("region_upper_{i}")));
    header.extend(["p_lower", "p_upper", "action"].map(String::from));
    w.write_record(&header).map_err(sim::csv_err)?;
    for s in 0..p.n_cells() {
        let b = p.cell_box(s).expect("grid cell");
        let mut rec = vec![s.to_string()];
        rec.extend(b.lower.iter().chain(&b.upper).map(|v| v.to_string()));
        rec.push(syn.p_lower[s].to_string());
        rec.push(syn.p_upper[s].to_string());
        rec.push(syn.action[s].to_string());
        w.write_record(&rec).map_err(sim::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let r = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

/// Files written by the full pipeline, relative to the output directory.
pub mod files {
    pub const ABSTRACTION: &str = "abstraction.json";
    pub const SYNTHESIS: &str = "synthesis.json";
    pub const STRATEGY: &str = "strategy.json";
    pub const RESULTS: &str = "results.csv";
    pub const SUMMARY: &str = "summary.json";
    pub const SWEEP: &str = "sweep.csv";
    pub const STATS: &str = "abstraction_stats.json";
    pub const TRAJECTORIES: &str = "trajectories";
}

/// Write synthesis artifacts; returns `NoConvergence` after writing when the
/// iteration did not converge.
pub fn export_synthesis(out: &Path, prep: &Prepared, syn: &Synthesis) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_json(syn, &out.join(files::SYNTHESIS))?;
    write_json(&syn.table, &out.join(files::STRATEGY))?;
    write_results_csv(&prep.partition, syn, &out.join(files::RESULTS))?;
    if !syn.converged {
        return Err(Error::NoConvergence { iterations: syn.iterations, residual: syn.residual });
    }
    Ok(())
}

pub fn export_simulation(out: &Path, prep: &Prepared, rep: &SimulationReport) -> Result<()> {
    std::fs::create_dir_all(out)?;
    sim::write_sweep_csv(&rep.rows, prep.partition.dim(), &out.join(files::SWEEP))?;
    if !rep.trajectories.is_empty() {
        let dir = out.join(files::TRAJECTORIES);
        std::fs::create_dir_all(&dir)?;
        for (k, r) in rep.trajectories.iter().enumerate() {
            sim::write_trajectory_csv(r, &dir.join(format!("episode_{k:05}.csv")))?;
        }
    }
    Ok(())
}

/// All stages in one call, without caching.
pub fn run_pipeline(cfg: &RunConfig, base_dir: Option<&Path>) -> Result<Summary> {
    let prep = prepare(cfg, base_dir)?;
    let samples = noise_samples(cfg, base_dir)?;
    let (abs, stats) = abstract_stage(cfg, &prep, samples)?;
    let out = &cfg.output;
    std::fs::create_dir_all(out)?;
    abs.write_json(&out.join(files::ABSTRACTION))?;
    write_json(&stats, &out.join(files::STATS))?;
    let syn = synthesize_stage(cfg, &prep, &abs)?;
    export_synthesis(out, &prep, &syn)?;
    let rep = simulate_stage(cfg, &prep, &syn)?;
    export_simulation(out, &prep, &rep)?;
    let sum = summary(cfg, &abs, &stats, &syn, rep.minutes);
    write_json(&sum, &out.join(files::SUMMARY))?;
    Ok(sum)
}
