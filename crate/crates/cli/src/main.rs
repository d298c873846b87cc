use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use umdp_core::abstraction::{Mode, UmdpAbstraction};
use umdp_core::automata::bundled;
use umdp_core::bench;
use umdp_core::config::{AutoTag, EpsC, RunConfig};
use umdp_core::pipeline::{self, files, AbstractionStats, Prepared, Synthesis};
use umdp_core::presets;
use umdp_core::synthesis::Adversary;

#[derive(Parser)]
#[command(name = "umdp", version, about = "Sample-based UMDP abstraction, robust synthesis and closed-loop simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the abstraction and write it to the output directory.
    Abstract(StageArgs),
    /// Synthesize a controller, reusing a cached abstraction when possible.
    Synthesize(StageArgs),
    /// Simulate the synthesized controller from sampled initial cells.
    Simulate(StageArgs),
    /// Every stage, then a summary on stdout.
    Run(StageArgs),
    /// Time the two-layer adversary against the LP adversary.
    Bench(BenchArgs),
    /// List presets, or print one as a config file.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct StageArgs {
    /// JSON run configuration.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `umdp presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Recompute every stage even when cached results match.
    #[arg(long)]
    fresh: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV of disturbance samples, one per line.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// Seed for drawing synthetic samples.
    #[arg(long)]
    sample_seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    /// A number in (0, 1) or `auto`.
    #[arg(long)]
    eps_c: Option<String>,
    #[arg(long)]
    beta_c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// full, support-only-imdp or naive-imdp.
    #[arg(long)]
    mode: Option<Mode>,
    /// two-layer or lp.
    #[arg(long)]
    adversary: Option<Adversary>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Automaton name or path.
    #[arg(long)]
    dfa: Option<String>,
    /// Fixed number of sweeps.
    #[arg(long)]
    horizon: Option<usize>,
    /// Simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Trajectories exported per simulated cell.
    #[arg(long)]
    record: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Successor-set sizes for the per-call timings.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,2000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Calls averaged per two-layer timing.
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// LP calls per size; 0 skips the LP.
    #[arg(long, default_value_t = 20)]
    lp_instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also time full synthesis on a 2-D unicycle grid.
    #[arg(long)]
    synthesis: bool,
    /// Grid cells per axis for the synthesis comparison.
    #[arg(long, default_value_t = 40)]
    grid: usize,
    /// Bellman sweeps per solver in the synthesis comparison.
    #[arg(long, default_value_t = 5)]
    sweeps: usize,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    /// Write the timing table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad inputs, 3 for numeric failures, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    use umdp_core::Error as E;
    match e.chain().find_map(|c| c.downcast_ref::<E>()) {
        Some(err) if err.is_numeric() => 3,
        Some(E::Io(_)) | Some(E::Json(_)) | None => 1,
        Some(_) => 2,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Abstract(a) => {
            let job = Job::new(&a)?;
            let (_, stats) = job.abstraction()?;
            eprintln!("abstraction: {} clusters, eps {:.3e}, eps_c {:.3e}", stats.n_clusters, stats.eps, stats.eps_c);
            Ok(())
        }
        Command::Synthesize(a) => {
            let job = Job::new(&a)?;
            let (abs, stats, syn) = job.synthesis()?;
            job.write_summary(&abs, &stats, &syn, 0.0)?;
            eprintln!("synthesis: e_avg {:.4}, {} sweeps", syn.e_avg, syn.iterations);
            Ok(())
        }
        Command::Simulate(a) | Command::Run(a) => {
            let job = Job::new(&a)?;
            let (abs, stats, syn) = job.synthesis()?;
            let rep = pipeline::simulate_stage(&job.cfg, &job.prep, &syn)?;
            pipeline::export_simulation(&job.out, &job.prep, &rep)?;
            let sum = job.write_summary(&abs, &stats, &syn, rep.minutes)?;
            println!("{}", serde_json::to_string_pretty(&sum)?);
            Ok(())
        }
        Command::Bench(b) => run_bench(&b),
        Command::Presets { show } => {
            match show {
                Some(name) => println!("{}", presets::preset(&name)?.to_json()),
                None => presets::NAMES.iter().for_each(|n| println!("{n}")),
            }
            Ok(())
        }
    }
}

fn apply(cfg: &mut RunConfig, o: &Overrides) -> Result<()> {
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.output, o.output);
    if let Some(p) = &o.samples {
        cfg.noise.samples = Some(p.clone());
    }
    set!(cfg.noise.n_samples, o.n_samples);
    set!(cfg.noise.seed, o.sample_seed);
    set!(cfg.noise.clusters, o.clusters);
    set!(cfg.noise.beta_c, o.beta_c);
    set!(cfg.noise.alpha, o.alpha);
    if let Some(e) = &o.eps_c {
        cfg.noise.eps_c = if e == "auto" {
            EpsC::Auto(AutoTag::Auto)
        } else {
            EpsC::Value(e.parse().map_err(|_| umdp_core::Error::Config(format!("--eps-c `{e}` is neither a number nor `auto`")))?)
        };
    }
    set!(cfg.synthesis.mode, o.mode);
    set!(cfg.synthesis.adversary, o.adversary);
    set!(cfg.synthesis.tol, o.tol);
    set!(cfg.synthesis.max_iters, o.max_iters);
    set!(cfg.spec.dfa, o.dfa);
    if o.horizon.is_some() {
        cfg.spec.horizon = o.horizon;
    }
    set!(cfg.simulation.seed, o.seed);
    set!(cfg.simulation.episodes, o.episodes);
    set!(cfg.simulation.cells, o.cells);
    if o.max_steps.is_some() {
        cfg.simulation.max_steps = o.max_steps;
    }
    set!(cfg.simulation.record, o.record);
    cfg.validate()?;
    Ok(())
}

fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

const CACHE: &str = "cache.json";

/// One configured run with its output directory and stage cache.
struct Job {
    cfg: RunConfig,
    base: Option<PathBuf>,
    prep: Prepared,
    out: PathBuf,
    fresh: bool,
}

impl Job {
    fn new(a: &StageArgs) -> Result<Self> {
        let (mut cfg, base) = match (&a.config, &a.preset) {
            (Some(p), _) => (RunConfig::load(p)?, p.parent().map(Path::to_path_buf)),
            (None, Some(name)) => (presets::preset(name)?, None),
            (None, None) => unreachable!("clap requires a source"),
        };
        apply(&mut cfg, &a.overrides)?;
        let prep = pipeline::prepare(&cfg, base.as_deref())?;
        let out = cfg.output.clone();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Job { cfg, base, prep, out, fresh: a.fresh })
    }

    /// Hex digest of a file named in the config; empty when unreadable, in
    /// which case the stage that reads it reports the error.
    fn file_digest(&self, path: &Path) -> String {
        let p = match &self.base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        };
        std::fs::read(p).map(|bytes| hex::encode(Sha256::digest(bytes))).unwrap_or_default()
    }

    fn abstraction_key(&self) -> String {
        let samples = self.cfg.noise.samples.as_deref().map(|p| self.file_digest(p)).unwrap_or_default();
        digest(&[&self.cfg.abstraction_inputs(), &samples])
    }

    fn synthesis_key(&self) -> String {
        let spec = serde_json::to_string(&self.cfg.spec).expect("serializable");
        let syn = serde_json::to_string(&self.cfg.synthesis).expect("serializable");
        let dfa = match bundled(&self.cfg.spec.dfa) {
            Some(_) => String::new(),
            None => self.file_digest(Path::new(&self.cfg.spec.dfa)),
        };
        digest(&[&self.abstraction_key(), &spec, &syn, &dfa])
    }

    fn cache(&self) -> serde_json::Value {
        std::fs::read_to_string(self.out.join(CACHE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_else(|| serde_json::json!({}))
    }

    fn cached(&self, stage: &str, key: &str, needed: &[&str]) -> bool {
        !self.fresh && self.cache()[stage] == key && needed.iter().all(|f| self.out.join(f).exists())
    }

    fn record(&self, stage: &str, key: Option<&str>) -> Result<()> {
        let mut c = self.cache();
        c[stage] = key.map_or(serde_json::Value::Null, |k| k.into());
        if stage == "abstraction" {
            c["synthesis"] = serde_json::Value::Null;
        }
        std::fs::write(self.out.join(CACHE), serde_json::to_string_pretty(&c)?)?;
        Ok(())
    }

    fn abstraction(&self) -> Result<(UmdpAbstraction, AbstractionStats)> {
        let key = self.abstraction_key();
        if self.cached("abstraction", &key, &[files::ABSTRACTION, files::STATS]) {
            eprintln!("abstraction: cached");
            let abs = UmdpAbstraction::read_json(&self.out.join(files::ABSTRACTION))?;
            let stats = pipeline::read_json(&self.out.join(files::STATS))?;
            return Ok((abs, stats));
        }
        let samples = pipeline::noise_samples(&self.cfg, self.base.as_deref())?;
        let (abs, stats) = pipeline::abstract_stage(&self.cfg, &self.prep, samples)?;
        abs.write_json(&self.out.join(files::ABSTRACTION))?;
        pipeline::write_json(&stats, &self.out.join(files::STATS))?;
        self.record("abstraction", Some(&key))?;
        Ok((abs, stats))
    }

    fn synthesis(&self) -> Result<(UmdpAbstraction, AbstractionStats, Synthesis)> {
        let (abs, stats) = self.abstraction()?;
        let key = self.synthesis_key();
        if self.cached("synthesis", &key, &[files::SYNTHESIS]) {
            eprintln!("synthesis: cached");
            let syn = pipeline::read_json(&self.out.join(files::SYNTHESIS))?;
            return Ok((abs, stats, syn));
        }
        let syn = pipeline::synthesize_stage(&self.cfg, &self.prep, &abs)?;
        // a non-converged result is written for inspection but never cached
        self.record("synthesis", None)?;
        pipeline::export_synthesis(&self.out, &self.prep, &syn)?;
        self.record("synthesis", Some(&key))?;
        Ok((abs, stats, syn))
    }

    fn write_summary(&self, abs: &UmdpAbstraction, stats: &AbstractionStats, syn: &Synthesis, sim_minutes: f64) -> Result<pipeline::Summary> {
        let sum = pipeline::summary(&self.cfg, abs, stats, syn, sim_minutes);
        pipeline::write_json(&sum, &self.out.join(files::SUMMARY))?;
        Ok(sum)
    }
}

fn run_bench(b: &BenchArgs) -> Result<()> {
    let rows = bench::bench_adversary(&b.sizes, b.instances, b.repeats, b.lp_instances, b.seed);
    println!("{:>8} {:>14} {:>14} {:>8}", "|Post|", "two-layer [s]", "lp [s]", "ratio");
    for r in &rows {
        let lp = r.lp_median_s.map_or("-".to_string(), |t| format!("{t:.3e}"));
        let ratio = r.lp_median_s.map_or("-".to_string(), |t| format!("{:.1}", t / r.two_layer_median_s));
        println!("{:>8} {:>14.3e} {:>14} {:>8}", r.n_post, r.two_layer_median_s, lp, ratio);
    }
    let synthesis = if b.synthesis {
        let mut cfg = presets::unicycle2d_phi2(b.grid);
        cfg.noise.n_samples = b.n_samples;
        cfg.validate()?;
        let t = bench::bench_synthesis(&cfg, b.sweeps)?;
        println!(
            "synthesis on {} states x {} actions ({} product states), {} sweeps: two-layer {:.2} s, lp {:.2} s, speedup {:.1}x",
            t.n_states, t.n_actions, t.product_states, t.sweeps, t.two_layer_s, t.lp_s, t.speedup
        );
        Some(t)
    } else {
        None
    };
    if let Some(p) = &b.json {
        let v = serde_json::json!({ "per_call": rows, "synthesis": synthesis });
        std::fs::write(p, serde_json::to_string_pretty(&v)?)?;
    }
    Ok(())
}
